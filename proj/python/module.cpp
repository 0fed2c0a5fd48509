#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dispatch/baseline.hpp"
#include "dispatch/dne.hpp"
#include "dispatch/errors.hpp"
#include "dispatch/model.hpp"
#include "dispatch/obp.hpp"
#include "dispatch/sampling.hpp"
#include "dispatch/sim.hpp"
#include "dispatch/synth.hpp"

namespace py = pybind11;
using namespace dispatch;

PYBIND11_MODULE(dispatchkit, m) {
  m.doc() = "Robust dispatch toolkit: admissible renewable windows, operating "
            "base points, baselines, and a receding-horizon simulator.";

  // Base registered first so the subclass translators are tried before it.
  auto exc_base = py::register_exception<DispatchError>(m, "DispatchError");
  py::register_exception<SchemaError>(m, "SchemaError", exc_base);
  py::register_exception<TopologyError>(m, "TopologyError", exc_base);
  py::register_exception<InvariantError>(m, "InvariantError", exc_base);
  py::register_exception<DimensionError>(m, "DimensionError", exc_base);
  auto exc_solve = py::register_exception<SolveError>(m, "SolveError", exc_base);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", exc_solve);

  py::enum_<ControlClass>(m, "ControlClass")
      .value("Ccu", ControlClass::Ccu)
      .value("Nccu", ControlClass::Nccu);

  py::class_<CostSegment>(m, "CostSegment")
      .def(py::init<>())
      .def_readwrite("breakpoint", &CostSegment::breakpoint)
      .def_readwrite("marginal_cost", &CostSegment::marginal_cost);

  py::class_<CostCurve>(m, "CostCurve")
      .def(py::init<>())
      .def_readwrite("constant_term", &CostCurve::constant_term)
      .def_readwrite("segments", &CostCurve::segments)
      .def("value", &CostCurve::value, py::arg("p_min"), py::arg("p"))
      .def("max_marginal", &CostCurve::max_marginal);

  py::class_<ConventionalUnit>(m, "ConventionalUnit")
      .def(py::init<>())
      .def_readwrite("id", &ConventionalUnit::id)
      .def_readwrite("bus", &ConventionalUnit::bus)
      .def_readwrite("control_class", &ConventionalUnit::control_class)
      .def_readwrite("p_min", &ConventionalUnit::p_min)
      .def_readwrite("p_max", &ConventionalUnit::p_max)
      .def_readwrite("ramp", &ConventionalUnit::ramp)
      .def_readwrite("corrective_adjust", &ConventionalUnit::corrective_adjust)
      .def_readwrite("p_current", &ConventionalUnit::p_current)
      .def_readwrite("cost", &ConventionalUnit::cost)
      .def("cost_at", &ConventionalUnit::cost_at, py::arg("p"));

  py::class_<VrgUnit>(m, "VrgUnit")
      .def(py::init<>())
      .def_readwrite("id", &VrgUnit::id)
      .def_readwrite("bus", &VrgUnit::bus)
      .def_readwrite("capacity", &VrgUnit::capacity);

  py::class_<Line>(m, "Line")
      .def(py::init<>())
      .def_readwrite("id", &Line::id)
      .def_readwrite("from_bus", &Line::from_bus)
      .def_readwrite("to_bus", &Line::to_bus)
      .def_readwrite("reactance", &Line::reactance)
      .def_readwrite("capacity", &Line::capacity);

  py::class_<PowerSystem>(m, "PowerSystem")
      .def(py::init<>())
      .def_readwrite("buses", &PowerSystem::buses)
      .def_readwrite("slack_bus", &PowerSystem::slack_bus)
      .def_readwrite("lines", &PowerSystem::lines)
      .def_readwrite("conventional_units", &PowerSystem::conventional_units)
      .def_readwrite("vrg_units", &PowerSystem::vrg_units)
      .def_readwrite("loads", &PowerSystem::loads)
      .def("bus_index", &PowerSystem::bus_index, py::arg("name"))
      .def("slack_index", &PowerSystem::slack_index)
      .def("total_load", &PowerSystem::total_load)
      .def("max_marginal_cost", &PowerSystem::max_marginal_cost)
      .def("validate", &PowerSystem::validate);

  py::class_<ShiftFactorMatrix>(m, "ShiftFactorMatrix")
      .def(py::init<>())
      .def_readwrite("entries", &ShiftFactorMatrix::entries)
      .def("line_count", &ShiftFactorMatrix::line_count)
      .def("bus_count", &ShiftFactorMatrix::bus_count);

  m.def("load_case", &load_case, py::arg("path"));
  m.def("parse_case_text", &parse_case_text, py::arg("json_text"));
  m.def("case_to_json_text", &case_to_json_text, py::arg("system"));
  m.def("compute_shift_factors", &compute_shift_factors, py::arg("system"));
  m.def("line_flows", &line_flows, py::arg("sf"), py::arg("injections"));

  py::class_<HistoryRecord>(m, "HistoryRecord")
      .def(py::init<>())
      .def_readwrite("timestamp", &HistoryRecord::timestamp)
      .def_readwrite("forecast", &HistoryRecord::forecast)
      .def_readwrite("error", &HistoryRecord::error)
      .def_readwrite("observed", &HistoryRecord::observed);

  py::class_<SampleSet>(m, "SampleSet")
      .def(py::init<>())
      .def_readwrite("indices", &SampleSet::indices)
      .def_readwrite("errors", &SampleSet::errors)
      .def_readwrite("origin_forecast", &SampleSet::origin_forecast)
      .def("size", &SampleSet::size);

  m.def("select_samples", &select_samples, py::arg("history"), py::arg("upcoming_forecast"),
        py::arg("n"));
  m.def("clip_sample", &clip_sample, py::arg("error"), py::arg("upcoming_forecast"),
        py::arg("capacities"));
  m.def("clip_sample_set", &clip_sample_set, py::arg("samples"), py::arg("capacities"));
  m.def("vrg_capacities", &vrg_capacities, py::arg("system"));
  m.def("load_history_csv", &load_history_csv, py::arg("path"), py::arg("system"));
  m.def("write_history_csv", &write_history_csv, py::arg("path"), py::arg("records"),
        py::arg("system"));

  py::class_<CcgIteration>(m, "CcgIteration")
      .def_readonly("iteration", &CcgIteration::iteration)
      .def_readonly("master_objective", &CcgIteration::master_objective)
      .def_readonly("theta", &CcgIteration::theta)
      .def_readonly("scenario", &CcgIteration::scenario);

  py::class_<CcgTrace>(m, "CcgTrace")
      .def_readonly("iterations", &CcgTrace::iterations)
      .def_readonly("terminal_theta", &CcgTrace::terminal_theta)
      .def_readonly("converged", &CcgTrace::converged);

  py::class_<CcgOptions>(m, "CcgOptions")
      .def(py::init<>())
      .def_readwrite("epsilon", &CcgOptions::epsilon)
      .def_readwrite("max_iterations", &CcgOptions::max_iterations);

  py::enum_<DneFormulation>(m, "DneFormulation")
      .value("BigM", DneFormulation::BigM)
      .value("Extended", DneFormulation::Extended);

  py::class_<DneConfig>(m, "DneConfig")
      .def(py::init<>())
      .def_readwrite("formulation", &DneConfig::formulation)
      .def_readwrite("initial_k", &DneConfig::initial_k)
      .def_readwrite("ccg", &DneConfig::ccg);

  py::class_<DneDecision>(m, "DneDecision")
      .def_readonly("lower", &DneDecision::lower)
      .def_readonly("upper", &DneDecision::upper)
      .def_readonly("base_vrg", &DneDecision::base_vrg)
      .def_readonly("base_obp", &DneDecision::base_obp)
      .def_readonly("indicators", &DneDecision::indicators)
      .def_readonly("coverage_count", &DneDecision::coverage_count)
      .def_readonly("k_used", &DneDecision::k_used)
      .def_readonly("ccg_iterations", &DneDecision::ccg_iterations)
      .def_readonly("trace", &DneDecision::trace);

  m.def("solve_dne", &solve_dne, py::arg("system"), py::arg("sf"), py::arg("samples"),
        py::arg("forecast"), py::arg("config") = DneConfig{});
  m.def("dne_decision_to_json", &dne_decision_to_json, py::arg("decision"));

  py::enum_<PenaltyMode>(m, "PenaltyMode")
      .value("Strict", PenaltyMode::Strict)
      .value("Penalized", PenaltyMode::Penalized);

  py::class_<ObpConfig>(m, "ObpConfig")
      .def(py::init<>())
      .def_readwrite("penalty_mode", &ObpConfig::penalty_mode)
      .def_readwrite("penalty_price", &ObpConfig::penalty_price)
      .def_readwrite("ccg", &ObpConfig::ccg);

  py::class_<CorrectiveDispatch>(m, "CorrectiveDispatch")
      .def_readonly("outputs", &CorrectiveDispatch::outputs)
      .def_readonly("cost", &CorrectiveDispatch::cost)
      .def_readonly("slack_used", &CorrectiveDispatch::slack_used);

  py::class_<ObpDecision>(m, "ObpDecision")
      .def_readonly("base_obp", &ObpDecision::base_obp)
      .def_readonly("base_vrg", &ObpDecision::base_vrg)
      .def_readonly("corrective", &ObpDecision::corrective)
      .def_readonly("per_sample_costs", &ObpDecision::per_sample_costs)
      .def_readonly("expected_cost", &ObpDecision::expected_cost)
      .def_readonly("ccg_iterations", &ObpDecision::ccg_iterations)
      .def_readonly("trace", &ObpDecision::trace);

  m.def("resolve_penalty_price", &resolve_penalty_price, py::arg("system"),
        py::arg("configured"));
  m.def("corrective_cost", &corrective_cost, py::arg("system"), py::arg("sf"),
        py::arg("base_obp"), py::arg("realized_vrg"), py::arg("mode") = PenaltyMode::Strict,
        py::arg("penalty_price") = -1.0);
  m.def("solve_obp", &solve_obp, py::arg("system"), py::arg("sf"), py::arg("samples"),
        py::arg("forecast"), py::arg("lower"), py::arg("upper"),
        py::arg("config") = ObpConfig{});
  m.def("obp_decision_to_json", &obp_decision_to_json, py::arg("decision"));

  py::class_<EdDecision>(m, "EdDecision")
      .def_readonly("obp", &EdDecision::obp)
      .def_readonly("vrg_dispatch", &EdDecision::vrg_dispatch)
      .def_readonly("total_cost", &EdDecision::total_cost)
      .def_readonly("lmp", &EdDecision::lmp);

  py::class_<OdneConfig>(m, "OdneConfig")
      .def(py::init<>())
      .def_readwrite("ccg", &OdneConfig::ccg);

  py::class_<OdneDecision>(m, "OdneDecision")
      .def_readonly("lower", &OdneDecision::lower)
      .def_readonly("upper", &OdneDecision::upper)
      .def_readonly("weighted_width", &OdneDecision::weighted_width)
      .def_readonly("degenerate", &OdneDecision::degenerate)
      .def_readonly("ccg_iterations", &OdneDecision::ccg_iterations)
      .def_readonly("trace", &OdneDecision::trace);

  m.def("solve_ed", &solve_ed, py::arg("system"), py::arg("sf"), py::arg("forecast"));
  m.def("solve_odne", &solve_odne, py::arg("system"), py::arg("sf"), py::arg("ed"),
        py::arg("config") = OdneConfig{});
  m.def("odne_record_to_json", &odne_record_to_json, py::arg("ed"), py::arg("odne"));

  py::enum_<SimMethod>(m, "SimMethod")
      .value("Proposed", SimMethod::Proposed)
      .value("Odne", SimMethod::Odne);

  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_readwrite("method", &SimulationConfig::method)
      .def_readwrite("n_dne", &SimulationConfig::n_dne)
      .def_readwrite("n_obp", &SimulationConfig::n_obp)
      .def_readwrite("epsilon", &SimulationConfig::epsilon)
      .def_readwrite("horizon", &SimulationConfig::horizon)
      .def_readwrite("penalty_mode", &SimulationConfig::penalty_mode);

  py::class_<DispatchDecision>(m, "DispatchDecision")
      .def(py::init<>())
      .def_readwrite("base_obp", &DispatchDecision::base_obp)
      .def_readwrite("lower", &DispatchDecision::lower)
      .def_readwrite("upper", &DispatchDecision::upper);

  py::class_<PeriodResult>(m, "PeriodResult")
      .def_readonly("period", &PeriodResult::period)
      .def_readonly("covered", &PeriodResult::covered)
      .def_readonly("flagged", &PeriodResult::flagged)
      .def_readonly("note", &PeriodResult::note)
      .def_readonly("lower", &PeriodResult::lower)
      .def_readonly("upper", &PeriodResult::upper)
      .def_readonly("observed", &PeriodResult::observed)
      .def_readonly("realized", &PeriodResult::realized)
      .def_readonly("corrective", &PeriodResult::corrective)
      .def_readonly("dne_width", &PeriodResult::dne_width)
      .def_readonly("wind_output_mw", &PeriodResult::wind_output_mw)
      .def_readonly("dispatch_cost", &PeriodResult::dispatch_cost)
      .def_readonly("slack_used", &PeriodResult::slack_used)
      .def_readonly("cpu_dne_s", &PeriodResult::cpu_dne_s)
      .def_readonly("cpu_obp_s", &PeriodResult::cpu_obp_s);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("per_period", &SimReport::per_period)
      .def_readonly("coverage_rate", &SimReport::coverage_rate)
      .def_readonly("avg_cost", &SimReport::avg_cost)
      .def_readonly("avg_wind", &SimReport::avg_wind)
      .def_readonly("avg_cpu", &SimReport::avg_cpu);

  m.def("realize_dispatch", &realize_dispatch, py::arg("system"), py::arg("sf"),
        py::arg("decision"), py::arg("observed"), py::arg("mode"));
  m.def("run_simulation", &run_simulation, py::arg("system"), py::arg("history"),
        py::arg("validation"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("write_periods_csv", &write_periods_csv, py::arg("path"), py::arg("report"),
        py::arg("system"), py::arg("config"));
  m.def("summary_to_json", &summary_to_json, py::arg("report"), py::arg("config"));

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("seed", &SynthConfig::seed)
      .def_readwrite("history_rows", &SynthConfig::history_rows)
      .def_readwrite("validation_rows", &SynthConfig::validation_rows)
      .def_readwrite("ar_coef", &SynthConfig::ar_coef)
      .def_readwrite("noise_scale", &SynthConfig::noise_scale)
      .def_readwrite("error_base", &SynthConfig::error_base)
      .def_readwrite("error_slope", &SynthConfig::error_slope);

  py::class_<SynthData>(m, "SynthData")
      .def_readonly("history", &SynthData::history)
      .def_readonly("validation", &SynthData::validation);

  m.def("generate_synthetic", &generate_synthetic, py::arg("system"), py::arg("config"));

  m.attr("__version__") = "0.1.0";
}
