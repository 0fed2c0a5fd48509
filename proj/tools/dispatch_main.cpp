#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dispatch/baseline.hpp"
#include "dispatch/dne.hpp"
#include "dispatch/errors.hpp"
#include "dispatch/model.hpp"
#include "dispatch/obp.hpp"
#include "dispatch/sampling.hpp"
#include "dispatch/sim.hpp"
#include "dispatch/synth.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dispatch;

namespace {

struct Options {
  std::string case_path;
  std::string history_path;
  std::string validation_path;
  std::string manifest_path;
  std::string out = ".";
  std::string method = "proposed";
  int period = 0;
  int n_dne = 400;
  int n_obp = 20;
  double epsilon = 1e-4;
  bool emit_lp = false;
  bool penalty = false;
  bool strict = false;
  std::uint64_t seed = 1;
  int rows = 1000;
  int validation_rows = 240;
  double ar_coef = 0.85;
  double noise_scale = 0.08;
  double error_base = 0.02;
  double error_slope = 0.14;
};

struct Manifest {
  std::string case_path;
  std::string history_path;
  std::string validation_path;
  std::string output_dir = ".";
  SimulationConfig config;
  bool horizon_given = false;
};

SimMethod parse_method(const std::string& name) {
  if (name == "proposed") return SimMethod::Proposed;
  if (name == "odne") return SimMethod::Odne;
  throw SchemaError("unknown method '" + name + "' (expected 'proposed' or 'odne')");
}

PenaltyMode parse_penalty_mode(const std::string& name) {
  if (name == "strict") return PenaltyMode::Strict;
  if (name == "penalized") return PenaltyMode::Penalized;
  throw SchemaError("unknown penalty_mode '" + name + "' (expected 'strict' or 'penalized')");
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open manifest '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw SchemaError("manifest '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw SchemaError("manifest '" + path + "' must be a JSON object");

  Manifest m;
  for (const auto& [key, value] : j.items()) {
    if (key == "case_path" || key == "history_path" || key == "validation_path" ||
        key == "output_dir") {
      if (!value.is_string()) throw SchemaError("manifest field '" + key + "' must be a string");
    } else if (key == "config" || key == "rng_seed") {
      // handled below; rng_seed only matters for synthetic generation
    } else {
      throw SchemaError("manifest '" + path + "': unknown field '" + key + "'");
    }
  }
  if (!j.contains("case_path") || !j.contains("history_path") || !j.contains("validation_path"))
    throw SchemaError("manifest '" + path +
                      "' needs case_path, history_path, and validation_path");
  m.case_path = j["case_path"].get<std::string>();
  m.history_path = j["history_path"].get<std::string>();
  m.validation_path = j["validation_path"].get<std::string>();
  if (j.contains("output_dir")) m.output_dir = j["output_dir"].get<std::string>();

  if (j.contains("config")) {
    const nlohmann::json& c = j["config"];
    if (!c.is_object()) throw SchemaError("manifest 'config' must be an object");
    for (const auto& [key, value] : c.items()) {
      if (key == "method") {
        m.config.method = parse_method(value.get<std::string>());
      } else if (key == "n_dne") {
        m.config.n_dne = value.get<int>();
      } else if (key == "n_obp") {
        m.config.n_obp = value.get<int>();
      } else if (key == "epsilon") {
        m.config.epsilon = value.get<double>();
      } else if (key == "penalty_mode") {
        m.config.penalty_mode = parse_penalty_mode(value.get<std::string>());
      } else if (key == "horizon") {
        if (!value.is_array()) throw SchemaError("manifest 'horizon' must be an array");
        m.config.horizon.clear();
        for (const auto& v : value) m.config.horizon.push_back(v.get<int>());
        m.horizon_given = true;
      } else {
        throw SchemaError("manifest config: unknown field '" + key + "'");
      }
    }
  }
  return m;
}

void prepare_out_dir(const std::string& out, bool emit_lp) {
  fs::create_directories(out);
  if (emit_lp) {
    // The solvers watch this variable and dump every model they touch.
    setenv("DISPATCH_LP_DUMP", out.c_str(), 1);
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw SchemaError("cannot write '" + path + "'");
  f << text;
  if (!f) throw SchemaError("failed while writing '" + path + "'");
}

const HistoryRecord& validation_row(const std::vector<HistoryRecord>& validation, int period) {
  if (period < 0 || period >= static_cast<int>(validation.size()))
    throw InvariantError("period " + std::to_string(period) +
                         " is outside the validation series (" +
                         std::to_string(validation.size()) + " rows)");
  return validation[period];
}

PenaltyMode selected_mode(const Options& opt) {
  return opt.penalty ? PenaltyMode::Penalized : PenaltyMode::Strict;
}

int cmd_dne(const Options& opt) {
  prepare_out_dir(opt.out, opt.emit_lp);
  PowerSystem sys = load_case(opt.case_path);
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  std::vector<HistoryRecord> history = load_history_csv(opt.history_path, sys);
  std::vector<HistoryRecord> validation = load_history_csv(opt.validation_path, sys);
  const HistoryRecord& rec = validation_row(validation, opt.period);

  SampleSet samples = select_samples(history, rec.forecast, opt.n_dne);
  DneConfig cfg;
  cfg.ccg.epsilon = opt.epsilon;
  DneDecision dec = solve_dne(sys, sf, samples, rec.forecast, cfg);

  const std::string path = (fs::path(opt.out) / "dne.json").string();
  write_text(path, dne_decision_to_json(dec));
  std::cout << "coverage: " << dec.coverage_count << " of " << samples.size() << " samples\n";
  for (std::size_t j = 0; j < sys.vrg_units.size(); ++j)
    std::cout << sys.vrg_units[j].id << ": [" << dec.lower[j] << ", " << dec.upper[j]
              << "] MW\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_obp(const Options& opt) {
  prepare_out_dir(opt.out, opt.emit_lp);
  PowerSystem sys = load_case(opt.case_path);
  ShiftFactorMatrix sf = compute_shift_factors(sys);
  std::vector<HistoryRecord> history = load_history_csv(opt.history_path, sys);
  std::vector<HistoryRecord> validation = load_history_csv(opt.validation_path, sys);
  const HistoryRecord& rec = validation_row(validation, opt.period);

  SampleSet s_dne = select_samples(history, rec.forecast, opt.n_dne);
  DneConfig dcfg;
  dcfg.ccg.epsilon = opt.epsilon;
  DneDecision dne = solve_dne(sys, sf, s_dne, rec.forecast, dcfg);

  SampleSet s_obp = select_samples(history, rec.forecast, opt.n_obp);
  ObpConfig ocfg;
  ocfg.penalty_mode = selected_mode(opt);
  ocfg.ccg.epsilon = opt.epsilon;
  ObpDecision obp = solve_obp(sys, sf, s_obp, rec.forecast, dne.lower, dne.upper, ocfg);

  const std::string dne_path = (fs::path(opt.out) / "dne.json").string();
  const std::string obp_path = (fs::path(opt.out) / "obp.json").string();
  write_text(dne_path, dne_decision_to_json(dne));
  write_text(obp_path, obp_decision_to_json(obp));
  std::cout << "expected cost: " << obp.expected_cost << "\n";
  for (std::size_t i = 0; i < sys.conventional_units.size(); ++i)
    std::cout << sys.conventional_units[i].id << ": " << obp.base_obp[i] << " MW\n";
  std::cout << "wrote " << dne_path << " and " << obp_path << "\n";
  return 0;
}

Manifest manifest_from(const Options& opt, const CLI::App* sub) {
  Manifest m;
  if (!opt.manifest_path.empty()) {
    m = load_manifest(opt.manifest_path);
    // Explicit flags override the manifest for quick experiments.
    if (sub->count("--case")) m.case_path = opt.case_path;
    if (sub->count("--history")) m.history_path = opt.history_path;
    if (sub->count("--validation")) m.validation_path = opt.validation_path;
    if (sub->count("--out")) m.output_dir = opt.out;
    if (sub->count("--method")) m.config.method = parse_method(opt.method);
    if (sub->count("--n-dne")) m.config.n_dne = opt.n_dne;
    if (sub->count("--n-obp")) m.config.n_obp = opt.n_obp;
    if (sub->count("--epsilon")) m.config.epsilon = opt.epsilon;
  } else {
    if (opt.case_path.empty() || opt.history_path.empty() || opt.validation_path.empty())
      throw SchemaError("run/compare need --manifest or all of --case, --history, --validation");
    m.case_path = opt.case_path;
    m.history_path = opt.history_path;
    m.validation_path = opt.validation_path;
    m.output_dir = opt.out;
    m.config.method = parse_method(opt.method);
    m.config.n_dne = opt.n_dne;
    m.config.n_obp = opt.n_obp;
    m.config.epsilon = opt.epsilon;
  }
  if (sub->count("--strict")) m.config.penalty_mode = PenaltyMode::Strict;
  if (sub->count("--penalty")) m.config.penalty_mode = PenaltyMode::Penalized;
  return m;
}

SimReport run_one(const PowerSystem& sys, const std::vector<HistoryRecord>& history,
                  const std::vector<HistoryRecord>& validation, Manifest& m,
                  const std::string& suffix) {
  SimReport rep = run_simulation(sys, history, validation, m.config);
  const std::string csv =
      (fs::path(m.output_dir) / ("periods" + suffix + ".csv")).string();
  const std::string json =
      (fs::path(m.output_dir) / ("summary" + suffix + ".json")).string();
  write_periods_csv(csv, rep, sys, m.config);
  write_text(json, summary_to_json(rep, m.config));
  std::cout << (m.config.method == SimMethod::Proposed ? "proposed" : "odne") << ": periods "
            << rep.per_period.size() << ", coverage_rate " << rep.coverage_rate << ", avg_cost "
            << rep.avg_cost << ", avg_wind " << rep.avg_wind << "\n";
  std::cout << "wrote " << csv << " and " << json << "\n";
  return rep;
}

int cmd_run(const Options& opt, const CLI::App* sub) {
  Manifest m = manifest_from(opt, sub);
  prepare_out_dir(m.output_dir, opt.emit_lp);
  PowerSystem sys = load_case(m.case_path);
  std::vector<HistoryRecord> history = load_history_csv(m.history_path, sys);
  std::vector<HistoryRecord> validation = load_history_csv(m.validation_path, sys);
  if (m.config.horizon.empty()) {
    for (int p = 0; p < static_cast<int>(validation.size()); ++p)
      m.config.horizon.push_back(p);
  }
  run_one(sys, history, validation, m, "");
  return 0;
}

int cmd_compare(const Options& opt, const CLI::App* sub) {
  Manifest m = manifest_from(opt, sub);
  prepare_out_dir(m.output_dir, opt.emit_lp);
  PowerSystem sys = load_case(m.case_path);
  std::vector<HistoryRecord> history = load_history_csv(m.history_path, sys);
  std::vector<HistoryRecord> validation = load_history_csv(m.validation_path, sys);
  if (m.config.horizon.empty()) {
    for (int p = 0; p < static_cast<int>(validation.size()); ++p)
      m.config.horizon.push_back(p);
  }

  Manifest mp = m;
  mp.config.method = SimMethod::Proposed;
  SimReport proposed = run_one(sys, history, validation, mp, "_proposed");
  Manifest mo = m;
  mo.config.method = SimMethod::Odne;
  SimReport odne = run_one(sys, history, validation, mo, "_odne");

  nlohmann::json j;
  j["proposed"] = nlohmann::json::parse(summary_to_json(proposed, mp.config));
  j["odne"] = nlohmann::json::parse(summary_to_json(odne, mo.config));
  j["coverage_rate_delta"] = proposed.coverage_rate - odne.coverage_rate;
  j["avg_cost_delta"] = proposed.avg_cost - odne.avg_cost;
  j["avg_wind_delta"] = proposed.avg_wind - odne.avg_wind;
  const std::string path = (fs::path(m.output_dir) / "compare.json").string();
  write_text(path, j.dump(2) + "\n");
  std::cout << "coverage_rate delta (proposed - odne): "
            << proposed.coverage_rate - odne.coverage_rate << "\n";
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_gen_synthetic(const Options& opt) {
  prepare_out_dir(opt.out, false);
  PowerSystem sys = load_case(opt.case_path);
  SynthConfig cfg;
  cfg.seed = opt.seed;
  cfg.history_rows = opt.rows;
  cfg.validation_rows = opt.validation_rows;
  cfg.ar_coef = opt.ar_coef;
  cfg.noise_scale = opt.noise_scale;
  cfg.error_base = opt.error_base;
  cfg.error_slope = opt.error_slope;
  SynthData data = generate_synthetic(sys, cfg);

  const std::string hist = (fs::path(opt.out) / "history.csv").string();
  const std::string val = (fs::path(opt.out) / "validation.csv").string();
  write_history_csv(hist, data.history, sys);
  write_history_csv(val, data.validation, sys);
  std::cout << "wrote " << hist << " (" << data.history.size() << " rows) and " << val << " ("
            << data.validation.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"dispatchkit: do-not-exceed limits and operating base points for power dispatch"};
  app.require_subcommand(1);

  auto add_common = [&opt](CLI::App* sub, bool needs_wind) {
    sub->add_option("--case", opt.case_path, "case JSON file")->check(CLI::ExistingFile);
    if (needs_wind) {
      sub->add_option("--history", opt.history_path, "wind history CSV")
          ->check(CLI::ExistingFile);
      sub->add_option("--validation", opt.validation_path, "validation series CSV")
          ->check(CLI::ExistingFile);
    }
    sub->add_option("--out", opt.out, "output directory (default .)");
  };

  CLI::App* dne = app.add_subcommand("dne", "solve one period's do-not-exceed limits");
  add_common(dne, true);
  dne->get_option("--case")->required();
  dne->get_option("--history")->required();
  dne->get_option("--validation")->required();
  dne->add_option("--period", opt.period, "validation row to solve (default 0)")
      ->check(CLI::Range(0, 1000000));
  dne->add_option("--n-dne,--samples", opt.n_dne, "range-stage sample count (default 400)")
      ->check(CLI::Range(1, 1000000));
  dne->add_option("--epsilon", opt.epsilon, "robust convergence tolerance (default 1e-4)")
      ->check(CLI::PositiveNumber);
  dne->add_flag("--emit-lp", opt.emit_lp, "dump solver models as LP text into --out");

  CLI::App* obp = app.add_subcommand("obp", "solve one period's limits and base points");
  add_common(obp, true);
  obp->get_option("--case")->required();
  obp->get_option("--history")->required();
  obp->get_option("--validation")->required();
  obp->add_option("--period", opt.period, "validation row to solve (default 0)")
      ->check(CLI::Range(0, 1000000));
  obp->add_option("--n-dne,--samples", opt.n_dne, "range-stage sample count (default 400)")
      ->check(CLI::Range(1, 1000000));
  obp->add_option("--n-obp", opt.n_obp, "base-point-stage sample count (default 20)")
      ->check(CLI::Range(1, 1000000));
  obp->add_option("--epsilon", opt.epsilon, "robust convergence tolerance (default 1e-4)")
      ->check(CLI::PositiveNumber);
  obp->add_flag("--emit-lp", opt.emit_lp, "dump solver models as LP text into --out");
  CLI::Option* obp_pen = obp->add_flag("--penalty", opt.penalty, "price relief slack");
  obp->add_flag("--strict", opt.strict, "forbid relief slack (default)")->excludes(obp_pen);

  auto add_sim_flags = [&](CLI::App* sub) {
    add_common(sub, true);
    sub->add_option("--manifest", opt.manifest_path, "run manifest JSON")
        ->check(CLI::ExistingFile);
    sub->add_option("--method", opt.method, "proposed or odne")
        ->check(CLI::IsMember({"proposed", "odne"}));
    sub->add_option("--n-dne", opt.n_dne, "range-stage sample count (default 400)")
        ->check(CLI::Range(1, 1000000));
    sub->add_option("--n-obp", opt.n_obp, "base-point-stage sample count (default 20)")
        ->check(CLI::Range(1, 1000000));
    sub->add_option("--epsilon", opt.epsilon, "robust convergence tolerance (default 1e-4)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--emit-lp", opt.emit_lp, "dump solver models as LP text into --out");
    CLI::Option* pen = sub->add_flag("--penalty", opt.penalty, "price relief slack (default)");
    sub->add_flag("--strict", opt.strict, "forbid relief slack")->excludes(pen);
  };
  CLI::App* run = app.add_subcommand("run", "simulate one method over a horizon");
  add_sim_flags(run);
  CLI::App* compare = app.add_subcommand("compare", "simulate both methods on the same data");
  add_sim_flags(compare);

  CLI::App* gen = app.add_subcommand("gen-synthetic", "generate synthetic wind data for a case");
  add_common(gen, false);
  gen->get_option("--case")->required();
  gen->add_option("--seed", opt.seed, "generator seed")->required();
  gen->add_option("--rows", opt.rows, "history rows (default 1000)")
      ->check(CLI::Range(1, 1000000));
  gen->add_option("--validation-rows", opt.validation_rows, "validation rows (default 240)")
      ->check(CLI::Range(1, 1000000));
  gen->add_option("--ar-coef", opt.ar_coef, "forecast persistence in [0,1) (default 0.85)");
  gen->add_option("--noise-scale", opt.noise_scale, "forecast noise fraction (default 0.08)");
  gen->add_option("--error-base", opt.error_base, "error spread floor fraction (default 0.02)");
  gen->add_option("--error-slope", opt.error_slope,
                  "error spread growth per forecast level (default 0.14)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(dne)) return cmd_dne(opt);
    if (app.got_subcommand(obp)) return cmd_obp(opt);
    if (app.got_subcommand(run)) return cmd_run(opt, run);
    if (app.got_subcommand(compare)) return cmd_compare(opt, compare);
    if (app.got_subcommand(gen)) return cmd_gen_synthetic(opt);
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const DispatchError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
