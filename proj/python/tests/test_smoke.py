"""End-to-end smoke of the python bindings against the bundled cases."""

import json
import os

import pytest

import dispatchkit as dk

DATA = os.environ.get("DISPATCH_DATA_DIR", "data")

ONE_BUS_TIGHT = json.dumps(
    {
        "buses": ["b1"],
        "slack_bus": "b1",
        "lines": [],
        "units": [
            {
                "id": "g1",
                "bus": "b1",
                "class": "CCU",
                "p_min": 0,
                "p_max": 100,
                "ramp": 100,
                "delta": 5,
                "p_current": 50,
                "cost": {"constant": 0, "segments": [[100, 10]]},
            }
        ],
        "vrg": [{"id": "w1", "bus": "b1", "capacity": 80}],
        "loads": {"b1": 100},
    }
)


@pytest.fixture(scope="module")
def mesh():
    sys = dk.load_case(os.path.join(DATA, "case3.json"))
    return sys, dk.compute_shift_factors(sys)


@pytest.fixture(scope="module")
def mesh_data(mesh):
    sys, _ = mesh
    cfg = dk.SynthConfig()
    cfg.seed = 7
    cfg.history_rows = 80
    cfg.validation_rows = 4
    return dk.generate_synthetic(sys, cfg)


def test_case_round_trip(mesh):
    sys, sf = mesh
    sys.validate()
    assert sys.total_load() == pytest.approx(195.0)
    clone = dk.parse_case_text(dk.case_to_json_text(sys))
    assert clone.buses == sys.buses
    assert [u.id for u in clone.conventional_units] == [u.id for u in sys.conventional_units]
    assert sf.line_count() == 3
    assert sf.bus_count() == 3
    slack = sys.slack_index()
    assert all(row[slack] == 0.0 for row in sf.entries)
    with pytest.raises(dk.TopologyError):
        sys.bus_index("nowhere")


def test_flows_balance(mesh):
    sys, sf = mesh
    inj = [0.0] * 3
    inj[sys.bus_index("b3")] = 10.0
    inj[sys.slack_index()] -= 10.0
    flows = dk.line_flows(sf, inj)
    assert len(flows) == 3
    assert max(abs(f) for f in flows) <= 10.0 + 1e-9


def test_synthetic_selection_and_clipping(mesh, mesh_data):
    sys, _ = mesh
    caps = dk.vrg_capacities(sys)
    assert caps == [90.0]
    for rec in mesh_data.history:
        assert 0.0 <= rec.forecast[0] <= caps[0]
        assert not rec.observed
    for rec in mesh_data.validation:
        assert rec.observed[0] == pytest.approx(rec.forecast[0] + rec.error[0])

    forecast = mesh_data.validation[0].forecast
    samples = dk.select_samples(mesh_data.history, forecast, 30)
    assert samples.size() == 30
    clipped = dk.clip_sample_set(samples, caps)
    for e in clipped.errors:
        assert -1e-9 <= forecast[0] + e[0] <= caps[0] + 1e-9


def test_dne_covers_its_samples(mesh, mesh_data):
    sys, sf = mesh
    forecast = mesh_data.validation[0].forecast
    samples = dk.select_samples(mesh_data.history, forecast, 30)
    dec = dk.solve_dne(sys, sf, samples, forecast)
    assert len(dec.lower) == 1 and len(dec.upper) == 1
    assert dec.lower[0] <= dec.upper[0]
    assert 0 <= dec.coverage_count <= 30
    record = json.loads(dk.dne_decision_to_json(dec))
    assert record["coverage_count"] == dec.coverage_count
    # Every covered sample's clipped realization sits inside the window.
    caps = dk.vrg_capacities(sys)
    clipped = dk.clip_sample_set(samples, caps)
    inside = sum(
        1
        for e in clipped.errors
        if dec.lower[0] - 1e-6 <= forecast[0] + e[0] <= dec.upper[0] + 1e-6
    )
    assert inside >= dec.coverage_count


def test_obp_cost_consistency(mesh, mesh_data):
    sys, sf = mesh
    forecast = mesh_data.validation[0].forecast
    samples = dk.select_samples(mesh_data.history, forecast, 30)
    dec = dk.solve_dne(sys, sf, samples, forecast)
    obp_samples = dk.select_samples(mesh_data.history, forecast, 8)
    cfg = dk.ObpConfig()
    cfg.penalty_mode = dk.PenaltyMode.Penalized
    obp = dk.solve_obp(sys, sf, obp_samples, forecast, dec.lower, dec.upper, cfg)
    assert len(obp.base_obp) == 2
    assert len(obp.per_sample_costs) == 8
    mean = sum(obp.per_sample_costs) / 8
    assert obp.expected_cost == pytest.approx(mean, rel=1e-9, abs=1e-9)


def test_baseline_prices_and_window(mesh, mesh_data):
    sys, sf = mesh
    forecast = mesh_data.validation[0].forecast
    ed = dk.solve_ed(sys, sf, forecast)
    assert len(ed.lmp) == 3
    assert ed.total_cost > 0.0
    od = dk.solve_odne(sys, sf, ed)
    assert len(od.lower) == 1
    if not od.degenerate:
        assert od.lower[0] - 1e-9 <= ed.vrg_dispatch[0] <= od.upper[0] + 1e-9
    record = json.loads(dk.odne_record_to_json(ed, od))
    assert "lmp" in record


def test_simulation_short_horizon(mesh, mesh_data, tmp_path):
    sys, _ = mesh
    cfg = dk.SimulationConfig()
    cfg.n_dne = 30
    cfg.n_obp = 6
    cfg.horizon = [0, 1]
    report = dk.run_simulation(sys, mesh_data.history, mesh_data.validation, cfg)
    assert len(report.per_period) == 2
    assert 0.0 <= report.coverage_rate <= 1.0
    summary = json.loads(dk.summary_to_json(report, cfg))
    assert summary["method"] == "proposed"
    assert summary["periods"] == 2

    out = tmp_path / "periods.csv"
    dk.write_periods_csv(str(out), report, sys, cfg)
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("period,method,covered")


def test_errors_cross_the_boundary(mesh):
    sys, _ = mesh
    with pytest.raises(dk.SchemaError):
        dk.load_case(os.path.join(DATA, "no_such_case.json"))
    with pytest.raises(dk.SchemaError):
        dk.parse_case_text("not json at all")

    tight = dk.parse_case_text(ONE_BUS_TIGHT)
    sf = dk.compute_shift_factors(tight)
    with pytest.raises(dk.DimensionError):
        dk.corrective_cost(tight, sf, [50.0, 50.0], [0.0])
    with pytest.raises(dk.InfeasibleError):
        dk.corrective_cost(tight, sf, [50.0], [0.0])
    relieved = dk.corrective_cost(tight, sf, [50.0], [0.0], dk.PenaltyMode.Penalized)
    assert relieved.slack_used > 0.0
    # The strict failure is also a SolveError and a DispatchError.
    with pytest.raises(dk.SolveError):
        dk.corrective_cost(tight, sf, [50.0], [0.0])
    with pytest.raises(dk.DispatchError):
        dk.corrective_cost(tight, sf, [50.0], [0.0])
