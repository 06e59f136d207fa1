import csv
import io
import json
from dataclasses import replace

import numpy as np
import pytest

from dnflex.core import FieldGrid, GaussianSpec
from dnflex.scenario import (
    ModelParams,
    NumericalAbort,
    PhaseSpec,
    ScenarioConfig,
    ScenarioError,
    build_condition,
    load_scenario,
    run_simulation,
    serialize_scenario,
    simulate_final,
)

G = FieldGrid()


def quiet(name):
    return build_condition(name).with_noise(0.0, 0.0)


# --- build_condition ----------------------------------------------------------

def test_canonical_schedule():
    c = build_condition("canonical")
    assert c.total_duration == 90 and len(c.phases) == 1
    ph = c.phases[0]
    assert ph.node_input == 6
    assert ph.inputs_to("ca") == [GaussianSpec(6, 70, 12)]
    assert ph.inputs_to("conn") == [GaussianSpec(6, 50, 12)]


def test_adjacency_schedule():
    c = build_condition("adjacency")
    assert [p.duration for p in c.phases] == [90, 20, 90]
    assert c.total_duration == 200
    p1, p2, p3 = c.phases
    assert p1.node_input == 6
    assert p1.inputs_to("ca") == [GaussianSpec(6, 30, 12)]
    assert p1.inputs_to("conn") == [GaussianSpec(6, 25, 12)]
    assert p2.node_input == 0 and p2.field_inputs == ()
    assert p3.node_input == 6
    assert p3.inputs_to("ca") == [GaussianSpec(6, 30, 12)]
    assert p3.inputs_to("conn") == [GaussianSpec(0.4, 25, 12)]


def test_possession_context_input():
    ph = build_condition("possession").phases[0]
    assert ph.inputs_to("conn") == [GaussianSpec(6, 75, 12)]


def test_target_phase_identical_across_contexts():
    assert build_condition("adjacency").phases[2] == build_condition("possession").phases[2]


def test_unknown_condition():
    with pytest.raises(ValueError, match="canonical"):
        build_condition("ownership")


def test_phase_invariants():
    with pytest.raises(ValueError):
        PhaseSpec(-1)
    with pytest.raises(ValueError):
        PhaseSpec(1.5)
    with pytest.raises(ValueError):
        PhaseSpec(10, float("inf"))
    with pytest.raises(ValueError):
        PhaseSpec(10, 0.0, (("colour", GaussianSpec(1, 1, 1)),))
    with pytest.raises(ValueError):
        ScenarioConfig(())


def test_onsets():
    assert build_condition("adjacency").onsets == [0, 90, 110]
    assert build_condition("adjacency").target_onset == 110
    assert build_condition("canonical").target_onset == 0


def test_with_c_dnf():
    c = build_condition("adjacency").with_c_dnf(0.25)
    assert c.params.graph.c_dnf == 0.25
    assert c.phases == build_condition("adjacency").phases


# --- run_simulation -----------------------------------------------------------

def test_canonical_noiseless_stabilizes():
    tr = run_simulation(quiet("canonical"), 0)
    assert abs(np.argmax(tr.conn_u[-1]) + 1 - 50) <= 3
    assert abs(np.argmax(tr.ca_u[-1]) + 1 - 70) <= 3
    assert abs(tr.node_u[-1] - 6) < 1e-3


def test_adjacency_phase1_peak_low_conn():
    tr = run_simulation(quiet("adjacency"), 0)
    assert abs(np.argmax(tr.conn_u[90]) + 1 - 25) <= 3


@pytest.mark.parametrize("name,length", [("adjacency", 201), ("possession", 201), ("canonical", 91)])
def test_trace_length_and_initial_state(name, length):
    tr = run_simulation(build_condition(name), 3)
    assert len(tr) == length
    assert tr.ca_u.shape == tr.conn_u.shape == (length, 99)
    assert np.all(tr.ca_u[0] == -5) and np.all(tr.conn_u[0] == -5) and tr.node_u[0] == 0


def test_seed_determinism():
    a = run_simulation(build_condition("possession"), 11)
    b = run_simulation(build_condition("possession"), 11)
    c = run_simulation(build_condition("possession"), 12)
    assert np.array_equal(a.conn_u, b.conn_u) and np.array_equal(a.node_u, b.node_u)
    assert not np.array_equal(a.conn_u, c.conn_u)


def test_node_decays_during_pause():
    tr = run_simulation(quiet("adjacency"), 0)
    u90 = tr.node_u[90]
    for k in range(1, 21):
        assert tr.node_u[90 + k] == pytest.approx(u90 * 0.8**k, abs=1e-12)


def test_batched_rows_match_single_runs():
    cfg = build_condition("possession")
    seeds = [5, 9, 2]
    fs = simulate_final(cfg, seeds)
    for i, s in enumerate(seeds):
        tr = run_simulation(cfg, s)
        assert np.array_equal(fs.conn_u[i], tr.conn_u[-1])
        assert np.array_equal(fs.ca_u[i], tr.ca_u[-1])
        assert fs.node_u[i] == tr.node_u[-1]
        assert np.array_equal(fs.conn_max_target[i], tr.conn_u[110:].max(axis=1))


def test_batched_rows_independent_of_batch_size():
    cfg = build_condition("adjacency")
    big = simulate_final(cfg, list(range(6)))
    small = simulate_final(cfg, [3, 4])
    assert np.array_equal(big.conn_u[3:5], small.conn_u)


def test_numerical_abort_names_timestep():
    cfg = build_condition("canonical")
    hot = replace(cfg, params=replace(cfg.params, dt=1e300))
    with pytest.raises(NumericalAbort) as err:
        run_simulation(hot, 0)
    assert err.value.timestep >= 1
    assert "timestep" in str(err.value)


def _states_at(name, steps, n=100):
    """Batched field states after ``steps`` timesteps for seeds 0..n-1."""
    cfg = build_condition(name)
    out = {}
    for k in steps:
        kept, t = [], 0
        for ph in cfg.phases:
            take = min(ph.duration, k - t)
            if take > 0:
                kept.append(replace(ph, duration=take))
            t += take
        fs = simulate_final(replace(cfg, phases=tuple(kept)), range(n))
        out[k] = {"ca": fs.ca_u, "conn": fs.conn_u}
    return out


def test_truncated_run_shares_noise_prefix():
    s = _states_at("adjacency", [90], n=2)
    tr = run_simulation(build_condition("adjacency"), 1)
    assert np.array_equal(s[90]["conn"][1], tr.conn_u[90])


@pytest.mark.parametrize("name", ["adjacency", "possession"])
def test_pause_leaves_residual_activation(name):
    s = _states_at(name, [110])[110]
    ok = (s["ca"].max(axis=1) > -5 + 1) & (s["conn"].max(axis=1) > -5 + 1)
    assert ok.sum() >= 95


@pytest.mark.xfail(strict=True, reason="with q=4 and a 20-step pause only 30-40% of runs fall "
                                       "fully below threshold; see the decisions ledger")
@pytest.mark.parametrize("name", ["adjacency", "possession"])
def test_pause_extinguishes_peaks(name):
    s = _states_at(name, [90, 110])
    ok = np.ones(100, dtype=bool)
    for f in ("ca", "conn"):
        was_up = s[90][f] > 0
        ok &= ~np.any(was_up & (s[110][f] >= 0), axis=1)
    assert ok.sum() >= 95


def test_context_persistence_adjacency_noiseless():
    assert np.argmax(run_simulation(quiet("adjacency"), 0).conn_u[-1]) + 1 < 50


@pytest.mark.xfail(strict=True, reason="without noise the target-phase input pulls the conn peak "
                                       "to the low region in both contexts; see the decisions ledger")
def test_context_persistence_possession_noiseless():
    assert np.argmax(run_simulation(quiet("possession"), 0).conn_u[-1]) + 1 > 50


# --- trace CSV ----------------------------------------------------------------

def test_trace_csv_layout():
    tr = run_simulation(build_condition("canonical"), 7)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "component", "x", "u"]
    body = rows[1:]
    assert len(body) == 91 * (1 + 2 * 99)
    assert body[0][:3] == ["0", "node", ""]
    assert body[1][:3] == ["0", "ca", "1"]
    assert body[-1][:3] == ["90", "conn", "99"]
    t, comp, x, u = next(r for r in body if r[0] == "90" and r[1] == "conn" and r[2] == "50")
    assert float(u) == pytest.approx(tr.conn_u[90, 49], rel=1e-9)


# --- scenario documents -------------------------------------------------------

@pytest.mark.parametrize("name", ["canonical", "adjacency", "possession"])
def test_round_trip(name):
    c = build_condition(name)
    assert load_scenario(serialize_scenario(c)) == c


def test_round_trip_custom_params():
    c = build_condition("adjacency").with_c_dnf(0.41).with_noise(1.5, 0.2)
    c = replace(c, params=replace(c.params, node_tau=7.0))
    assert load_scenario(serialize_scenario(c)) == c


def _doc(name="adjacency"):
    return json.loads(serialize_scenario(build_condition(name)))


def test_negative_width_names_field():
    d = _doc()
    d["phases"][2]["field_inputs"][1]["w"] = -1
    with pytest.raises(ScenarioError, match=r"phases\[2\]\.field_inputs\[1\]"):
        load_scenario(json.dumps(d))


def test_missing_duration_is_error():
    d = _doc()
    del d["phases"][0]["duration"]
    with pytest.raises(ScenarioError, match=r"phases\[0\]\.duration"):
        load_scenario(json.dumps(d))


def test_unknown_field_id():
    d = _doc()
    d["phases"][0]["field_inputs"][0]["field"] = "colour"
    with pytest.raises(ScenarioError, match="colour"):
        load_scenario(json.dumps(d))


def test_syntax_error_reports_line():
    with pytest.raises(ScenarioError, match="line 2"):
        load_scenario('{"phases": [\n  {duration: 3}]}')


def test_unknown_key_rejected():
    d = _doc()
    d["phases"][0]["durration"] = 5
    with pytest.raises(ScenarioError, match="durration"):
        load_scenario(json.dumps(d))


def test_bad_parameter_names_path():
    d = _doc()
    d["params"]["fields"]["conn"]["tau"] = 0
    with pytest.raises(ScenarioError, match=r"params\.fields\.conn"):
        load_scenario(json.dumps(d))


def test_minimal_document_uses_defaults():
    c = load_scenario('{"phases": [{"duration": 5, "node_input": 6}]}')
    assert c.params == ModelParams()
    assert c.total_duration == 5
