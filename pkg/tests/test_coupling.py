import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dnflex.core import FieldGrid, FieldState, NodeState
from dnflex.coupling import (
    HIGH_CA,
    HIGH_CONN,
    LOW_CA,
    LOW_CONN,
    MID_CONN,
    CouplingPathway,
    NodeFieldCoupling,
    Region,
    coupling_inputs,
    default_graph,
    field_to_field_input,
    node_to_field_input,
    pathway_amplitude,
    quartic_weights,
)

G = FieldGrid()
H = -5.0


def rest():
    return FieldState.resting()


def bump(pos, height=10.0):
    u = np.full(99, H)
    u[G.index_of(pos)] = H + height
    return FieldState(u)


def amp_oracle(us, ur, pw, h=H):
    """Hand loop over neurons: clamped window ratio times the quartic sum."""
    base = 0.0
    for i, x in enumerate(range(1, 100)):
        base += pw.c_dnf * max(us[i] - h, 0.0) / (1 + ((x - pw.sender.p) / pw.sender.w) ** 4)
    ms = max(us[i] for i, x in enumerate(range(1, 100)) if pw.sender.p - pw.sender.w <= x <= pw.sender.p + pw.sender.w)
    mr = max(ur[i] for i, x in enumerate(range(1, 100)) if pw.receiver.p - pw.receiver.w <= x <= pw.receiver.p + pw.receiver.w)
    if ms - h <= 0:
        return 0.0
    return min(max((ms - mr) / (ms - h), 0.0), 1.0) * base


# --- types ------------------------------------------------------------------

def test_default_graph_topology():
    g = default_graph()
    assert len(g.pathways) == 6
    pairs = {(pw.sender_field, pw.sender, pw.receiver_field, pw.receiver) for pw in g.pathways}
    for ca, conn in [(LOW_CA, LOW_CONN), (LOW_CA, HIGH_CONN), (HIGH_CA, MID_CONN)]:
        assert ("ca", ca, "conn", conn) in pairs
        assert ("conn", conn, "ca", ca) in pairs
    assert (LOW_CA.p, LOW_CA.w, HIGH_CA.p, HIGH_CA.w) == (30, 20, 70, 20)
    assert (LOW_CONN.p, MID_CONN.p, HIGH_CONN.p, MID_CONN.w) == (25, 50, 75, 12)
    assert g.node_couplings == (NodeFieldCoupling("conn", 50, 40),)
    assert g.c_dnf == 0.35


def test_pathway_invariants():
    with pytest.raises(ValueError):
        CouplingPathway("ca", LOW_CA, "ca", LOW_CA)
    with pytest.raises(ValueError):
        CouplingPathway("ca", LOW_CA, "conn", LOW_CONN, c_dnf=-0.1)
    with pytest.raises(ValueError):
        CouplingPathway("ca", LOW_CA, "colour", LOW_CONN)
    with pytest.raises(ValueError):
        Region(30, 0)
    with pytest.raises(ValueError):
        NodeFieldCoupling("colour")


def test_with_c_dnf_sets_every_pathway():
    g = default_graph().with_c_dnf(0.45)
    assert all(pw.c_dnf == 0.45 for pw in g.pathways)
    assert g.c_dnf == 0.45


# --- node coupling --------------------------------------------------------------

def test_node_input_center_value():
    v = node_to_field_input(NodeState(6.0), NodeFieldCoupling(), G)
    assert v[G.index_of(50)] == 6.0


def test_node_input_zero():
    assert np.all(node_to_field_input(NodeState(0.0), NodeFieldCoupling(), G) == 0)


def test_node_input_one_width_out():
    v = node_to_field_input(NodeState(6.0), NodeFieldCoupling(), G)
    assert v[G.index_of(90)] == pytest.approx(6 * math.exp(-0.5), abs=1e-9)


def test_node_input_not_gated():
    v = node_to_field_input(NodeState(-2.0), NodeFieldCoupling(), G)
    assert np.all(v < 0)


@given(st.floats(-20, 20))
def test_node_input_linear(u):
    c = NodeFieldCoupling()
    a = node_to_field_input(NodeState(u), c, G)
    b = node_to_field_input(NodeState(2 * u), c, G)
    assert np.allclose(b, 2 * a, rtol=1e-12, atol=1e-12)


# --- quartic weighting --------------------------------------------------------

def test_quartic_locality():
    r = Region(40, 10)
    q = quartic_weights(G, r)
    assert q[G.index_of(40)] == 1.0
    assert q[G.index_of(50)] == 0.5
    assert q[G.index_of(60)] == pytest.approx(1 / 17, abs=1e-15)


def test_window_is_closed_interval():
    m = Region(30, 20).window(G)
    assert m[G.index_of(10)] and m[G.index_of(50)]
    assert not m[G.index_of(9)] and not m[G.index_of(51)]


# --- pathway amplitude --------------------------------------------------------

def test_amplitude_zero_at_rest():
    pw = CouplingPathway("ca", LOW_CA, "conn", LOW_CONN)
    assert pathway_amplitude(rest(), rest(), pw) == 0.0


def test_amplitude_zero_when_receiver_matches_sender():
    pw = CouplingPathway("ca", HIGH_CA, "conn", MID_CONN)
    assert pathway_amplitude(bump(70), bump(50), pw) == 0.0


def test_amplitude_one_neuron_bump():
    pw = CouplingPathway("ca", HIGH_CA, "conn", MID_CONN)
    assert pathway_amplitude(bump(70), rest(), pw) == pytest.approx(3.5, abs=1e-12)


def test_field_input_from_bump():
    pw = CouplingPathway("ca", HIGH_CA, "conn", MID_CONN)
    v = field_to_field_input(bump(70), rest(), pw)
    assert v[G.index_of(50)] == pytest.approx(3.5, abs=1e-12)
    assert v[G.index_of(62)] == pytest.approx(3.5 * math.exp(-0.5), abs=1e-12)


def test_field_input_zero_amplitude():
    pw = CouplingPathway("ca", HIGH_CA, "conn", MID_CONN)
    assert np.all(field_to_field_input(rest(), rest(), pw) == 0)


def test_low_ca_feeds_two_equal_conn_bumps():
    ins = coupling_inputs({"ca": bump(30), "conn": rest()}, NodeState(0.0), default_graph())
    v = ins["conn"]
    assert v[G.index_of(25)] == pytest.approx(v[G.index_of(75)], abs=1e-12)
    assert v[G.index_of(25)] > 3.0
    assert v[G.index_of(50)] < v[G.index_of(25)]


def test_degenerate_sender_max_at_rest_level():
    # sender window sits at h but activation outside it is above rest
    u = np.full(99, H)
    u[G.index_of(99)] = 20.0
    pw = CouplingPathway("ca", LOW_CA, "conn", LOW_CONN)
    assert pathway_amplitude(FieldState(u), rest(), pw) == 0.0


field_vals = arrays(np.float64, 99, elements=st.floats(-10, 10))


@settings(max_examples=60, deadline=None)
@given(field_vals, field_vals)
def test_amplitude_matches_oracle(us, ur):
    for pw in default_graph().pathways:
        got = pathway_amplitude(FieldState(us), FieldState(ur), pw)
        assert got == pytest.approx(amp_oracle(us, ur, pw), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(field_vals, field_vals)
def test_saturation(us, ur):
    for pw in default_graph().pathways:
        s, r = FieldState(us), FieldState(ur)
        ms = us[pw.sender.window(G)].max()
        mr = ur[pw.receiver.window(G)].max()
        amp = pathway_amplitude(s, r, pw)
        assert amp >= 0
        if mr >= ms:
            assert amp == 0


@settings(max_examples=60, deadline=None)
@given(field_vals)
def test_low_ca_pathways_symmetric(ca):
    to_low = CouplingPathway("ca", LOW_CA, "conn", LOW_CONN)
    to_high = CouplingPathway("ca", LOW_CA, "conn", HIGH_CONN)
    assert pathway_amplitude(FieldState(ca), FieldState.resting(), to_low) == \
        pathway_amplitude(FieldState(ca), FieldState.resting(), to_high)


def test_amplitude_batched_matches_rows():
    rng = np.random.default_rng(2)
    S = rng.normal(-3, 4, (5, 99))
    R = rng.normal(-3, 4, (5, 99))
    pw = CouplingPathway("conn", HIGH_CONN, "ca", LOW_CA)
    batched = pathway_amplitude(FieldState(S), FieldState(R), pw)
    for i in range(5):
        assert batched[i] == pathway_amplitude(FieldState(S[i]), FieldState(R[i]), pw)


def test_coupling_inputs_use_one_snapshot():
    rng = np.random.default_rng(5)
    ca, conn = FieldState(rng.normal(-2, 4, 99)), FieldState(rng.normal(-2, 4, 99))
    g = default_graph()
    ins = coupling_inputs({"ca": ca, "conn": conn}, NodeState(3.0), g)
    exp_conn = node_to_field_input(NodeState(3.0), g.node_couplings[0], G)
    exp_ca = np.zeros(99)
    for pw in g.pathways:
        if pw.receiver_field == "conn":
            exp_conn = exp_conn + field_to_field_input(ca, conn, pw)
        else:
            exp_ca = exp_ca + field_to_field_input(conn, ca, pw)
    assert np.allclose(ins["conn"], exp_conn, atol=1e-12)
    assert np.allclose(ins["ca"], exp_ca, atol=1e-12)
