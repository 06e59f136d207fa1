"""Node-to-field and field-to-field inputs.

The *have* node projects onto the conn field through one wide Gaussian whose
amplitude is the node activation itself. The two fields project onto each
other through six directed pathways, one per arrow of the coupling diagram:

    low CA  <-> low conn
    low CA  <-> high conn
    high CA <-> mid conn
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core import FieldGrid, FieldState, GaussianSpec, NodeState, gaussian_profile

__all__ = [
    "FIELDS",
    "Region",
    "LOW_CA",
    "HIGH_CA",
    "LOW_CONN",
    "MID_CONN",
    "HIGH_CONN",
    "NodeFieldCoupling",
    "CouplingPathway",
    "CouplingGraph",
    "default_graph",
    "quartic_weights",
    "node_to_field_input",
    "pathway_amplitude",
    "field_to_field_input",
    "coupling_inputs",
]

FIELDS = ("ca", "conn")


@dataclass(frozen=True)
class Region:
    """Center and half-width of a coupling distribution (neuron units)."""

    p: float
    w: float

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError("distribution width must be > 0")

    def window(self, grid: FieldGrid) -> np.ndarray:
        """Boolean mask of grid positions in the closed interval [p - w, p + w]."""
        x = grid.positions
        return (x >= self.p - self.w) & (x <= self.p + self.w)


LOW_CA = Region(30, 20)
HIGH_CA = Region(70, 20)
LOW_CONN = Region(25, 12)
MID_CONN = Region(50, 12)
HIGH_CONN = Region(75, 12)


@dataclass(frozen=True)
class NodeFieldCoupling:
    target: str = "conn"
    p: float = 50.0
    w: float = 40.0

    def __post_init__(self):
        if self.target not in FIELDS:
            raise ValueError(f"unknown field {self.target!r}")
        if not self.w > 0:
            raise ValueError("node coupling width must be > 0")


@dataclass(frozen=True)
class CouplingPathway:
    sender_field: str
    sender: Region
    receiver_field: str
    receiver: Region
    c_dnf: float = 0.35

    def __post_init__(self):
        for f in (self.sender_field, self.receiver_field):
            if f not in FIELDS:
                raise ValueError(f"unknown field {f!r}")
        if self.sender_field == self.receiver_field:
            raise ValueError("a pathway must connect two different fields")
        if not self.c_dnf >= 0:
            raise ValueError("c_dnf must be >= 0")


@dataclass(frozen=True)
class CouplingGraph:
    pathways: tuple[CouplingPathway, ...] = ()
    node_couplings: tuple[NodeFieldCoupling, ...] = ()

    def with_c_dnf(self, c_dnf: float) -> "CouplingGraph":
        """Copy of the graph with one global gain on every pathway."""
        return replace(self, pathways=tuple(replace(pw, c_dnf=c_dnf) for pw in self.pathways))

    @property
    def c_dnf(self) -> float | None:
        gains = {pw.c_dnf for pw in self.pathways}
        return gains.pop() if len(gains) == 1 else None


def default_graph(c_dnf: float = 0.35) -> CouplingGraph:
    pairs = [(LOW_CA, LOW_CONN), (LOW_CA, HIGH_CONN), (HIGH_CA, MID_CONN)]
    pathways = []
    for ca, conn in pairs:
        pathways.append(CouplingPathway("ca", ca, "conn", conn, c_dnf))
        pathways.append(CouplingPathway("conn", conn, "ca", ca, c_dnf))
    return CouplingGraph(tuple(pathways), (NodeFieldCoupling(),))


def quartic_weights(grid: FieldGrid, region: Region) -> np.ndarray:
    """Per-neuron sender weighting ``1 / (1 + ((x - p) / w)^4)``."""
    return 1.0 / (1.0 + ((grid.positions - region.p) / region.w) ** 4)


def node_to_field_input(node: NodeState, c: NodeFieldCoupling, grid: FieldGrid) -> np.ndarray:
    """Gaussian input whose amplitude equals the node activation (no gating)."""
    shape = gaussian_profile(GaussianSpec(1.0, c.p, c.w), grid)
    return np.asarray(node.u, dtype=float)[..., None] * shape


def pathway_amplitude(sender: FieldState, receiver: FieldState, pw: CouplingPathway):
    """Amplitude of the input one field sends to the other along ``pw``.

    The sum of sender activation above rest, weighted by distance from the
    sending center, is scaled by

        (max_send - max_recv) / (max_send - h)

    where both maxima are taken over the closed windows [p - w, p + w] of the
    sending and receiving distributions. The scaling factor is kept in [0, 1]
    and each neuron contributes only its activation *above* rest; without
    these bounds the factor has a pole at max_send = h and the sum turns
    negative under surround inhibition, and runs diverge.
    """
    h = sender.params.h
    grid = sender.grid
    above = np.maximum(sender.u - h, 0.0)
    base = pw.c_dnf * np.sum(above * quartic_weights(grid, pw.sender), axis=-1)

    max_send = np.max(sender.u[..., pw.sender.window(grid)], axis=-1)
    max_recv = np.max(receiver.u[..., pw.receiver.window(receiver.grid)], axis=-1)
    span = max_send - h
    safe = np.where(span > 0, span, 1.0)
    weight = np.where(span > 0, (max_send - max_recv) / safe, 0.0)
    weight = np.clip(weight, 0.0, 1.0)
    return weight * base


def field_to_field_input(sender: FieldState, receiver: FieldState, pw: CouplingPathway) -> np.ndarray:
    amp = np.asarray(pathway_amplitude(sender, receiver, pw))
    shape = gaussian_profile(GaussianSpec(1.0, pw.receiver.p, pw.receiver.w), receiver.grid)
    return amp[..., None] * shape


def coupling_inputs(fields: dict[str, FieldState], node: NodeState,
                    graph: CouplingGraph) -> dict[str, np.ndarray]:
    """Node and field-to-field input to every field, all from one snapshot."""
    out = {name: np.zeros_like(state.u) for name, state in fields.items()}
    for c in graph.node_couplings:
        out[c.target] = out[c.target] + node_to_field_input(node, c, fields[c.target].grid)
    for pw in graph.pathways:
        s, r = fields[pw.sender_field], fields[pw.receiver_field]
        out[pw.receiver_field] = out[pw.receiver_field] + field_to_field_input(s, r, pw)
    return out
