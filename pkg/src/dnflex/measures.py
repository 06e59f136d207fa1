"""Behavioral read-outs: peak location, acceptability, response time, reading."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Iterable

import numpy as np

from .core import FieldGrid, FieldState, GaussianSpec, gaussian_profile

__all__ = [
    "READINGS",
    "SimRecord",
    "peak_location",
    "input_centroid",
    "target_inputs",
    "acceptability",
    "response_time",
    "classify_reading",
    "record_from_trace",
]

READINGS = ("adjacency", "alienable", "inalienable")
# boundaries sit halfway between the conn centers 25, 50 and 75
_LOW_EDGE = 38
_HIGH_EDGE = 62


@dataclass(frozen=True)
class SimRecord:
    condition: str
    seed: int
    c_dnf: float | None
    peak_ca: int | None
    peak_conn: int | None
    acceptability: float | None
    rt: int | None  # None when censored
    sim_id: int = 0

    @property
    def rt_censored(self) -> bool:
        return self.rt is None

    @property
    def reading(self) -> str | None:
        return None if self.peak_conn is None else classify_reading(self.peak_conn)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["reading"] = self.reading
        d["rt_censored"] = self.rt_censored
        return d


def _peak_from_u(u: np.ndarray, grid: FieldGrid):
    """Vectorized peak rule: label of the first maximum, or 0 if max <= 0."""
    u = np.asarray(u)
    idx = np.argmax(u, axis=-1)  # first occurrence on ties
    has = np.max(u, axis=-1) > 0
    return np.where(has, grid.positions[idx].astype(int), 0)


def peak_location(state: FieldState) -> int | None:
    """Neuron label of the activation maximum, or None if nothing is above 0.

    Exact ties go to the lower label.
    """
    if state.u.ndim != 1:
        raise ValueError("peak_location takes a single field, use a loop for batches")
    p = int(_peak_from_u(state.u, state.grid))
    return p or None


def input_centroid(inputs: Iterable[GaussianSpec], grid: FieldGrid | None = None) -> float:
    """Center of mass of the summed, grid-sampled input distributions."""
    grid = grid or FieldGrid()
    s = np.zeros(grid.size)
    for spec in inputs:
        s = s + gaussian_profile(spec, grid)
    mass = s.sum()
    if not mass > 0:
        raise ValueError("input distribution has no positive mass")
    return float(np.dot(grid.positions, s) / mass)


def target_inputs(config, field: str = "conn") -> list[GaussianSpec]:
    """Inputs that define the expected interpretation in the final phase.

    Takes the external inputs to ``field`` plus the node-driven input at the
    node's fixed point (equal to its external drive). Field-to-field input
    is left out.
    """
    phase = config.phases[-1]
    specs = list(phase.inputs_to(field))
    for c in config.params.graph.node_couplings:
        if c.target == field and phase.node_input != 0:
            specs.append(GaussianSpec(phase.node_input, c.p, c.w))
    return specs


def acceptability(x_peak: float, centroid: float) -> float:
    """``1 / (1 + |x_peak - centroid|)``."""
    return 1.0 / (1.0 + abs(float(x_peak) - float(centroid)))


def _rt_from_max(max_series: np.ndarray):
    """First index whose value is > 0, or -1 if none (last axis is time)."""
    above = np.asarray(max_series) > 0
    first = np.argmax(above, axis=-1)
    return np.where(above.any(axis=-1), first, -1)


def response_time(trace, field: str = "conn", onset: int | None = None) -> int | None:
    """Timesteps from ``onset`` until any neuron of ``field`` is above 0.

    ``onset`` is a trace row index; row t is the state after t steps. Returns
    0 if the field is already above threshold at onset and None (censored)
    if it never crosses.
    """
    u = trace.field(field)
    if onset is None:
        onset = 0
    if not 0 <= onset < len(u):
        raise ValueError(f"onset {onset} outside trace of length {len(u)}")
    rt = int(_rt_from_max(u[onset:].max(axis=-1)))
    return None if rt < 0 else rt


def classify_reading(x_peak: int) -> str:
    if x_peak < _LOW_EDGE:
        return "adjacency"
    if x_peak <= _HIGH_EDGE:
        return "alienable"
    return "inalienable"


def record_from_trace(trace, config, sim_id: int = 0) -> SimRecord:
    """All measures of one traced run, with RT counted from the final phase."""
    grid = config.params.grid
    pc = peak_location(FieldState(trace.conn_u[-1], config.params.conn, grid))
    pa = peak_location(FieldState(trace.ca_u[-1], config.params.ca, grid))
    acc = None
    if pc is not None:
        acc = acceptability(pc, input_centroid(target_inputs(config), grid))
    return SimRecord(config.label, trace.seed, config.params.graph.c_dnf, pa, pc, acc,
                     response_time(trace, "conn", config.target_onset), sim_id)
