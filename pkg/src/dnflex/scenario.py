"""Model assembly, input schedules and simulation runs.

A scenario is an ordered list of phases. Each phase holds the external
input to the *have* node and to the two fields for a fixed number of
timesteps. Three conditions are built in:

``canonical``
    one 90-step phase: node 6, high CA (6 at 70), mid conn (6 at 50).
``adjacency`` / ``possession``
    context (90 steps), pause with no input (20), target (90). The context
    phase drives low CA plus low conn (adjacency) or high conn (possession);
    the target phase is the same in both: node 6, low CA 6, low conn 0.4.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from .core import (
    FieldGrid,
    FieldParams,
    FieldState,
    GaussianSpec,
    KernelParams,
    NodeState,
    field_step,
    gaussian_profile,
    interaction_matrix,
    node_step,
)
from .coupling import (
    FIELDS,
    CouplingGraph,
    CouplingPathway,
    NodeFieldCoupling,
    Region,
    coupling_inputs,
    default_graph,
)

__all__ = [
    "CONDITIONS",
    "EXTERNAL_WIDTH",
    "NumericalAbort",
    "ScenarioError",
    "PhaseSpec",
    "ModelParams",
    "ScenarioConfig",
    "SimTrace",
    "build_condition",
    "run_simulation",
    "simulate_final",
    "serialize_scenario",
    "load_scenario",
]

CONDITIONS = ("canonical", "adjacency", "possession")

# width of every sentence-driven external field input
EXTERNAL_WIDTH = 12.0
LOW_CA_CENTER = 30.0
HIGH_CA_CENTER = 70.0


class NumericalAbort(FloatingPointError):
    """Activation became non-finite; carries the offending timestep."""

    def __init__(self, timestep: int, label: str = ""):
        self.timestep = timestep
        self.label = label
        where = f" in {label!r}" if label else ""
        super().__init__(f"non-finite activation at timestep {timestep}{where}")


class ScenarioError(ValueError):
    """Malformed or invalid scenario document."""


@dataclass(frozen=True)
class PhaseSpec:
    duration: int
    node_input: float = 0.0
    field_inputs: tuple[tuple[str, GaussianSpec], ...] = ()

    def __post_init__(self):
        if int(self.duration) != self.duration or self.duration < 0:
            raise ValueError("phase duration must be a non-negative integer")
        if not math.isfinite(self.node_input):
            raise ValueError("node input must be finite")
        for name, spec in self.field_inputs:
            if name not in FIELDS:
                raise ValueError(f"unknown field {name!r}")
            if not isinstance(spec, GaussianSpec):
                raise TypeError("field inputs must be GaussianSpec")
        object.__setattr__(self, "field_inputs", tuple(self.field_inputs))

    def inputs_to(self, name: str) -> list[GaussianSpec]:
        return [spec for f, spec in self.field_inputs if f == name]

    def external(self, name: str, grid: FieldGrid) -> np.ndarray:
        out = np.zeros(grid.size)
        for spec in self.inputs_to(name):
            out = out + gaussian_profile(spec, grid)
        return out


@dataclass(frozen=True)
class ModelParams:
    grid: FieldGrid = field(default_factory=FieldGrid)
    ca: FieldParams = field(default_factory=FieldParams)
    conn: FieldParams = field(default_factory=FieldParams)
    node_tau: float = 5.0
    node_q: float = 1.0
    graph: CouplingGraph = field(default_factory=default_graph)
    dt: float = 1.0

    def __post_init__(self):
        NodeState(0.0, self.node_tau, self.node_q)
        if not self.dt > 0:
            raise ValueError("dt must be > 0")

    def field_params(self, name: str) -> FieldParams:
        return {"ca": self.ca, "conn": self.conn}[name]


@dataclass(frozen=True)
class ScenarioConfig:
    phases: tuple[PhaseSpec, ...]
    params: ModelParams = field(default_factory=ModelParams)
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError("a scenario needs at least one phase")

    @property
    def total_duration(self) -> int:
        return sum(p.duration for p in self.phases)

    @property
    def onsets(self) -> list[int]:
        """Trace index at which each phase starts."""
        out, t = [], 0
        for p in self.phases:
            out.append(t)
            t += p.duration
        return out

    @property
    def target_onset(self) -> int:
        return self.onsets[-1]

    def with_c_dnf(self, c_dnf: float) -> "ScenarioConfig":
        return replace(self, params=replace(self.params, graph=self.params.graph.with_c_dnf(c_dnf)))

    def with_noise(self, q: float | None = None, q_node: float | None = None) -> "ScenarioConfig":
        p = self.params
        if q is not None:
            p = replace(p, ca=replace(p.ca, q=q), conn=replace(p.conn, q=q))
        if q_node is not None:
            p = replace(p, node_q=q_node)
        return replace(self, params=p)


def build_condition(name: str, params: ModelParams | None = None,
                    width: float = EXTERNAL_WIDTH) -> ScenarioConfig:
    """One of the built-in input schedules."""
    params = params or ModelParams()

    def inp(f, a, p):
        return (f, GaussianSpec(a, p, width))

    if name == "canonical":
        phases = [PhaseSpec(90, 6.0, (inp("ca", 6.0, HIGH_CA_CENTER), inp("conn", 6.0, 50.0)))]
    elif name in ("adjacency", "possession"):
        context_conn = 25.0 if name == "adjacency" else 75.0
        phases = [
            PhaseSpec(90, 6.0, (inp("ca", 6.0, LOW_CA_CENTER), inp("conn", 6.0, context_conn))),
            PhaseSpec(20, 0.0, ()),
            PhaseSpec(90, 6.0, (inp("ca", 6.0, LOW_CA_CENTER), inp("conn", 0.4, 25.0))),
        ]
    else:
        raise ValueError(f"unknown condition {name!r}; choose from {', '.join(CONDITIONS)}")
    return ScenarioConfig(tuple(phases), params, name)


# ----------------------------------------------------------------------------
# integration


def _integrate(config: ScenarioConfig, noise_at: Callable[[int], np.ndarray],
               batch: tuple[int, ...], on_step: Callable[[int, FieldState, FieldState, NodeState], None]):
    p = config.params
    grid, size = p.grid, p.grid.size
    weights = {f: interaction_matrix(grid, p.field_params(f).kernel) for f in FIELDS}
    fields = {f: FieldState.resting(p.field_params(f), grid, batch) for f in FIELDS}
    node = NodeState(np.zeros(batch) if batch else 0.0, p.node_tau, p.node_q)
    on_step(0, fields["ca"], fields["conn"], node)

    t = 0
    for phase in config.phases:
        ext = {f: phase.external(f, grid) for f in FIELDS}
        for _ in range(phase.duration):
            t += 1
            xi = noise_at(t - 1)
            coupled = coupling_inputs(fields, node, p.graph)
            try:
                new = {}
                with np.errstate(over="ignore", invalid="ignore"):
                    for i, f in enumerate(FIELDS):
                        noise = xi[..., 1 + i * size: 1 + (i + 1) * size]
                        new[f] = field_step(fields[f], ext[f] + coupled[f], noise, p.dt, weights[f])
                    node = node_step(node, phase.node_input, xi[..., 0], p.dt)
            except FloatingPointError:
                raise NumericalAbort(t, config.label) from None
            fields = new
            on_step(t, fields["ca"], fields["conn"], node)
    return fields, node


def _noise_width(config: ScenarioConfig) -> int:
    return 1 + len(FIELDS) * config.params.grid.size


@dataclass
class SimTrace:
    """Activation history; row t is the state after t timesteps."""

    node_u: np.ndarray
    ca_u: np.ndarray
    conn_u: np.ndarray
    config_label: str = ""
    seed: int | None = None
    grid: FieldGrid = field(default_factory=FieldGrid)

    def __len__(self):
        return len(self.node_u)

    def field(self, name: str) -> np.ndarray:
        return {"ca": self.ca_u, "conn": self.conn_u}[name]

    def to_csv(self, out=None) -> str | None:
        """Long-format rows ``t, component, x, u``; x is empty for the node."""
        buf = out if out is not None else io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "component", "x", "u"])
        xs = [int(x) for x in self.grid.positions]
        for t in range(len(self)):
            w.writerow([t, "node", "", f"{self.node_u[t]:.10g}"])
            for name in FIELDS:
                row = self.field(name)[t]
                for x, u in zip(xs, row):
                    w.writerow([t, name, x, f"{u:.10g}"])
        return buf.getvalue() if out is None else None


def run_simulation(config: ScenarioConfig, seed: int) -> SimTrace:
    """Run one simulation and keep the full activation history.

    Noise comes from ``numpy.random.default_rng(seed)``; each timestep draws
    one standard normal for the node followed by one per CA neuron and one
    per conn neuron.
    """
    rng = np.random.default_rng(seed)
    width = _noise_width(config)
    T = config.total_duration
    size = config.params.grid.size
    node_u = np.empty(T + 1)
    ca_u = np.empty((T + 1, size))
    conn_u = np.empty((T + 1, size))

    def record(t, ca, conn, node):
        node_u[t] = node.u
        ca_u[t] = ca.u
        conn_u[t] = conn.u

    _integrate(config, lambda t: rng.standard_normal(width), (), record)
    return SimTrace(node_u, ca_u, conn_u, config.label, seed, config.params.grid)


@dataclass
class FinalStates:
    """What a batch run keeps per simulation: final fields and the conn maxima
    from the target-phase onset onward."""

    ca_u: np.ndarray
    conn_u: np.ndarray
    node_u: np.ndarray
    conn_max_target: np.ndarray  # (batch, target_duration + 1)


def simulate_final(config: ScenarioConfig, seeds: Iterable[int]) -> FinalStates:
    """Vectorized runs, one per seed, without storing full traces.

    Row i is bit-identical to ``run_simulation(config, seeds[i])``.
    """
    seeds = list(seeds)
    B = len(seeds)
    T = config.total_duration
    width = _noise_width(config)
    noise = np.empty((B, T, width))
    for i, s in enumerate(seeds):
        noise[i] = np.random.default_rng(s).standard_normal((T, width))
    onset = config.target_onset
    cmax = np.empty((B, T - onset + 1))

    def record(t, ca, conn, node):
        if t >= onset:
            cmax[:, t - onset] = conn.u.max(axis=-1)

    fields, node = _integrate(config, lambda t: noise[:, t, :], (B,), record)
    return FinalStates(fields["ca"].u, fields["conn"].u, np.asarray(node.u), cmax)


# ----------------------------------------------------------------------------
# scenario documents (JSON)


def _kernel_dict(k: KernelParams) -> dict:
    return {"c_exc": k.c_exc, "sigma_exc": k.sigma_exc, "c_inh": k.c_inh,
            "sigma_inh": k.sigma_inh, "c_glob": k.c_glob}


def _field_dict(fp: FieldParams) -> dict:
    return {"tau": fp.tau, "h": fp.h, "q": fp.q, "beta": fp.beta, "kernel": _kernel_dict(fp.kernel)}


def scenario_to_dict(config: ScenarioConfig) -> dict:
    p = config.params
    return {
        "label": config.label,
        "params": {
            "grid_size": p.grid.size,
            "dt": p.dt,
            "node": {"tau": p.node_tau, "q": p.node_q},
            "fields": {f: _field_dict(p.field_params(f)) for f in FIELDS},
            "coupling": {
                "node": [{"target": c.target, "p": c.p, "w": c.w} for c in p.graph.node_couplings],
                "pathways": [
                    {"sender_field": pw.sender_field, "sender": {"p": pw.sender.p, "w": pw.sender.w},
                     "receiver_field": pw.receiver_field, "receiver": {"p": pw.receiver.p, "w": pw.receiver.w},
                     "c_dnf": pw.c_dnf}
                    for pw in p.graph.pathways
                ],
            },
        },
        "phases": [
            {"duration": ph.duration, "node_input": ph.node_input,
             "field_inputs": [{"field": f, "a": s.a, "p": s.p, "w": s.w} for f, s in ph.field_inputs]}
            for ph in config.phases
        ],
    }


def serialize_scenario(config: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(config), indent=2) + "\n"


class _Reader:
    """Walks a parsed document, naming the offending path in every error."""

    def __init__(self, path: str, data):
        self.path = path
        self.data = data

    def _sub(self, key):
        return f"{self.path}.{key}" if self.path else str(key)

    def obj(self, key, required=True, allowed=None) -> "_Reader | None":
        if not isinstance(self.data, dict):
            raise ScenarioError(f"{self.path or 'document'}: expected an object")
        if allowed is not None:
            unknown = set(self.data) - set(allowed)
            if unknown:
                raise ScenarioError(f"{self.path or 'document'}: unknown keys {sorted(unknown)}")
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self._sub(key)}: missing required key")
            return None
        return _Reader(self._sub(key), self.data[key])

    def items(self) -> list["_Reader"]:
        if not isinstance(self.data, list):
            raise ScenarioError(f"{self.path}: expected a list")
        return [_Reader(f"{self.path}[{i}]", d) for i, d in enumerate(self.data)]

    def num(self, key, default=None, required=False) -> float:
        r = self.obj(key, required=required and default is None)
        if r is None:
            return default
        if isinstance(r.data, bool) or not isinstance(r.data, (int, float)):
            raise ScenarioError(f"{r.path}: expected a number, got {r.data!r}")
        return r.data

    def text(self, key, default=None) -> str:
        r = self.obj(key, required=default is None)
        if r is None:
            return default
        if not isinstance(r.data, str):
            raise ScenarioError(f"{r.path}: expected a string")
        return r.data


def _build(path: str, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ValueError, TypeError) as e:
        raise ScenarioError(f"{path}: {e}") from None


def load_scenario(text: str) -> ScenarioConfig:
    """Parse a JSON scenario document (see ``serialize_scenario``).

    Missing parameter blocks fall back to the defaults; ``phases`` and every
    phase ``duration`` are required.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    root = _Reader("", doc)
    root.obj("phases", allowed=("label", "params", "phases"))
    label = root.text("label", "custom")
    defaults = ModelParams()

    params = defaults
    pr = root.obj("params", required=False, allowed=None)
    if pr is not None:
        pr.obj("dt", required=False, allowed=("grid_size", "dt", "node", "fields", "coupling"))
        grid = _build(pr._sub("grid_size"), FieldGrid, pr.num("grid_size", defaults.grid.size))
        fields = {}
        fr = pr.obj("fields", required=False, allowed=None)
        for f in FIELDS:
            base = defaults.field_params(f)
            r = fr.obj(f, required=False, allowed=FIELDS) if fr is not None else None
            if r is None:
                fields[f] = base
                continue
            r.obj("tau", required=False, allowed=("tau", "h", "q", "beta", "kernel"))
            kr = r.obj("kernel", required=False)
            kernel = base.kernel
            if kr is not None:
                kr.obj("c_exc", required=False, allowed=tuple(_kernel_dict(kernel)))
                kernel = _build(kr.path, KernelParams, **{k: kr.num(k, v) for k, v in _kernel_dict(kernel).items()})
            fields[f] = _build(r.path, FieldParams, r.num("tau", base.tau), r.num("h", base.h),
                               r.num("q", base.q), r.num("beta", base.beta), kernel)
        nr = pr.obj("node", required=False)
        node_tau, node_q = defaults.node_tau, defaults.node_q
        if nr is not None:
            nr.obj("tau", required=False, allowed=("tau", "q"))
            node_tau, node_q = nr.num("tau", node_tau), nr.num("q", node_q)
        graph = defaults.graph
        cr = pr.obj("coupling", required=False)
        if cr is not None:
            cr.obj("node", required=False, allowed=("node", "pathways"))
            node_cs = graph.node_couplings
            ncr = cr.obj("node", required=False)
            if ncr is not None:
                node_cs = tuple(
                    _build(r.path, NodeFieldCoupling, r.text("target"), r.num("p", required=True), r.num("w", required=True))
                    for r in ncr.items())
            pws = graph.pathways
            pwr = cr.obj("pathways", required=False)
            if pwr is not None:
                pws = []
                for r in pwr.items():
                    s, rc = r.obj("sender"), r.obj("receiver")
                    pws.append(_build(
                        r.path, CouplingPathway, r.text("sender_field"),
                        _build(s.path, Region, s.num("p", required=True), s.num("w", required=True)),
                        r.text("receiver_field"),
                        _build(rc.path, Region, rc.num("p", required=True), rc.num("w", required=True)),
                        r.num("c_dnf", 0.35)))
                pws = tuple(pws)
            graph = CouplingGraph(pws, node_cs)
        params = _build(pr.path, ModelParams, grid, fields["ca"], fields["conn"], node_tau, node_q,
                        graph, pr.num("dt", defaults.dt))

    phases = []
    for r in root.obj("phases").items():
        r.obj("duration", allowed=("duration", "node_input", "field_inputs"))
        duration = r.num("duration", required=True)
        inputs = []
        fir = r.obj("field_inputs", required=False)
        for ir in (fir.items() if fir is not None else []):
            ir.obj("field", allowed=("field", "a", "p", "w"))
            name = ir.text("field")
            if name not in FIELDS:
                raise ScenarioError(f"{ir.path}.field: unknown field {name!r}")
            spec = _build(ir.path + ".w" if ir.num("w", required=True) <= 0 else ir.path, GaussianSpec,
                          ir.num("a", required=True), ir.num("p", required=True), ir.num("w", required=True))
            inputs.append((name, spec))
        phases.append(_build(r.path, PhaseSpec, duration, r.num("node_input", 0.0), tuple(inputs)))
    return _build("phases", ScenarioConfig, tuple(phases), params, label)
