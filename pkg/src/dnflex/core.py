"""Field and node dynamics on a discretized feature dimension.

All state-transition functions are pure: they take a state plus the inputs
and noise draws for one timestep and return a new state.  Random numbers are
never drawn here, so a simulation is reproducible from its noise stream.

Activation arrays may carry leading batch dimensions; the last axis always
runs over the grid.  Every operation acts elementwise over the batch, so a
row of a batched run is bit-identical to the same run done on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "FieldGrid",
    "KernelParams",
    "FieldParams",
    "FieldState",
    "NodeState",
    "GaussianSpec",
    "gaussian_profile",
    "sigmoid",
    "kernel_weight",
    "interaction_matrix",
    "lateral_interaction",
    "node_step",
    "field_step",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class FieldGrid:
    """Neurons labelled ``1..size``; label x is tuned to x% of the dimension."""

    size: int = 99

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ValueError(f"grid size must be an integer >= 2, got {self.size!r}")

    @property
    def positions(self) -> np.ndarray:
        return np.arange(1, self.size + 1, dtype=float)

    def index_of(self, position: int) -> int:
        """Array index of a neuron label."""
        if not 1 <= position <= self.size:
            raise IndexError(f"position {position} outside 1..{self.size}")
        return int(position) - 1


@dataclass(frozen=True)
class KernelParams:
    c_exc: float = 30.0
    sigma_exc: float = 5.0
    c_inh: float = 5.0
    sigma_inh: float = 12.5
    c_glob: float = 2.0

    def __post_init__(self):
        for name in ("c_exc", "c_inh", "c_glob"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 < self.sigma_exc < self.sigma_inh:
            raise ValueError("need 0 < sigma_exc < sigma_inh (local excitation, distal inhibition)")


@dataclass(frozen=True)
class FieldParams:
    tau: float = 20.0
    h: float = -5.0
    q: float = 4.0
    beta: float = 4.0
    kernel: KernelParams = field(default_factory=KernelParams)

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.q >= 0:
            raise ValueError("q must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.h < 0:
            raise ValueError("resting level h must be < 0")


@dataclass(frozen=True)
class GaussianSpec:
    """Amplitude, center and width of one Gaussian input distribution."""

    a: float
    p: float
    w: float

    def __post_init__(self):
        if not math.isfinite(self.a):
            raise ValueError("amplitude a must be finite")
        if not math.isfinite(self.p):
            raise ValueError("position p must be finite")
        if not (math.isfinite(self.w) and self.w > 0):
            raise ValueError("width w must be > 0")


@dataclass(frozen=True)
class FieldState:
    u: np.ndarray
    params: FieldParams = field(default_factory=FieldParams)
    grid: FieldGrid = field(default_factory=FieldGrid)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim == 0 or u.shape[-1] != self.grid.size:
            raise ValueError(f"activation has shape {u.shape}, grid needs last axis {self.grid.size}")
        if not np.all(np.isfinite(u)):
            raise FloatingPointError("field activation is not finite")
        object.__setattr__(self, "u", u)

    @classmethod
    def resting(cls, params: FieldParams | None = None, grid: FieldGrid | None = None,
                batch: tuple[int, ...] = ()) -> "FieldState":
        params = params or FieldParams()
        grid = grid or FieldGrid()
        return cls(np.full(batch + (grid.size,), params.h), params, grid)


@dataclass(frozen=True)
class NodeState:
    u: float | np.ndarray = 0.0
    tau: float = 5.0
    q: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("node tau must be > 0")
        if not self.q >= 0:
            raise ValueError("node q must be >= 0")
        if not np.all(np.isfinite(self.u)):
            raise FloatingPointError("node activation is not finite")


def gaussian_profile(spec: GaussianSpec, grid: FieldGrid) -> np.ndarray:
    """Unnormalized Gaussian ``a * exp(-(x - p)^2 / (2 w^2))`` sampled on the grid."""
    x = grid.positions
    return spec.a * np.exp(-((x - spec.p) ** 2) / (2.0 * spec.w**2))


def sigmoid(u, beta: float = 4.0):
    """Logistic output function ``1 / (1 + exp(-beta u))``, threshold at 0."""
    return expit(beta * np.asarray(u, dtype=float))


def kernel_weight(delta, k: KernelParams = KernelParams()):
    """Difference-of-Gaussians interaction kernel with global inhibition."""
    d2 = np.square(np.asarray(delta, dtype=float))
    exc = k.c_exc / (_SQRT_2PI * k.sigma_exc) * np.exp(-d2 / (2.0 * k.sigma_exc**2))
    inh = k.c_inh / (_SQRT_2PI * k.sigma_inh) * np.exp(-d2 / (2.0 * k.sigma_inh**2))
    return exc - inh - k.c_glob


def interaction_matrix(grid: FieldGrid, k: KernelParams) -> np.ndarray:
    """``W[i, j] = kernel_weight(x_i - x_j)``; edges are not wrapped."""
    x = grid.positions
    return kernel_weight(np.subtract.outer(x, x), k)


def lateral_interaction(state: FieldState, weights: np.ndarray | None = None) -> np.ndarray:
    """Within-field interaction ``sum_x' k(x - x') g(u(x'))``.

    The sum runs left to right over presynaptic neurons so that every output
    element is accumulated in the same order as a plain double loop. This keeps
    results exact against a brute-force sum and independent of batch size.
    """
    if weights is None:
        weights = interaction_matrix(state.grid, state.params.kernel)
    g = sigmoid(state.u, state.params.beta)
    out = np.zeros_like(g)
    tmp = np.empty_like(g)
    for j in range(state.grid.size):
        np.multiply(weights[:, j], g[..., j, None], out=tmp)
        out += tmp
    return out


def node_step(state: NodeState, s_ext, noise, dt: float = 1.0) -> NodeState:
    """One forward-Euler step of ``tau du/dt = -u + s_ext + q xi``."""
    u = state.u + (dt / state.tau) * (-state.u + s_ext + state.q * noise)
    return NodeState(u, state.tau, state.q)


def field_step(state: FieldState, total_input, noise, dt: float = 1.0,
               weights: np.ndarray | None = None) -> FieldState:
    """One forward-Euler step of the field equation.

    ``total_input`` already holds the external, node and field-to-field
    contributions for this timestep. The lateral term is taken from the
    pre-step activation.
    """
    p = state.params
    lateral = lateral_interaction(state, weights)
    u = state.u + (dt / p.tau) * (-state.u + p.h + total_input + lateral + p.q * np.asarray(noise))
    return FieldState(u, p, state.grid)
