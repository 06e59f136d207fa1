"""Dynamic neural field model of the polysemous English verb *have*.

A lexical node for *have* drives two coupled one-dimensional fields, control
asymmetry (``ca``) and connectedness (``conn``). Peaks that form in these
fields stand for readings of the verb. The package covers the dynamics, the
input schedules of three built-in conditions, behavioral measures, batch
statistics and a command-line tool.
"""

from .batch import BatchResult, derive_seed, run_batch, sweep_cdnf
from .core import FieldGrid, FieldParams, FieldState, GaussianSpec, KernelParams, NodeState
from .coupling import CouplingGraph, CouplingPathway, default_graph
from .measures import (
    SimRecord,
    acceptability,
    classify_reading,
    input_centroid,
    peak_location,
    record_from_trace,
    response_time,
)
from .scenario import (
    ModelParams,
    NumericalAbort,
    PhaseSpec,
    ScenarioConfig,
    ScenarioError,
    SimTrace,
    build_condition,
    load_scenario,
    run_simulation,
    serialize_scenario,
    simulate_final,
)
from .stats import context_regression, ols_interaction, signflip_magnitude_check, spearman, summarize, zscore

__version__ = "0.1.0"
