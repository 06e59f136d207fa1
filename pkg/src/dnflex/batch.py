"""Monte Carlo batches, the coupling-gain sweep and their CSV formats.

Every simulation gets its own seed, derived from the master seed, the
condition label, the coupling gain and the simulation index. Results do not
depend on the order in which simulations run or on the number of worker
processes.
"""

from __future__ import annotations

import csv
import io
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .measures import SimRecord, _peak_from_u, _rt_from_max, acceptability, input_centroid, target_inputs
from .scenario import NumericalAbort, ScenarioConfig, build_condition, simulate_final
from .stats import mean_ci

__all__ = [
    "WORKERS_ENV",
    "DEFAULT_SWEEP",
    "BatchResult",
    "SweepRow",
    "derive_seed",
    "default_workers",
    "run_batch",
    "sweep_cdnf",
    "records_to_csv",
    "records_from_csv",
    "sweep_to_csv",
]

WORKERS_ENV = "DNFLEX_WORKERS"
CHUNK = 250
DEFAULT_SWEEP = (0.25, 0.30, 0.35, 0.40, 0.45)
RECORD_COLUMNS = ("sim_id", "condition", "seed", "c_dnf", "peak_ca", "peak_conn",
                  "reading", "acceptability", "rt", "rt_censored")
SWEEP_COLUMNS = ("c_dnf", "condition", "n", "mean_acceptability", "ci_lo", "ci_hi")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{float(v):.10g}"


def _gain_key(c_dnf: float | None) -> int:
    return 0 if c_dnf is None else int(round(c_dnf * 1_000_000))


def derive_seed(master_seed: int, condition: str, c_dnf: float | None, index: int) -> int:
    """64-bit seed for one simulation, independent of all other cells."""
    entropy = [int(master_seed), zlib.crc32(condition.encode()), _gain_key(c_dnf), int(index)]
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(words[0]) << 32 | int(words[1])


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


class BatchAbort(NumericalAbort):
    """A simulation inside a batch went non-finite."""

    def __init__(self, inner: NumericalAbort, condition: str, sim_id: int, seed: int):
        self.condition, self.sim_id, self.seed = condition, sim_id, seed
        super().__init__(inner.timestep, condition)
        self.args = (f"{condition} sim {sim_id} (seed {seed}): {inner}",)


@dataclass
class BatchResult:
    records: list[SimRecord]
    master_seed: int
    conditions: tuple[str, ...]
    n: dict[str, int] = field(default_factory=dict)

    def by_condition(self, name: str) -> list[SimRecord]:
        return [r for r in self.records if r.condition == name]


def _run_chunk(config: ScenarioConfig, start: int, seeds: Sequence[int]) -> list[SimRecord]:
    try:
        fs = simulate_final(config, seeds)
    except NumericalAbort:
        # find the offending run
        for i, s in enumerate(seeds):
            try:
                simulate_final(config, [s])
            except NumericalAbort as e:
                raise BatchAbort(e, config.label, start + i, s) from None
        raise
    grid = config.params.grid
    peak_conn = _peak_from_u(fs.conn_u, grid)
    peak_ca = _peak_from_u(fs.ca_u, grid)
    rts = _rt_from_max(fs.conn_max_target)
    centroid = input_centroid(target_inputs(config), grid)
    c_dnf = config.params.graph.c_dnf
    out = []
    for i, s in enumerate(seeds):
        pc, pa, rt = int(peak_conn[i]), int(peak_ca[i]), int(rts[i])
        out.append(SimRecord(
            condition=config.label, seed=s, c_dnf=c_dnf,
            peak_ca=pa or None, peak_conn=pc or None,
            acceptability=acceptability(pc, centroid) if pc else None,
            rt=rt if rt >= 0 else None, sim_id=start + i))
    return out


def _run_chunk_args(args):
    return _run_chunk(*args)


def run_batch(conditions: Iterable[ScenarioConfig | str], n: int, master_seed: int,
              workers: int | None = None) -> BatchResult:
    """``n`` simulations of every condition.

    Parameters
    ----------
    conditions
        Scenario configs, or names of built-in conditions.
    n
        Simulations per condition.
    master_seed
        Root of all per-simulation seeds (see ``derive_seed``).
    workers
        Worker processes; defaults to the ``DNFLEX_WORKERS`` environment
        variable, else 1. Work is split into fixed chunks so the output is
        the same for any worker count.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    configs = [build_condition(c) if isinstance(c, str) else c for c in conditions]
    workers = default_workers() if workers is None else max(int(workers), 1)
    tasks = []
    for cfg in configs:
        c_dnf = cfg.params.graph.c_dnf
        seeds = [derive_seed(master_seed, cfg.label, c_dnf, i) for i in range(n)]
        for start in range(0, n, CHUNK):
            tasks.append((cfg, start, seeds[start:start + CHUNK]))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            chunks = list(pool.map(_run_chunk_args, tasks))
    else:
        chunks = [_run_chunk(*t) for t in tasks]
    records = [r for chunk in chunks for r in chunk]
    labels = tuple(dict.fromkeys(c.label for c in configs))
    counts = {lab: sum(r.condition == lab for r in records) for lab in labels}
    return BatchResult(records, master_seed, labels, counts)


@dataclass(frozen=True)
class SweepRow:
    c_dnf: float
    condition: str
    n: int
    mean_acceptability: float
    ci_lo: float
    ci_hi: float


def sweep_cdnf(values: Sequence[float] = DEFAULT_SWEEP, n: int = 1000, master_seed: int = 0,
               conditions: Sequence[ScenarioConfig | str] = ("adjacency", "possession"),
               workers: int | None = None) -> list[SweepRow]:
    """Mean acceptability per (gain, condition) cell.

    Every pathway gain is set to the cell value. ``n`` in a row counts the
    runs that formed a conn peak; intervals are NaN when fewer than two did.
    """
    if any(not v > 0 for v in values):
        raise ValueError("c_dnf values must be positive")
    base = [build_condition(c) if isinstance(c, str) else c for c in conditions]
    rows = []
    for v in values:
        res = run_batch([c.with_c_dnf(v) for c in base], n, master_seed, workers)
        for lab in res.conditions:
            acc = [r.acceptability for r in res.by_condition(lab) if r.acceptability is not None]
            if acc:
                s = mean_ci(acc)
                rows.append(SweepRow(v, lab, s.n, s.mean, s.ci_lo, s.ci_hi))
            else:
                rows.append(SweepRow(v, lab, 0, math.nan, math.nan, math.nan))
    return rows


def records_to_csv(records: Iterable[SimRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        d = r.as_dict()
        w.writerow([_fmt(d[k]) if k not in ("condition", "reading") else (d[k] or "") for k in RECORD_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[SimRecord]:
    """Parse a records CSV; raises ValueError naming the bad row."""
    reader = csv.DictReader(io.StringIO(text))
    missing = set(RECORD_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"records CSV lacks columns {sorted(missing)}")

    def opt(conv, s):
        return None if s == "" else conv(s)

    out = []
    for lineno, row in enumerate(reader, start=2):
        try:
            out.append(SimRecord(
                condition=row["condition"], seed=int(row["seed"]), c_dnf=opt(float, row["c_dnf"]),
                peak_ca=opt(int, row["peak_ca"]), peak_conn=opt(int, row["peak_conn"]),
                acceptability=opt(float, row["acceptability"]), rt=opt(int, row["rt"]),
                sim_id=int(row["sim_id"])))
        except (TypeError, ValueError) as e:
            raise ValueError(f"records CSV line {lineno}: {e}") from None
    return out


def sweep_to_csv(rows: Iterable[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.c_dnf), r.condition, r.n, _fmt(r.mean_acceptability), _fmt(r.ci_lo), _fmt(r.ci_hi)])
    return buf.getvalue()
