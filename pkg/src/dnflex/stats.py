"""Summary statistics and the regression analyses run on simulated batches.

Context is sum-coded: adjacency = +1, possession = -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats as sps

__all__ = [
    "CONTEXT_CODES",
    "TERMS",
    "RegressionFit",
    "GroupSummary",
    "zscore",
    "spearman",
    "ols_interaction",
    "regression_data",
    "context_regression",
    "signflip_magnitude_check",
    "mean_ci",
    "summarize",
]

CONTEXT_CODES = {"adjacency": 1.0, "possession": -1.0}
TERMS = ("intercept", "context", "acceptability", "interaction")
Z95 = 1.96


def zscore(values) -> np.ndarray:
    """Standardize with the sample standard deviation (n - 1)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values to z-score")
    sd = v.std(ddof=1)
    if not sd > 0:
        raise ValueError("zero variance, cannot z-score")
    return (v - v.mean()) / sd


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float(np.dot(a, a)) * float(np.dot(b, b)))
    if denom == 0:
        raise ValueError("constant input, correlation undefined")
    return float(np.clip(np.dot(a, b) / denom, -1.0, 1.0))


def spearman(xs, ys) -> tuple[float, float]:
    """Rank correlation with average ranks for ties.

    The p-value is two-sided from ``t = rho sqrt((n - 2) / (1 - rho^2))``
    on n - 2 degrees of freedom.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-D and of equal length")
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 pairs")
    rho = _pearson(sps.rankdata(x), sps.rankdata(y))
    df = n - 2
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt(df / (1.0 - rho * rho))
    return rho, float(2.0 * sps.t.sf(abs(t), df))


@dataclass(frozen=True)
class RegressionFit:
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p: np.ndarray
    n: int
    df: int
    terms: tuple[str, ...] = TERMS

    def __getitem__(self, term: str) -> dict:
        i = self.terms.index(term)
        return {"beta": float(self.coef[i]), "se": float(self.se[i]),
                "t": float(self.t[i]), "p": float(self.p[i])}

    def as_dict(self) -> dict:
        return {"n": self.n, "df": self.df,
                "coefficients": [dict(term=k, **self[k]) for k in self.terms]}


def ols_interaction(rt, acceptability_z, context) -> RegressionFit:
    """Fit ``rt ~ 1 + context + acc + context:acc`` by least squares.

    Solved through a QR factorization; standard errors come from
    ``sigma^2 (X'X)^-1`` with ``sigma^2 = RSS / (n - 4)``.
    """
    y = np.asarray(rt, dtype=float)
    a = np.asarray(acceptability_z, dtype=float)
    c = np.asarray(context, dtype=float)
    if not (y.shape == a.shape == c.shape) or y.ndim != 1:
        raise ValueError("rt, acceptability and context must be 1-D and of equal length")
    n = y.size
    if n <= 4:
        raise ValueError("need more than 4 observations")
    X = np.column_stack([np.ones(n), c, a, c * a])
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * max(diag.max(), 1.0):
        raise np.linalg.LinAlgError("design matrix is singular")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    df = n - 4
    sigma2 = float(resid @ resid) / df
    rinv = np.linalg.inv(r)
    cov = sigma2 * (rinv @ rinv.T)
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coef / se, np.sign(coef) * np.inf)
    p = 2.0 * sps.t.sf(np.abs(t), df)
    p = np.where(np.isnan(p), 1.0, p)
    return RegressionFit(coef, se, t, p, n, df)


def regression_data(records, flip_possession: bool = False):
    """(rt, acceptability z, context code) for usable rows.

    Rows with a censored RT, no final peak, or a condition outside the two
    contexts are dropped. Acceptability is z-scored over the kept rows.
    """
    rows = [r for r in records
            if r.condition in CONTEXT_CODES and r.rt is not None and r.acceptability is not None]
    ctx = np.array([CONTEXT_CODES[r.condition] for r in rows])
    rt = np.array([float(r.rt) for r in rows])
    if flip_possession:
        rt = np.where(ctx < 0, -rt, rt)
    acc = zscore([r.acceptability for r in rows])
    return rt, acc, ctx


def context_regression(records) -> RegressionFit:
    return ols_interaction(*regression_data(records))


def signflip_magnitude_check(records) -> RegressionFit:
    """Refit after negating possession-context RTs.

    Negating one context mirrors its acceptability slope, so a negative
    interaction that survives the flip means the adjacency slope is the
    steeper of the two.
    """
    return ols_interaction(*regression_data(records, flip_possession=True))


@dataclass(frozen=True)
class GroupSummary:
    n: int
    mean: float
    ci_lo: float
    ci_hi: float


def mean_ci(values: Sequence[float]) -> GroupSummary:
    """Mean with a normal-approximation 95% interval; NaN bounds when n < 2."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty group")
    m = float(v[0]) if np.ptp(v) == 0 else float(v.mean())
    if v.size < 2:
        return GroupSummary(1, m, math.nan, math.nan)
    sd = 0.0 if np.ptp(v) == 0 else float(v.std(ddof=1))
    half = Z95 * sd / math.sqrt(v.size)
    return GroupSummary(int(v.size), m, m - half, m + half)


def summarize(records) -> dict:
    """Per-condition acceptability and RT means with 95% intervals.

    Runs without a peak are left out of the acceptability mean and censored
    runs out of the RT mean; both are counted.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    out = {}
    for cond in dict.fromkeys(r.condition for r in records):
        group = [r for r in records if r.condition == cond]
        acc = [r.acceptability for r in group if r.acceptability is not None]
        rts = [r.rt for r in group if r.rt is not None]
        readings = {k: sum(r.reading == k for r in group) / len(group) for k in ("adjacency", "alienable", "inalienable")}
        out[cond] = {
            "n": len(group),
            "no_peak": len(group) - len(acc),
            "censored_rt": len(group) - len(rts),
            "acceptability": vars(mean_ci(acc)) if acc else None,
            "rt": vars(mean_ci(rts)) if rts else None,
            "reading_share": readings,
        }
    return out
