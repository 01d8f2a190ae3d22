"""Analytic diagnostics for RoPE schedules and scale plans.

* biased positional estimate and its linearity,
* the cosine-sum bound function and its first root,
* cumulative scale curves,
* middle-band bound and a seeded middle-band attention simulation.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .extensions import DegeneratePartitionError, ScalePlan, effective_frequencies
from .rope_core import TWO_PI, FrequencySchedule, RopeParams


def fmt(x) -> str:
    """Locale-independent 9-significant-digit number formatting."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{float(x):.9g}"


@dataclass(frozen=True, eq=False)
class DiagnosticSeries:
    label: str
    xs: np.ndarray
    ys: np.ndarray
    spread: Optional[np.ndarray] = None

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64).reshape(-1)
        ys = np.asarray(self.ys, dtype=np.float64).reshape(-1)
        if xs.size != ys.size:
            raise ValueError(f"xs and ys differ in length ({xs.size} vs {ys.size})")
        if xs.size > 1 and np.any(np.diff(xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        if self.spread is not None:
            spread = np.asarray(self.spread, dtype=np.float64).reshape(-1)
            if spread.size != xs.size:
                raise ValueError("spread must match xs in length")
            object.__setattr__(self, "spread", spread)

    def __len__(self):
        return self.xs.size

    def rows(self):
        spread = self.spread if self.spread is not None else [None] * len(self)
        return zip(self.xs, self.ys, spread)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "spread"])
        for x, y, s in self.rows():
            w.writerow([fmt(x), fmt(y), fmt(s)])
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {"label": self.label, "xs": self.xs.tolist(), "ys": self.ys.tolist()}
        if self.spread is not None:
            out["spread"] = self.spread.tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: dict) -> "DiagnosticSeries":
        return cls(doc["label"], doc["xs"], doc["ys"], doc.get("spread"))


@dataclass(frozen=True)
class BoundProfile:
    series: DiagnosticSeries
    grid_step: float
    root: Optional[float] = field(default=None)


def series_to_long_csv(series: Sequence[DiagnosticSeries]) -> str:
    """Several series in one table with a leading ``label`` column."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["label", "x", "y", "spread"])
    for s in series:
        for x, y, sp in s.rows():
            w.writerow([s.label, fmt(x), fmt(y), fmt(sp)])
    return buf.getvalue()


# -- biased positional estimate ---------------------------------------------

def biased_estimate(sched: FrequencySchedule, beta: float, m) -> np.ndarray | float:
    """sum_j beta**(j-1) * ((m theta_j) mod 2 pi); vectorised over ``m``."""
    weights = beta ** np.arange(len(sched), dtype=np.float64)
    m_arr = np.asarray(m, dtype=np.float64)
    angles = np.fmod(np.multiply.outer(m_arr, sched.thetas), TWO_PI)
    out = angles @ weights
    return float(out) if m_arr.ndim == 0 else out


def r_squared(xs, ys) -> float:
    """Coefficient of determination of the least-squares line; 0 for flat ys."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    slope, intercept = np.polyfit(xs, ys, 1)
    ss_res = float(np.sum((ys - (slope * xs + intercept)) ** 2))
    return min(1.0, max(0.0, 1.0 - ss_res / ss_tot))


def estimate_series(sched: FrequencySchedule, beta: float, L: int, label: str = "") -> DiagnosticSeries:
    ms = np.arange(L + 1, dtype=np.float64)
    return DiagnosticSeries(label, ms, biased_estimate(sched, beta, ms))


def linearity_score(sched: FrequencySchedule, beta: float, L: int) -> float:
    if L < 16:
        raise ValueError(f"linearity needs L >= 16, got {L}")
    s = estimate_series(sched, beta, L)
    return r_squared(s.xs, s.ys)


# -- bound function -----------------------------------------------------------

def bound_function(sched: FrequencySchedule, m) -> np.ndarray | float:
    """B(m) = sum_j cos(m theta_j); vectorised over ``m``."""
    m_arr = np.asarray(m, dtype=np.float64)
    out = np.cos(np.multiply.outer(m_arr, sched.thetas)).sum(axis=-1)
    return float(out) if m_arr.ndim == 0 else out


def _grid(m_max: float, grid_step: float) -> np.ndarray:
    n = int(math.floor(m_max / grid_step + 1e-9))
    return np.arange(n + 1, dtype=np.float64) * grid_step


def first_sign_change(fn, xs: np.ndarray, ys: np.ndarray, rtol: float = 1e-6) -> Optional[float]:
    """Refine the first crossing from positive to non-positive values by bisection."""
    hits = np.nonzero(ys <= 0)[0]
    if hits.size == 0:
        return None
    k = int(hits[0])
    if k == 0 or ys[k] == 0:
        return float(xs[k])
    return float(bisect(fn, xs[k - 1], xs[k], rtol=rtol, xtol=1e-12))


def find_bound_root(sched: FrequencySchedule, m_max: float, grid_step: float,
                    label: str = "bound") -> BoundProfile:
    """Scan B on [0, m_max] and bisect its first sign change."""
    if not grid_step > 0 or grid_step > m_max / 100:
        raise ValueError(f"grid_step must be in (0, m_max/100], got {grid_step!r} for m_max={m_max!r}")
    xs = _grid(m_max, grid_step)
    ys = bound_function(sched, xs)
    root = first_sign_change(lambda m: bound_function(sched, m), xs, ys)
    return BoundProfile(DiagnosticSeries(label, xs, ys), grid_step, root)


def default_scan(params: RopeParams, S: float) -> tuple[float, float]:
    """(m_max, grid_step) = (16 S L_train, L_train / 64)."""
    return 16.0 * S * params.trained_len, params.trained_len / 64.0


def plan_bound_root(params: RopeParams, plan: ScalePlan, m_max=None, grid_step=None,
                    band_only: bool = False) -> BoundProfile:
    d_max, d_step = default_scan(params, plan.scale)
    m_max = d_max if m_max is None else m_max
    grid_step = d_step if grid_step is None else grid_step
    sched = effective_frequencies(params, plan)
    if band_only:
        sched = FrequencySchedule(sched.thetas[_band(plan)])
    return find_bound_root(sched, m_max, grid_step, label=plan.method.value)


# -- cumulative curves and middle band -----------------------------------------

def cumulative_scale_curve(plan: ScalePlan) -> DiagnosticSeries:
    xs = np.arange(1, plan.num_pairs + 1, dtype=np.float64)
    return DiagnosticSeries(plan.method.value, xs, plan.cumulative.copy())


def _band(plan: ScalePlan) -> slice:
    if plan.band_size < 1:
        raise DegeneratePartitionError(f"{plan.method.value} plan has no middle band")
    return plan.band


def middle_band_bound(plan: ScalePlan, params: RopeParams, m):
    """Bound function restricted to the middle dimensions of the plan."""
    band = _band(plan)
    thetas = effective_frequencies(params, plan).thetas[band]
    return bound_function(FrequencySchedule(thetas), m)


def oscillation_amplitude(ys) -> float:
    ys = np.asarray(ys, dtype=np.float64)
    return float(ys.max() - ys.min())


def mean_crossings(xs, ys, reference_max: float) -> int:
    """Times ``ys`` crosses the mean of its own samples with ``x <= reference_max``."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    ref = ys[xs <= reference_max].mean()
    signs = np.sign(ys - ref)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def _pair_draws(seed: int, position_index: int, pairs: int, num_pairs: int):
    rng = np.random.default_rng([seed, position_index])
    u = rng.standard_normal((pairs, num_pairs, 2))
    v = rng.standard_normal((pairs, num_pairs, 2))
    return u, v


def middle_attention_sim(plan: ScalePlan, params: RopeParams, pairs: int,
                         positions: Sequence[float], seed: int) -> DiagnosticSeries:
    """Mean and spread of middle-band query-key dot products per relative position.

    Position ``i`` gets its own ``pairs`` standard-normal (u, v) draws from the
    stream seeded by ``(seed, i)``. ``u`` is rotated by m and ``v`` by 0.
    """
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    positions = np.asarray(positions, dtype=np.float64).reshape(-1)
    if positions.size == 0:
        raise ValueError("positions must be nonempty")
    band = _band(plan)
    thetas = effective_frequencies(params, plan).thetas[band]
    means = np.empty(positions.size)
    spreads = np.empty(positions.size)
    for i, m in enumerate(positions):
        u, v = _pair_draws(seed, i, pairs, params.num_pairs)
        u, v = u[:, band], v[:, band]
        ang = np.fmod(m * thetas, TWO_PI)
        c, s = np.cos(ang), np.sin(ang)
        ru0 = c * u[..., 0] - s * u[..., 1]
        ru1 = s * u[..., 0] + c * u[..., 1]
        dots = (ru0 * v[..., 0] + ru1 * v[..., 1]).sum(axis=1)
        means[i] = dots.mean()
        spreads[i] = dots.std(ddof=1) if pairs > 1 else 0.0
    return DiagnosticSeries(plan.method.value, positions, means, spreads)
