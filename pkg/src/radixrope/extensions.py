"""Scale plans for RoPE context extension.

Every plan is a per-dimension vector of radix expansion factors ``lambdas``
together with their exclusive prefix products ``cumulative`` (the divisor
applied to each frequency: ``theta'_j = theta_j / cumulative_j``).

Methods:

* ``PI`` divides positions by S; frequencies are untouched.
* ``NTK`` uses one factor ``S**(1/(D_r-1))`` on every dimension.
* ``YaRN``, ``MrRoPE-Uni`` and ``MrRoPE-Pro`` keep ``lambda = 1`` outside the
  half-open band ``[d_low, d_high)`` and reach total scale S across it with,
  respectively, decreasing, constant and increasing factors.

Band boundaries follow the YaRN convention: ``d_low`` is the last dimension
that completes more than ``beta_hp`` turns over the trained context and
``d_high`` the first one completing fewer than ``alpha`` turns. Some write-ups
swap the names of the two hyperparameters; here ``alpha < beta_hp`` always.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .rope_core import TWO_PI, FrequencySchedule, RopeParams, build_frequencies

DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 32.0


class Method(str, enum.Enum):
    NONE = "none"
    PI = "pi"
    NTK = "ntk"
    YARN = "yarn"
    MRROPE_UNI = "mrrope-uni"
    MRROPE_PRO = "mrrope-pro"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown method {value!r}; choose from {[m.value for m in cls]}")


BANDED = (Method.YARN, Method.MRROPE_UNI, Method.MRROPE_PRO)


class DegeneratePartitionError(ValueError):
    """The (alpha, beta) hyperparameters leave no middle band."""


@dataclass(frozen=True, eq=False)
class ScalePlan:
    method: Method
    scale: float
    d_low: int
    d_high: int
    lambdas: np.ndarray
    cumulative: np.ndarray
    temperature: float = 1.0
    alpha: float = DEFAULT_ALPHA
    beta_hp: float = DEFAULT_BETA

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        lam = np.array(self.lambdas, dtype=np.float64).reshape(-1)
        cum = np.array(self.cumulative, dtype=np.float64).reshape(-1)
        n = lam.size
        if cum.size != n:
            raise ValueError("lambdas and cumulative must have the same length")
        if not self.scale >= 1:
            raise ValueError(f"scale must be >= 1, got {self.scale!r}")
        if not 1 <= self.d_low <= self.d_high <= n + 1:
            raise ValueError(f"need 1 <= d_low <= d_high <= {n + 1}, got ({self.d_low}, {self.d_high})")
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")
        if np.any(lam < 1) or not np.all(np.isfinite(lam)):
            raise ValueError("expansion factors must be finite and >= 1")
        outside = np.ones(n, dtype=bool)
        outside[self.d_low - 1 : self.d_high - 1] = False
        if np.any(lam[outside] != 1.0):
            raise ValueError("expansion factors must equal 1 outside [d_low, d_high)")
        if cum[0] != 1.0 or np.any(np.diff(cum) < 0):
            raise ValueError("cumulative scale must start at 1 and be non-decreasing")
        lam.setflags(write=False)
        cum.setflags(write=False)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "cumulative", cum)
        object.__setattr__(self, "scale", float(self.scale))
        object.__setattr__(self, "d_low", int(self.d_low))
        object.__setattr__(self, "d_high", int(self.d_high))

    @property
    def num_pairs(self) -> int:
        return self.lambdas.size

    @property
    def band(self) -> slice:
        """0-based slice of the middle dimensions [d_low, d_high)."""
        return slice(self.d_low - 1, self.d_high - 1)

    @property
    def band_size(self) -> int:
        return self.d_high - self.d_low

    def band_product(self) -> float:
        return float(np.prod(self.lambdas[self.band]))


def _exclusive_cumprod(lam: np.ndarray) -> np.ndarray:
    return np.concatenate([[1.0], np.cumprod(lam)[:-1]])


def _check_scale(S) -> float:
    if not (S >= 1 and math.isfinite(S)):
        raise ValueError(f"scale factor must be finite and >= 1, got {S!r}")
    return float(S)


def compute_boundaries(params: RopeParams, alpha: float = DEFAULT_ALPHA,
                       beta_hp: float = DEFAULT_BETA) -> tuple[int, int]:
    """Return ``(d_low, d_high)`` with 1-based indices.

    Falls back to ``d_low = 1`` when no dimension turns more than ``beta_hp``
    times and to ``d_high = D_r + 1`` when every dimension turns at least
    ``alpha`` times.
    """
    if not 0 < alpha < beta_hp:
        raise ValueError(f"need 0 < alpha < beta, got alpha={alpha!r}, beta={beta_hp!r}")
    sweep = params.trained_len * build_frequencies(params).thetas
    idx = np.arange(1, params.num_pairs + 1)
    fast = idx[sweep > beta_hp * TWO_PI]
    slow = idx[sweep < alpha * TWO_PI]
    d_low = int(fast.max()) if fast.size else 1
    d_high = int(slow.min()) if slow.size else params.num_pairs + 1
    if d_low >= d_high:
        raise DegeneratePartitionError(
            f"(alpha={alpha:g}, beta={beta_hp:g}) gives d_low={d_low} >= d_high={d_high}; "
            "lower alpha or raise beta to open a middle band"
        )
    return d_low, d_high


def hyperparams_for_band(params: RopeParams, d_low: int, d_high: int) -> tuple[float, float]:
    """Pick ``(alpha, beta_hp)`` that :func:`compute_boundaries` maps to the band.

    Each hyperparameter is placed strictly between the rotation progress of two
    neighbouring dimensions, in log space.
    """
    n = params.num_pairs
    if not 1 <= d_low < d_high <= n + 1:
        raise DegeneratePartitionError(f"need 1 <= d_low < d_high <= {n + 1}, got ({d_low}, {d_high})")
    log_r1 = math.log(params.trained_len / TWO_PI)
    step = 2.0 * math.log(params.base) / params.head_dim  # log ratio between neighbours

    def log_r(j):
        return log_r1 - (j - 1) * step

    beta_hp = math.exp(log_r(d_low) - 0.4 * step)
    alpha = math.exp(log_r(d_high) + 0.3 * step)
    return alpha, beta_hp


def temperature(S: float) -> float:
    """Attention temperature t with sqrt(1/t) = 0.1 ln S + 1."""
    S = _check_scale(S)
    return 1.0 / (0.1 * math.log(S) + 1.0) ** 2


def plan_none(params: RopeParams) -> ScalePlan:
    n = params.num_pairs
    return ScalePlan(Method.NONE, 1.0, n + 1, n + 1, np.ones(n), np.ones(n))


def plan_pi(params: RopeParams, S: float) -> ScalePlan:
    """Position interpolation: consumers rotate by ``m / S``."""
    S = _check_scale(S)
    n = params.num_pairs
    return ScalePlan(Method.PI, S, n + 1, n + 1, np.ones(n), np.ones(n))


def plan_ntk(params: RopeParams, S: float) -> ScalePlan:
    S = _check_scale(S)
    n = params.num_pairs
    if n < 2:
        raise ValueError("NTK scaling needs at least two rotary pairs")
    lam = np.full(n, S ** (1.0 / (n - 1)))
    return ScalePlan(Method.NTK, S, 1, n + 1, lam, _exclusive_cumprod(lam))


def yarn_divisor(r, S: float, alpha: float, beta_hp: float):
    """YaRN frequency divisor ``S (b - a) / (b + (S - 1) r - S a)`` at progress r.

    Equals 1 at ``r = beta_hp`` and S at ``r = alpha``.
    """
    return S * (beta_hp - alpha) / (beta_hp + (S - 1.0) * np.asarray(r, dtype=np.float64) - S * alpha)


def yarn_cumulative(params: RopeParams, S: float, alpha: float, beta_hp: float,
                    d_low: int, d_high: int) -> np.ndarray:
    """Cumulative YaRN divisors per dimension.

    Only dimensions strictly inside ``(d_low, d_high)`` use the closed form;
    below the band the divisor is 1 and from ``d_high`` on it is S.
    """
    r = params.trained_len * build_frequencies(params).thetas / TWO_PI
    # clip only absorbs rounding: r lies in [alpha, beta] strictly inside the band
    ramp = np.clip(yarn_divisor(r, S, alpha, beta_hp), 1.0, S)
    idx = np.arange(1, params.num_pairs + 1)
    return np.where(idx <= d_low, 1.0, np.where(idx >= d_high, S, ramp))


def yarn_ramp_frequencies(params: RopeParams, S: float, alpha: float = DEFAULT_ALPHA,
                          beta_hp: float = DEFAULT_BETA) -> FrequencySchedule:
    """YaRN frequencies from the gamma ramp: theta ((1 - g) / S + g)."""
    thetas = build_frequencies(params).thetas
    r = params.trained_len * thetas / TWO_PI
    gamma = np.clip((r - alpha) / (beta_hp - alpha), 0.0, 1.0)
    return FrequencySchedule(thetas * ((1.0 - gamma) / S + gamma))


def _resolve_band(params, alpha, beta_hp, bounds):
    if bounds is None:
        return compute_boundaries(params, alpha, beta_hp)
    d_low, d_high = (int(x) for x in bounds)
    if not 1 <= d_low < d_high <= params.num_pairs + 1:
        raise DegeneratePartitionError(
            f"band ({d_low}, {d_high}) is empty or out of range 1..{params.num_pairs + 1}"
        )
    return d_low, d_high


def plan_yarn(params: RopeParams, S: float, alpha: float = DEFAULT_ALPHA,
              beta_hp: float = DEFAULT_BETA) -> ScalePlan:
    S = _check_scale(S)
    d_low, d_high = compute_boundaries(params, alpha, beta_hp)
    cum = yarn_cumulative(params, S, alpha, beta_hp, d_low, d_high)
    lam = np.append(cum[1:], S) / cum
    return ScalePlan(Method.YARN, S, d_low, d_high, lam, cum, temperature(S), alpha, beta_hp)


def _banded_plan(method, params, S, alpha, beta_hp, bounds, exponents_fn):
    S = _check_scale(S)
    d_low, d_high = _resolve_band(params, alpha, beta_hp, bounds)
    n = d_high - d_low
    eps = np.zeros(params.num_pairs)
    eps[d_low - 1 : d_high - 1] = exponents_fn(n)
    lam = np.power(S, eps)
    return ScalePlan(method, S, d_low, d_high, lam, _exclusive_cumprod(lam),
                     temperature(S), alpha, beta_hp)


def uniform_exponents(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def progressive_exponents(n: int) -> np.ndarray:
    """Arithmetic progression 2 k / ((1 + n) n), k = 1..n; sums to 1."""
    k = np.arange(1, n + 1, dtype=np.float64)
    return 2.0 * k / ((1.0 + n) * n)


def plan_mrrope_uni(params: RopeParams, S: float, alpha: float = DEFAULT_ALPHA,
                    beta_hp: float = DEFAULT_BETA, *, bounds=None) -> ScalePlan:
    """Constant factor ``S**(1/n)`` over the n middle dimensions."""
    return _banded_plan(Method.MRROPE_UNI, params, S, alpha, beta_hp, bounds, uniform_exponents)


def plan_mrrope_pro(params: RopeParams, S: float, alpha: float = DEFAULT_ALPHA,
                    beta_hp: float = DEFAULT_BETA, *, bounds=None) -> ScalePlan:
    """Factors ``S**eps_j`` with eps growing linearly across the band."""
    return _banded_plan(Method.MRROPE_PRO, params, S, alpha, beta_hp, bounds, progressive_exponents)


def compile_plan(params: RopeParams, method, S: float = 1.0, alpha: float = DEFAULT_ALPHA,
                 beta_hp: float = DEFAULT_BETA, *, bounds=None) -> ScalePlan:
    """Dispatch on ``method``; ``bounds`` overrides the (alpha, beta) partition."""
    method = Method.parse(method)
    if bounds is not None and method in BANDED:
        alpha, beta_hp = hyperparams_for_band(params, *bounds)
    if method is Method.NONE:
        return plan_none(params)
    if method is Method.PI:
        return plan_pi(params, S)
    if method is Method.NTK:
        return plan_ntk(params, S)
    if method is Method.YARN:
        return plan_yarn(params, S, alpha, beta_hp)
    if method is Method.MRROPE_UNI:
        return plan_mrrope_uni(params, S, alpha, beta_hp, bounds=bounds)
    return plan_mrrope_pro(params, S, alpha, beta_hp, bounds=bounds)


def _check_plan(params: RopeParams, plan: ScalePlan):
    if plan.num_pairs != params.num_pairs:
        raise ValueError(
            f"plan has {plan.num_pairs} dimensions but params have {params.num_pairs}"
        )


def scaled_frequencies(params: RopeParams, plan: ScalePlan) -> FrequencySchedule:
    """theta_j / cumulative_j. PI plans return the unscaled schedule."""
    _check_plan(params, plan)
    base = build_frequencies(params)
    if plan.method in (Method.NONE, Method.PI):
        return base
    return FrequencySchedule(base.thetas / plan.cumulative)


def position_divisor(plan: ScalePlan) -> float:
    """Factor positions are divided by before rotation (S for PI, else 1)."""
    return plan.scale if plan.method is Method.PI else 1.0


def effective_frequencies(params: RopeParams, plan: ScalePlan) -> FrequencySchedule:
    """Frequencies whose angles at m equal the plan's angles at m.

    For PI this folds the position division into the frequencies.
    """
    sched = scaled_frequencies(params, plan)
    if plan.method is Method.PI:
        return FrequencySchedule(sched.thetas / plan.scale)
    return sched
