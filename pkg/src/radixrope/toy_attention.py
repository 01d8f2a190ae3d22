"""Single-head rotary attention for end-to-end checks of scale plans.

Inputs are flat ``(head_dim,)`` vectors; after projection, components
``(2j-2, 2j-1)`` form rotary pair j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import softmax

from .extensions import ScalePlan, plan_none, position_divisor, scaled_frequencies
from .rope_core import RopeParams, apply_rotation, as_pairs


@dataclass(frozen=True, eq=False)
class AttentionHead:
    w_q: np.ndarray
    w_k: np.ndarray
    params: RopeParams
    plan: ScalePlan
    use_temperature: bool = False

    def __post_init__(self):
        d = self.params.head_dim
        for name in ("w_q", "w_k"):
            w = np.asarray(getattr(self, name), dtype=np.float64)
            if w.shape != (d, d):
                raise ValueError(f"{name} must be {d}x{d}, got {w.shape}")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"{name} has non-finite entries")
            object.__setattr__(self, name, w)
        if self.plan.num_pairs != self.params.num_pairs:
            raise ValueError("plan and params disagree on the number of rotary pairs")
        object.__setattr__(self, "_sched", scaled_frequencies(self.params, self.plan))

    @classmethod
    def identity(cls, params: RopeParams, plan: Optional[ScalePlan] = None,
                 use_temperature: bool = False) -> "AttentionHead":
        eye = np.eye(params.head_dim)
        return cls(eye, eye, params, plan or plan_none(params), use_temperature)

    @classmethod
    def gaussian(cls, params: RopeParams, plan: Optional[ScalePlan] = None, seed: int = 0,
                 use_temperature: bool = False) -> "AttentionHead":
        rng = np.random.default_rng(seed)
        d = params.head_dim
        scale = 1.0 / math.sqrt(d)
        return cls(rng.normal(0, scale, (d, d)), rng.normal(0, scale, (d, d)), params,
                   plan or plan_none(params), use_temperature)

    @property
    def temperature(self) -> float:
        return self.plan.temperature if self.use_temperature else 1.0

    def query(self, x, m) -> np.ndarray:
        return self._rotate(self.w_q @ np.asarray(x, dtype=np.float64), m)

    def key(self, x, n) -> np.ndarray:
        return self._rotate(self.w_k @ np.asarray(x, dtype=np.float64), n)

    def _rotate(self, projected, pos):
        if pos < 0:
            raise ValueError(f"position must be nonnegative, got {pos!r}")
        pos = pos / position_divisor(self.plan)
        return apply_rotation(as_pairs(projected), self._sched, pos)


def score(head: AttentionHead, x_m, x_n, m, n) -> float:
    """Rotated query-key dot product scaled by 1 / (t sqrt(head_dim))."""
    q = head.query(x_m, m)
    k = head.key(x_n, n)
    return float(np.sum(q * k)) / (head.temperature * math.sqrt(head.params.head_dim))


def attention_row(head: AttentionHead, query_x, keys_x: Sequence, m) -> np.ndarray:
    """Softmax of the query at position m against keys at positions 0..len-1."""
    keys_x = list(keys_x)
    if not keys_x:
        raise ValueError("attention needs at least one key")
    if not 0 <= m < len(keys_x):
        raise ValueError(f"query position {m} outside 0..{len(keys_x) - 1}")
    logits = np.array([score(head, query_x, k, m, n) for n, k in enumerate(keys_x)])
    return softmax(logits)
