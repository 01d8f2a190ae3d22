"""Rotary position embedding geometry.

Frequencies, rotation angles, block-wise rotation of pair vectors,
wavelengths and rotation progress. Dimension indices ``j`` at the public
boundary are 1-based; arrays are stored 0-based (``thetas[j - 1]``).

Embedding vectors are numpy arrays of shape ``(D_r, 2)``: row ``j - 1``
holds the real coordinates of complex pair ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Beyond this, a single float64 fmod of m * theta loses too many bits.
MAX_POSITION = 2**40


class InvalidParamsError(ValueError):
    pass


@dataclass(frozen=True)
class RopeParams:
    """Model geometry: rotary base, head dimension, trained context length."""

    base: float
    head_dim: int
    trained_len: int

    def __post_init__(self):
        if not (self.base > 0 and math.isfinite(self.base)):
            raise InvalidParamsError(f"base must be a positive finite number, got {self.base!r}")
        if self.base == 1:
            raise InvalidParamsError("base must not equal 1")
        if int(self.head_dim) != self.head_dim or self.head_dim < 2 or self.head_dim % 2:
            raise InvalidParamsError(
                f"head_dim must be a positive even integer, got {self.head_dim!r}"
            )
        if int(self.trained_len) != self.trained_len or self.trained_len < 1:
            raise InvalidParamsError(
                f"trained_len must be a positive integer, got {self.trained_len!r}"
            )
        object.__setattr__(self, "base", float(self.base))
        object.__setattr__(self, "head_dim", int(self.head_dim))
        object.__setattr__(self, "trained_len", int(self.trained_len))

    @property
    def num_pairs(self) -> int:
        """D_r, the number of rotated complex pairs."""
        return self.head_dim // 2


@dataclass(frozen=True, eq=False)
class FrequencySchedule:
    """Per-pair rotational frequencies in radians per token."""

    thetas: np.ndarray

    def __post_init__(self):
        arr = np.array(self.thetas, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValueError("schedule needs at least one frequency")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("frequencies must be positive and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "thetas", arr)

    def __len__(self) -> int:
        return self.thetas.size

    def __eq__(self, other):
        if not isinstance(other, FrequencySchedule):
            return NotImplemented
        return np.array_equal(self.thetas, other.thetas)

    def theta(self, j: int) -> float:
        return float(self.thetas[_check_index(j, len(self)) - 1])


def _check_index(j: int, num_pairs: int) -> int:
    if int(j) != j or not 1 <= j <= num_pairs:
        raise IndexError(f"dimension index {j!r} outside 1..{num_pairs}")
    return int(j)


def build_frequencies(params: RopeParams) -> FrequencySchedule:
    """theta_j = base ** (-2 (j - 1) / head_dim) for j = 1..D_r."""
    exponents = np.arange(params.num_pairs, dtype=np.float64) * (-2.0 / params.head_dim)
    return FrequencySchedule(np.power(params.base, exponents))


def _check_position(m) -> float:
    if not m >= 0:
        raise ValueError(f"position must be nonnegative, got {m!r}")
    if m > MAX_POSITION:
        raise ValueError(f"position {m!r} exceeds supported maximum 2**40")
    return m


def rotation_angles(sched: FrequencySchedule, m: float) -> np.ndarray:
    """Angles (m * theta_j) mod 2 pi, each in [0, 2 pi)."""
    m = _check_position(m)
    return np.fmod(m * sched.thetas, TWO_PI)


def apply_rotation(vec: np.ndarray, sched: FrequencySchedule, m: float) -> np.ndarray:
    """Rotate pair j of ``vec`` by m * theta_j (the 2x2 block A_j)."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (len(sched), 2):
        raise ValueError(
            f"embedding shape {vec.shape} does not match schedule with {len(sched)} pairs"
        )
    if m == 0:
        return vec.copy()
    angles = rotation_angles(sched, m)
    c, s = np.cos(angles), np.sin(angles)
    x, y = vec[:, 0], vec[:, 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=1)


def wavelength(sched: FrequencySchedule, j: int) -> float:
    """Tokens needed for pair j to complete one rotation."""
    return TWO_PI / sched.theta(j)


def rotation_progress(sched: FrequencySchedule, j: int, L: float) -> float:
    """Cycles completed by pair j over a context of L tokens."""
    return L * sched.theta(j) / TWO_PI


def wavelengths(sched: FrequencySchedule) -> np.ndarray:
    return TWO_PI / sched.thetas


def rotation_progresses(sched: FrequencySchedule, L: float) -> np.ndarray:
    return L * sched.thetas / TWO_PI


def is_incomplete_cycle(sched: FrequencySchedule, j: int, L: float) -> bool:
    """True when pair j never finishes a full turn within L tokens."""
    return L * sched.theta(j) < TWO_PI


def as_pairs(x: np.ndarray) -> np.ndarray:
    """View a flat ``(head_dim,)`` vector as ``(D_r, 2)`` interleaved pairs."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2 and x.shape[1] == 2:
        return x
    if x.ndim != 1 or x.size % 2:
        raise ValueError(f"cannot view shape {x.shape} as rotary pairs")
    return x.reshape(-1, 2)
