"""Mixed-radix positional arithmetic.

A :class:`MixedRadixSpec` has a base ``beta`` and per-digit expansion factors
``lambdas``; digit ``j`` (1-based, least significant first) has place value
``beta**(j-1) * prod(lambdas[:j-1])`` and radix ``beta * lambdas[j-1]``.

Integer bases with unit factors use exact integer arithmetic. Everything else
runs in float64 and the floor is applied before the modulus as written in the
analytic digit formula, so real-valued digits carry no exact carry semantics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .rope_core import RopeParams


@dataclass(frozen=True)
class MixedRadixSpec:
    beta: float
    num_digits: int
    lambdas: tuple = field(default=None)

    def __post_init__(self):
        if not (self.beta > 1 and math.isfinite(self.beta)):
            raise ValueError(f"radix base must be finite and > 1, got {self.beta!r}")
        if int(self.num_digits) != self.num_digits or self.num_digits < 1:
            raise ValueError(f"num_digits must be a positive integer, got {self.num_digits!r}")
        object.__setattr__(self, "num_digits", int(self.num_digits))
        lambdas = (1.0,) * self.num_digits if self.lambdas is None else tuple(
            float(x) for x in self.lambdas
        )
        if len(lambdas) != self.num_digits:
            raise ValueError(f"expected {self.num_digits} expansion factors, got {len(lambdas)}")
        if any(not (x >= 1 and math.isfinite(x)) for x in lambdas):
            raise ValueError("expansion factors must be finite and >= 1")
        object.__setattr__(self, "lambdas", lambdas)

    @property
    def is_uniform(self) -> bool:
        return all(x == 1.0 for x in self.lambdas)

    @property
    def is_exact(self) -> bool:
        """Integer base and unit factors: digit arithmetic is exact."""
        return self.is_uniform and float(self.beta).is_integer()

    def radix(self, j: int) -> float:
        return self.beta * self.lambdas[_index(j, self.num_digits) - 1]

    def place_value(self, j: int):
        j = _index(j, self.num_digits)
        if self.is_exact:
            return int(self.beta) ** (j - 1)
        return self.beta ** (j - 1) * math.prod(self.lambdas[: j - 1])


@dataclass(frozen=True)
class RadixDigits:
    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(self.digits))

    def __len__(self):
        return len(self.digits)

    def check(self, spec: MixedRadixSpec) -> None:
        if len(self.digits) != spec.num_digits:
            raise ValueError(f"expected {spec.num_digits} digits, got {len(self.digits)}")
        for j, d in enumerate(self.digits, start=1):
            if not 0 <= d < spec.radix(j):
                raise ValueError(f"digit {j} = {d!r} outside [0, {spec.radix(j)!r})")


def _index(j: int, n: int) -> int:
    if int(j) != j or not 1 <= j <= n:
        raise IndexError(f"digit index {j!r} outside 1..{n}")
    return int(j)


def _is_int(m) -> bool:
    return isinstance(m, int) or (isinstance(m, float) and m.is_integer())


def digit_at(m, spec: MixedRadixSpec, j: int):
    """Digit j of position m in the (expanded) radix system."""
    if m < 0:
        raise ValueError(f"position must be nonnegative, got {m!r}")
    place = spec.place_value(j)
    if spec.is_exact and _is_int(m):
        return (int(m) // place) % int(spec.beta)
    return math.fmod(math.floor(m / place), spec.radix(j))


def encode(m, spec: MixedRadixSpec) -> RadixDigits:
    return RadixDigits(digit_at(m, spec, j) for j in range(1, spec.num_digits + 1))


def from_digits(d: RadixDigits, spec: MixedRadixSpec):
    """Reconstruct a position as the place-value weighted digit sum."""
    d.check(spec)
    return sum(digit * spec.place_value(j) for j, digit in enumerate(d.digits, start=1))


def incomplete_digits(L, spec: MixedRadixSpec) -> set[int]:
    """Digits that never reach their top value for any input in [0, L].

    Digit j counts ``floor(m / place_j)`` modulo its radix; over ``m <= L``
    that counter takes every integer up to ``floor(L / place_j)``, so the digit
    saturates exactly when that count reaches ``radix_j - 1``.
    """
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L!r}")
    out = set()
    for j in range(1, spec.num_digits + 1):
        place = spec.place_value(j)
        if spec.is_exact and _is_int(L):
            top = int(L) // place
        else:
            top = math.floor(L / place)
        if top < spec.radix(j) - 1:
            out.add(j)
    return out


def representable_range(spec: MixedRadixSpec) -> float:
    if spec.is_exact:
        return int(spec.beta) ** spec.num_digits
    return spec.beta**spec.num_digits * math.prod(spec.lambdas)


def rope_radix_of(params: RopeParams) -> MixedRadixSpec:
    """The radix system whose place values match the RoPE frequencies."""
    return MixedRadixSpec(params.base ** (1.0 / params.num_pairs), params.num_pairs)
