"""Model parameters and interval geometry.

The model is fixed by the number of Gaussian factors ``M`` and the
dimension offsets ``nu_1, ..., nu_M`` (all nonnegative; ``nu_0 = 0`` is
implicit and always prepended where the extended list is needed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ModelParams:
    """Number of matrix factors and their exponents.

    ``nu`` holds (nu_1, ..., nu_M); nu_0 = 0 is implicit.
    """

    nu: tuple[float, ...]

    def __post_init__(self):
        nu = tuple(float(v) for v in self.nu)
        if len(nu) < 1:
            raise DomainError("need at least one factor (M >= 1)")
        if any(v < 0 for v in nu):
            raise DomainError(f"all nu must be nonnegative, got {nu}")
        object.__setattr__(self, "nu", nu)

    @property
    def M(self) -> int:
        return len(self.nu)

    @property
    def nu_full(self) -> tuple[float, ...]:
        """(nu_0, nu_1, ..., nu_M) with the fixed nu_0 = 0 prepended."""
        return (0.0,) + self.nu

    def nu_array(self) -> np.ndarray:
        return np.asarray(self.nu, dtype=float)


@dataclass(frozen=True)
class IntervalUnion:
    """Union of disjoint open intervals (a_1,a_2) u ... u (a_{2m-1},a_{2m})."""

    endpoints: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(float(a) for a in self.endpoints)
        if len(pts) == 0 or len(pts) % 2 != 0:
            raise DomainError("endpoint count must be positive and even")
        if pts[0] < 0:
            raise DomainError("endpoints must be nonnegative")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise DomainError(f"endpoints must be strictly increasing, got {pts}")
        object.__setattr__(self, "endpoints", pts)

    @property
    def m(self) -> int:
        return len(self.endpoints) // 2

    @property
    def intervals(self) -> tuple[tuple[float, float], ...]:
        pts = self.endpoints
        return tuple((pts[2 * i], pts[2 * i + 1]) for i in range(self.m))

    @property
    def total_length(self) -> float:
        return sum(b - a for a, b in self.intervals)

    def contains(self, x: float) -> bool:
        return any(a < x < b for a, b in self.intervals)

    def with_endpoint(self, k: int, value: float) -> "IntervalUnion":
        """Copy with endpoint index ``k`` (0-based) moved to ``value``."""
        pts = list(self.endpoints)
        pts[k] = value
        return IntervalUnion(tuple(pts))


def single_interval(s: float) -> IntervalUnion:
    """The interval (0, s)."""
    return IntervalUnion((0.0, float(s)))
