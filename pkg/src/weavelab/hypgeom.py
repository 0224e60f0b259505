"""Hyperbolic volume primitives and closed-form volume bounds.

The Lobachevsky function is evaluated through the Clausen function,
``Lambda(theta) = Cl_2(2 theta) / 2``, using the Bernoulli-number expansion

    Cl_2(x) = x - x log|x| + sum_k zeta(2k) x^(2k+1) / (k (2k+1) (2 pi)^(2k))

on the reduced argument ``|x| <= pi``, where successive terms shrink by at
least a factor of four.  Forty terms put the truncation error far below 1e-16.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import zeta

from .errors import DomainError

__all__ = [
    "lobachevsky",
    "lobachevsky_derivative",
    "ideal_tet_volume",
    "GeomConstants",
    "CONSTANTS",
    "V3",
    "V8",
    "CATALAN",
    "VolumeBounds",
    "thurston_upper",
    "adams_upper",
    "twist_bounds",
    "alternating_bounds",
    "dehn_filling_factor",
    "weaving_bounds",
    "w3_axis_volume",
]

_NTERMS = 40
_K = np.arange(1, _NTERMS + 1, dtype=float)
# coefficients of (x^2)^k, highest power first for np.polyval
_CLAUSEN_COEFFS = (zeta(2 * _K) / (_K * (2 * _K + 1) * (2 * math.pi) ** (2 * _K)))[::-1]


def _clausen2(x):
    """Cl_2 on arbitrary real input (array or scalar)."""
    x = np.asarray(x, dtype=float)
    # reduce to (-pi, pi]; Cl_2 is 2pi-periodic and odd
    r = x - 2 * math.pi * np.round(x / (2 * math.pi))
    ar = np.abs(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(ar > 0, r - r * np.log(ar), 0.0)
    return head + r * _poly(r * r)


def _poly(u):
    # sum_k c_k u^k for k >= 1
    return u * np.polyval(_CLAUSEN_COEFFS, u)


def lobachevsky(theta):
    """Lobachevsky function ``-int_0^theta log|2 sin t| dt``.

    Accepts scalars or arrays.  The result is odd and pi-periodic; its maximum
    on ``[0, pi]`` sits at ``pi/6``.
    """
    out = 0.5 * _clausen2(2 * np.asarray(theta, dtype=float))
    return float(out) if out.ndim == 0 else out


def lobachevsky_derivative(theta):
    """``d/dtheta Lambda(theta) = -log|2 sin theta|`` (infinite at multiples of pi)."""
    with np.errstate(divide="ignore"):
        out = -np.log(np.abs(2 * np.sin(np.asarray(theta, dtype=float))))
    return float(out) if out.ndim == 0 else out


def ideal_tet_volume(x: float, y: float, z: float) -> float:
    """Volume of the ideal tetrahedron with dihedral angles x, y, z.

    Flat tetrahedra (one angle equal to pi) are allowed and have volume zero.
    """
    if min(x, y, z) < 0:
        raise DomainError(f"negative dihedral angle in ({x}, {y}, {z})")
    if abs(x + y + z - math.pi) > 1e-9:
        raise DomainError(f"angles sum to {x + y + z!r}, expected pi")
    return float(lobachevsky(x) + lobachevsky(y) + lobachevsky(z))


def _catalan() -> float:
    # Ramanujan's accelerated series, independent of the Clausen evaluation
    total, binom = 0.0, 1.0
    for n in range(60):
        if n:
            binom *= (2 * n) * (2 * n - 1) / (n * n)
        total += 1.0 / ((2 * n + 1) ** 2 * binom)
    return math.pi / 8 * math.log(2 + math.sqrt(3)) + 3 / 8 * total


@dataclass(frozen=True)
class GeomConstants:
    """Volumes of the regular ideal tetrahedron/octahedron and Catalan's constant."""

    v3: float
    v8: float
    catalan: float

    @classmethod
    def compute(cls) -> "GeomConstants":
        return cls(
            v3=2 * lobachevsky(math.pi / 6),
            v8=8 * lobachevsky(math.pi / 4),
            catalan=_catalan(),
        )


CONSTANTS = GeomConstants.compute()
V3 = CONSTANTS.v3
V8 = CONSTANTS.v8
CATALAN = CONSTANTS.catalan


@dataclass(frozen=True)
class VolumeBounds:
    """A two-sided (or upper-only) volume estimate with provenance tags.

    ``warning`` is set when the formulas are applied outside the range where
    they are informative, e.g. a lower bound exceeding the upper bound.
    """

    lower: Optional[float]
    upper: float
    lower_source: Optional[str] = None
    upper_source: Optional[str] = None
    upper_strict: bool = False
    warning: Optional[str] = None

    @property
    def consistent(self) -> bool:
        return self.lower is None or self.lower <= self.upper

    def to_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "lower_source": self.lower_source,
            "upper_source": self.upper_source,
            "upper_strict": self.upper_strict,
            "warning": self.warning,
        }


def _require_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise DomainError(f"{name} must be an integer, got {value!r}")
    if value < minimum:
        raise DomainError(f"{name} must be >= {minimum}, got {value}")


def thurston_upper(c: int) -> float:
    """Octahedral upper bound ``c * v8`` for a diagram with c crossings."""
    _require_int("c", c, 1)
    return c * V8


def adams_upper(c: int) -> float:
    """Upper bound ``v8 (c - 5) + 4 v3`` valid for c >= 5."""
    _require_int("c", c, 5)
    return V8 * (c - 5) + 4 * V3


def twist_bounds(t: int) -> VolumeBounds:
    """Twist-number bounds ``v8/2 (t-2) <= vol < 10 v3 (t-1)``."""
    _require_int("t", t, 2)
    return VolumeBounds(
        lower=V8 / 2 * (t - 2),
        upper=10 * V3 * (t - 1),
        lower_source="twist-lower",
        upper_source="twist-upper",
        upper_strict=True,
    )


def alternating_bounds(c: int) -> VolumeBounds:
    """Bounds for a prime, twist-reduced, bigon-free alternating diagram.

    For small c the lower bound can exceed the upper one; the pair is still
    returned but carries a warning.
    """
    _require_int("c", c, 5)
    lower = V8 / 2 * (c - 2)
    upper = adams_upper(c)
    warning = None
    if lower > upper:
        warning = f"lower bound {lower:.6f} exceeds upper bound {upper:.6f} at c={c}; formulas not informative here"
    return VolumeBounds(lower, upper, "twist-lower(t=c)", "adams-upper", warning=warning)


def dehn_filling_factor(q: int) -> float:
    """Volume-change factor ``(1 - (2 pi / q)^2)^(3/2)`` for a filling slope of length q > 2 pi."""
    _require_int("q", q, 7)
    return (1.0 - (2 * math.pi / q) ** 2) ** 1.5


def weaving_bounds(p: int, q: int) -> VolumeBounds:
    """Volume bounds for the weaving knot W(p, q).

    The upper bound ``(v8 (p-3) + 4 v3) q`` holds for every q >= 1; the lower
    bound ``v8 (p-2) q * dehn_filling_factor(q)`` only once q >= 7.
    """
    _require_int("p", p, 3)
    _require_int("q", q, 1)
    upper = (V8 * (p - 3) + 4 * V3) * q
    lower = V8 * (p - 2) * q * dehn_filling_factor(q) if q >= 7 else None
    return VolumeBounds(
        lower,
        upper,
        "angle-structure+filling" if lower is not None else None,
        "polyhedral-decomposition",
    )


def w3_axis_volume(q: int) -> float:
    """Volume of the complement of W(3, q) together with its braid axis."""
    _require_int("q", q, 1)
    return 4 * q * V3
