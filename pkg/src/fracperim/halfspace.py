"""Closed forms and reference values for the halfspace.

The halfspace through a box slab is the calibrating configuration: in one
dimension its interior energy has a closed form, in any dimension the
scaled energy tends to the volume of the unit ball one dimension down,
and a product upper bound ties the higher-dimensional value to the 1D
closed form through a smooth radial profile integral.
"""

from __future__ import annotations

from dataclasses import dataclass

from scipy import integrate

from .errors import ConfigError
from .geometry import unit_ball_volume
from .weights import as_order

__all__ = [
    "HalfspaceValue",
    "j1_halfspace_1d",
    "rho_integral",
    "halfspace_limit_constant",
]


@dataclass(frozen=True)
class HalfspaceValue:
    """Reference halfspace energy on the slab of half-height a."""

    n: int
    s: float
    a: float
    value: float
    is_exact: bool

    def __post_init__(self):
        if self.value <= 0:
            raise ConfigError("halfspace energy must be positive")


def j1_halfspace_1d(a: float, s) -> HalfspaceValue:
    """Exact 1D interior energy of the halfspace on (-a, a).

    Equals a^(1-s) (2 - 2^(1-s)) / (s (1-s)); multiplied by (1-s) it tends
    to 1 as s increases to 1.
    """
    s = as_order(s).s
    if a <= 0:
        raise ConfigError("slab half-height must be positive")
    value = a ** (1.0 - s) * (2.0 - 2.0 ** (1.0 - s)) / (s * (1.0 - s))
    return HalfspaceValue(1, s, a, value, True)


def rho_integral(n: int, s: float) -> float:
    """Radial profile integral int_0^inf rho^(n-2) (1+rho^2)^-((n+s)/2) drho.

    Defined for n >= 2 and 0 < s <= 1.  At s = 1 the antiderivative
    rho^(n-1) / ((n-1)(1+rho^2)^((n-1)/2)) gives exactly 1/(n-1).  For
    s < 1 the integral is split at rho = 1; inverting rho on the outer
    piece turns it into int_0^1 rho^s (1+rho^2)^-((n+s)/2) drho, so both
    pieces are smooth on [0, 1] and integrate to relative error 1e-12.
    """
    if n < 2:
        raise ConfigError("radial profile integral needs dimension >= 2")
    if not 0.0 < s <= 1.0:
        raise ConfigError("order must lie in (0, 1]")
    if s == 1.0:
        return 1.0 / (n - 1)

    def f(r):
        return (r ** (n - 2) + r**s) * (1.0 + r * r) ** (-(n + s) / 2.0)

    val, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def halfspace_limit_constant(n: int) -> float:
    """Limit of the scaled halfspace energy: unit-ball volume in n-1."""
    if n < 1:
        raise ConfigError("dimension must be >= 1")
    return unit_ball_volume(n - 1)
