"""Exact radius laws for shrinking balls under the limiting motions.

A ball of radius ``R`` moves with normal velocity ``C_alpha (N-1) / R`` under
weighted mean curvature flow and ``C_alpha kappa_alpha(B_R)
= c_ball R^(-alpha)`` under the nonlocal flow, which integrate to

* MCF:        ``R(t)^2 = R0^2 - 2 C_alpha (N-1) t``;
* fractional: ``R(t)^(1+alpha) = R0^(1+alpha) - (1+alpha) c_ball t``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..kernel import Convention
from .constants import limit_constant
from .curvature import ball_curvature, ball_level, fractional_curvature

__all__ = ["LawKind", "RadiusLaw", "radius_law", "unit_ball_curvature"]


class LawKind(str, enum.Enum):
    MCF = "mcf"
    FRACTIONAL = "fractional"


@dataclass(frozen=True)
class RadiusLaw:
    """Radius of a shrinking ball as a function of time.

    ``constant`` is ``C_alpha`` for MCF and ``c_ball = C_alpha kappa_alpha(B_1)``
    for the fractional law.
    """

    kind: LawKind
    alpha: float
    dim: int
    R0: float
    constant: float

    @property
    def exponent(self):
        return 2.0 if self.kind is LawKind.MCF else 1.0 + self.alpha

    @property
    def rate(self):
        """Decay rate of ``R^exponent``."""
        if self.kind is LawKind.MCF:
            return 2.0 * self.constant * (self.dim - 1)
        return (1.0 + self.alpha) * self.constant

    @property
    def extinction_time(self):
        return self.R0 ** self.exponent / self.rate

    def radius(self, t):
        """``R(t)``; zero at and after extinction."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("radius law is defined for t >= 0")
        base = np.maximum(self.R0 ** self.exponent - self.rate * t, 0.0)
        out = base ** (1.0 / self.exponent)
        return float(out) if out.ndim == 0 else out

    __call__ = radius

    def velocity(self, radius):
        """Normal speed ``-dR/dt`` at the given radius."""
        r = np.asarray(radius, dtype=float)
        if self.kind is LawKind.MCF:
            return self.constant * (self.dim - 1) / r
        return self.constant * r ** -self.alpha

    def to_dict(self):
        return {"kind": self.kind.value, "alpha": self.alpha, "dim": self.dim, "R0": self.R0,
                "constant": self.constant, "extinction_time": self.extinction_time}


def unit_ball_curvature(alpha, dim=2, method="polar"):
    """``kappa_alpha(B_1)`` by quadrature (2-D) or in closed form (``method="closed"``)."""
    if method == "closed":
        return ball_curvature(alpha, dim)
    x = np.zeros(dim)
    x[0] = 1.0
    return float(fractional_curvature(ball_level(1.0), x, alpha, method=method).value)


def radius_law(kind, alpha, dim=2, R0=1.0, convention=Convention.STANDARD_SYMBOL,
               constant=None, curvature=None):
    """Radius law for a ball of initial radius ``R0``.

    Parameters
    ----------
    kind : {"mcf", "fractional"} or LawKind
        MCF needs ``alpha`` in [1, 2), the fractional law ``alpha`` in (0, 1).
    constant : float, optional
        ``C_alpha``; computed with :func:`limit_constant` when omitted.
    curvature : float, optional
        ``kappa_alpha(B_1)`` for the fractional law; by quadrature when
        omitted (closed form in 3-D, where the quadrature is slow).
    """
    kind = LawKind(kind)
    a = float(alpha)
    if not R0 > 0:
        raise ValueError(f"R0 must be positive, got {R0}")
    if kind is LawKind.MCF and not 1.0 <= a < 2.0:
        raise ValueError(f"the MCF law needs alpha in [1, 2), got {a}")
    if kind is LawKind.FRACTIONAL and not 0.0 < a < 1.0:
        raise ValueError(f"the fractional law needs alpha in (0, 1), got {a}")
    if constant is None:
        constant = limit_constant(a, dim, convention).value
    if kind is LawKind.FRACTIONAL:
        if curvature is None:
            curvature = unit_ball_curvature(a, dim, "polar" if dim == 2 else "closed")
        constant = constant * curvature
    return RadiusLaw(kind, a, int(dim), float(R0), float(constant))
