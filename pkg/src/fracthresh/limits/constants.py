"""Velocity constants of the limiting motions.

The constant ``C_alpha`` links the scheme to its limit: normal velocity
``C_alpha * (sum of principal curvatures)`` for ``alpha >= 1`` and
``C_alpha * kappa_alpha`` for ``alpha < 1``.  Each is a ratio of integrals of
the kernel's hyperplane slice ``P(0, y')``, ``y'`` in ``R^(N-1)``:

* ``alpha in (1, 2)``: second moment of one coordinate over twice the mass;
* ``alpha = 1``:       ``|S^(N-2)| lim R^(N+1) P(R) / ((N-1) * 2 * mass)``;
* ``alpha in (0, 1)``: tail constant of ``P`` over twice the mass.

All integrals come from the radial reconstruction in :mod:`.profile`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

from scipy import integrate

from ..kernel import Convention, symbol_scale
from .profile import RadialProfile, sphere_area

__all__ = ["LimitConstant", "ExtrapolationError", "limit_constant", "richardson_tail_limit",
           "slice_mass", "slice_second_moment"]

CUT_RADIUS = 32.0


class ExtrapolationError(ArithmeticError):
    """The tail extrapolation did not settle to the requested tolerance."""


@dataclass(frozen=True)
class LimitConstant:
    alpha: float
    dim: int
    convention: str
    regime: str
    value: float
    error_estimate: float
    factors: dict = dc_field(default_factory=dict)

    def to_row(self):
        return {"alpha": self.alpha, "dim": self.dim, "convention": self.convention,
                "regime": self.regime, "C_alpha": self.value,
                "error_estimate": self.error_estimate}


def _radial_integral(profile, power, cut=CUT_RADIUS):
    """``int_0^inf P(r) r^power dr``: adaptive quadrature up to ``cut`` plus series tail."""
    f = lambda r: profile.value(r) * r ** power
    unit = profile.length
    edges = [unit * e for e in (0.0, 0.5, 2.0, 8.0, cut)]
    total, err = 0.0, 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-11, limit=200)
        total += v
        err += e
    tail, tail_err = profile.tail_integral(edges[-1], power)
    return total + tail, err + tail_err


def slice_mass(profile):
    """``int_{R^(N-1)} P(0, y') dy'`` and its error estimate."""
    n = profile.dim
    v, e = _radial_integral(profile, n - 2)
    s = sphere_area(n - 1)
    return s * v, s * e


def slice_second_moment(profile):
    """``int_{R^(N-1)} y_2^2 P(0, y') dy'`` (one coordinate) and its error estimate."""
    n = profile.dim
    v, e = _radial_integral(profile, n)
    s = sphere_area(n - 1) / (n - 1)
    return s * v, s * e


def richardson_tail_limit(profile, radii=None, tol=1e-6):
    """``lim_{R -> inf} R^(N+alpha) P(R)`` by Richardson extrapolation.

    The correction terms decay like ``R^(-p)`` with the exponents of the
    kernel's large-``r`` expansion; each level of the table removes one.
    The error estimate is the change made by the last level.  Radii are in
    units of the kernel's natural length ``A^(1/alpha)``; the default ladder
    starts at ``2^ceil(2/alpha)`` of them for ``alpha < 1``.
    """
    if radii is None:
        if profile.alpha >= 1.0:
            radii = (8.0, 16.0, 32.0, 64.0)
        else:
            # corrections step by alpha, so small alpha needs a farther ladder
            start = 2.0 ** math.ceil(2.0 / profile.alpha)
            radii = tuple(start * 2.0 ** k for k in range(5))
    radii = [float(r) * profile.length for r in radii]
    ratios = {round(b / a, 12) for a, b in zip(radii, radii[1:])}
    if len(ratios) != 1:
        raise ValueError("Richardson ladder must be geometric")
    q = ratios.pop()
    expo = profile.dim + profile.alpha
    table = [[r ** expo * profile.value(r)] for r in radii]
    powers = profile.tail_exponents(len(radii) - 1)
    for k, p in enumerate(powers, start=1):
        f = q ** p
        for i in range(k, len(radii)):
            table[i].append((f * table[i][k - 1] - table[i - 1][k - 1]) / (f - 1.0))
    best = table[-1][-1]
    err = abs(best - table[-1][-2]) if len(table[-1]) > 1 else abs(best)
    if err > tol * abs(best):
        raise ExtrapolationError(
            f"tail limit not converged: estimate {best!r}, change {err!r} over ladder {radii}")
    return best, err


def _regime(alpha):
    if alpha == 1.0:
        return "critical"
    return "mcf" if alpha > 1.0 else "fractional"


@lru_cache(maxsize=None)
def _limit_constant(alpha, dim, convention, nodes):
    conv = Convention.parse(convention)
    scale = symbol_scale(conv, dim, alpha)
    prof = RadialProfile(dim, alpha, scale, nodes=nodes)
    mass, mass_err = slice_mass(prof)
    reg = _regime(alpha)
    if reg == "mcf":
        m2, m2_err = slice_second_moment(prof)
        value = m2 / (2.0 * mass)
        err = value * (m2_err / m2 + mass_err / mass)
        factors = {"slice_mass": mass, "second_moment": m2}
    elif reg == "critical":
        tail, tail_err = richardson_tail_limit(prof)
        area = sphere_area(dim - 1)
        value = area * tail / ((dim - 1) * 2.0 * mass)
        err = value * (tail_err / tail + mass_err / mass)
        factors = {"twice_slice_mass": 2.0 * mass, "sphere_area": area, "tail_limit": tail}
    else:
        if conv is Convention.UNNORMALIZED_PAPER:
            tail, tail_err = 1.0, 0.0
        else:
            tail, tail_err = richardson_tail_limit(prof, tol=1e-5)
        value = tail / (2.0 * mass)
        err = value * (tail_err / tail + mass_err / mass)
        factors = {"slice_mass": mass, "tail_constant": tail}
    return LimitConstant(alpha, dim, conv.value, reg, value, err, factors)


def limit_constant(alpha, dim=2, convention=Convention.STANDARD_SYMBOL, regime=None, nodes=20):
    """Velocity constant ``C_alpha`` of the limiting motion.

    Parameters
    ----------
    alpha : float
        Order in (0, 2).
    dim : int
        Space dimension, at least 2.
    convention : Convention or str
    regime : {"mcf", "critical", "fractional"}, optional
        Formula to use.  Asking for a formula outside its range of ``alpha``
        is refused.
    nodes : int
        Gauss-Legendre nodes per panel of the kernel reconstruction.

    Returns
    -------
    LimitConstant
    """
    a = float(alpha)
    if not 0.0 < a < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if int(dim) < 2:
        raise ValueError("limit constants need dim >= 2")
    actual = _regime(a)
    if regime is not None and regime != actual:
        raise ValueError(f"the {regime!r} formula does not apply to alpha = {a} ({actual} regime)")
    conv = Convention.parse(convention)
    return _limit_constant(a, int(dim), conv.value, int(nodes))
