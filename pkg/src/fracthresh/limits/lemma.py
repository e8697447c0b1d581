"""Numerical check of the differentiation identity behind the consistency proof.

For ``f(sigma) = int 1+(y_1 + F(y, sigma)) P(y) dy`` the identity expresses
``f(sigma) - f(0)`` through integrals of ``1+`` against derivatives of ``F``
and ``P`` only, with no delta functions.  With the step replaced by a smooth
``H`` it is an exact integration by parts:

    f_H(sigma) - f_H(0) = - int_0^sigma int H(y_1 + F(y, rho)) d_{y_1}(d_rho F P) dy drho
                          - int H(y_1 + F(y, sigma)) d_{y_1} F(y, sigma) P dy
                          + int H(y_1 + F(y, 0)) d_{y_1} F(y, 0) P dy
                          + int_0^sigma int H(y_1 + F(y, rho)) d_rho(d_{y_1} F P) dy drho.

The third term vanishes for the quadratic family used here.  The check
evaluates the right-hand side with ``H`` an error-function step of width
``epsilon`` and compares it with the sharp left-hand side; the gap must
shrink at least linearly as ``epsilon`` halves (it is ``O(epsilon^2)`` for
a symmetric mollifier) until it reaches the quadrature floor.

``P`` is the 2-D fractional heat kernel times a Gaussian taper.  The
identity holds for any smooth integrable ``P``; the taper makes the terms
with ``|y| |d P|`` and ``|y|^2 |d P|`` integrable, which they are not under
the kernel's algebraic tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erfc

from .profile import RadialProfile, _gauss

__all__ = ["QuadraticFamily", "TaperedKernel", "IdentityReport", "verify_level_set_identity"]


@dataclass(frozen=True)
class QuadraticFamily:
    """``F(y, rho) = rho^(1/alpha) (A y, y) - shift * rho`` in two dimensions."""

    alpha: float
    matrix: tuple = ((0.0, 0.0), (0.0, 0.0))
    shift: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, float)
        if m.shape != (2, 2) or m[0, 1] != m[1, 0]:
            raise ValueError("matrix must be a symmetric 2x2 array")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def _a(self):
        (a11, a12), (_, a22) = self.matrix
        return a11, a12, a22

    def _s(self, rho):
        return rho ** (1.0 / self.alpha)

    def _ds(self, rho):
        return rho ** (1.0 / self.alpha - 1.0) / self.alpha

    def quadric(self, y1, y2):
        a11, a12, a22 = self._a
        return a11 * y1 * y1 + 2.0 * a12 * y1 * y2 + a22 * y2 * y2

    def row(self, y1, y2):
        # first component of A y
        a11, a12, _ = self._a
        return a11 * y1 + a12 * y2

    def value(self, y1, y2, rho):
        return self._s(rho) * self.quadric(y1, y2) - self.shift * rho

    def d_rho(self, y1, y2, rho):
        return self._ds(rho) * self.quadric(y1, y2) - self.shift

    def d_y1(self, y1, y2, rho):
        return 2.0 * self._s(rho) * self.row(y1, y2)

    def d_y1_rho(self, y1, y2, rho):
        return 2.0 * self._ds(rho) * self.row(y1, y2)

    def level_roots(self, y2, rho, level):
        """Roots in ``y_1`` of ``y_1 + F(y, rho) = level``; NaN where absent."""
        a11, a12, a22 = self._a
        s = self._s(rho)
        qa = s * a11
        qb = 1.0 + 2.0 * s * a12 * y2
        qc = s * a22 * y2 * y2 - self.shift * rho - level
        out = np.full((len(y2), 2), np.nan)
        if qa == 0.0:
            out[:, 0] = -qc / qb
            return out
        disc = qb * qb - 4.0 * qa * qc
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        # stable quadratic roots
        q = -0.5 * (qb + np.copysign(sq, qb))
        with np.errstate(divide="ignore", invalid="ignore"):
            out[:, 0] = np.where(ok, q / qa, np.nan)
            out[:, 1] = np.where(ok & (q != 0), qc / q, np.nan)
        return out


class TaperedKernel:
    """``P(y) = P_alpha(|y|) exp(-|y|^2 / taper^2)`` in two dimensions.

    Stored as a cubic spline in ``s = |y|^2``, in which the profile is smooth
    at the origin; derivatives are those of the spline, so the identity is
    exercised on one consistent smooth function.
    """

    def __init__(self, alpha, scale=1.0, taper=2.0, knots=1500):
        self.alpha = float(alpha)
        self.taper = float(taper)
        self.support = 6.0 * self.taper
        u = np.linspace(0.0, math.sqrt(2.0) * self.support, knots)
        prof = RadialProfile(2, alpha, scale)
        vals = prof.values(u) * np.exp(-(u / self.taper) ** 2)
        self._spline = CubicSpline(u * u, vals)
        self._deriv = self._spline.derivative()

    def value(self, y1, y2):
        return self._spline(y1 * y1 + y2 * y2)

    def d_y1(self, y1, y2):
        return 2.0 * y1 * self._deriv(y1 * y1 + y2 * y2)


@lru_cache(maxsize=8)
def _tapered(alpha, scale, taper):
    return TaperedKernel(alpha, scale, taper)


@dataclass(frozen=True)
class Resolution:
    """Tensor Gauss-Legendre rule: ``y_2`` panels, ``y_1`` panels split at level curves, ``rho`` nodes."""

    y2_width: float = 0.5
    y2_nodes: int = 12
    y1_fixed: int = 49
    y1_nodes: int = 12
    rho_nodes: int = 12


def _step(z, eps):
    if eps == 0.0:
        return (z >= 0).astype(float)
    return 0.5 * erfc(-z / eps)


def _levels(eps):
    if eps == 0.0:
        return (0.0,)
    return tuple(eps * c for c in (-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0))


class _Plane:
    """Integrals over ``[-L, L]^2`` of integrands with a transition along a level curve."""

    def __init__(self, family, kernel, res):
        self.family = family
        self.kernel = kernel
        self.res = res
        L = kernel.support
        self.L = L
        n2 = int(round(2 * L / res.y2_width))
        x, w = _gauss(res.y2_nodes)
        edges = np.linspace(-L, L, n2 + 1)
        lo, hi = edges[:-1, None], edges[1:, None]
        self.y2 = (lo + (hi - lo) * x).ravel()
        self.w2 = ((hi - lo) * w).ravel()
        self.fixed = np.linspace(-L, L, res.y1_fixed)

    def nodes(self, rho, eps):
        """``y_1`` nodes and weights (``(n_y2, m)``) adapted to the level curves at ``rho``."""
        f = self.family
        roots = [f.level_roots(self.y2, rho, c) for c in _levels(eps)]
        br = np.concatenate([np.broadcast_to(self.fixed, (len(self.y2), len(self.fixed)))] + roots,
                            axis=1)
        br = np.clip(np.where(np.isnan(br), -self.L, br), -self.L, self.L)
        br.sort(axis=1)
        x, w = _gauss(self.res.y1_nodes)
        lo, hi = br[:, :-1, None], br[:, 1:, None]
        y1 = (lo + (hi - lo) * x).reshape(len(self.y2), -1)
        w1 = ((hi - lo) * w).reshape(len(self.y2), -1)
        return y1, w1 * self.w2[:, None]

    def integral(self, fn, rho_level, eps):
        y1, w = self.nodes(rho_level, eps)
        return float(np.sum(w * fn(y1, self.y2[:, None])))

    def rho_rule(self, sigma):
        # rho = sigma u^3 makes the rho^(1/alpha - 1) factors smooth in u
        x, w = _gauss(self.res.rho_nodes)
        return sigma * x ** 3, sigma * 3.0 * x ** 2 * w


@dataclass
class IdentityReport:
    alpha: float
    matrix: tuple
    shift: float
    sigma: float
    epsilons: list
    lhs: float
    rhs: list
    smooth_lhs: list
    gaps: list
    ratios: list
    floor: float
    terms: list = dc_field(default_factory=list)
    passed: bool = False

    def to_dict(self):
        return {"check": "level_set_identity", "alpha": self.alpha,
                "matrix": [list(r) for r in self.matrix], "shift": self.shift,
                "sigma": self.sigma, "epsilons": list(self.epsilons), "lhs": self.lhs,
                "rhs": list(self.rhs), "gaps": list(self.gaps), "ratios": list(self.ratios),
                "floor": self.floor, "pass": bool(self.passed)}


def _sharp_f(plane, rho):
    fam, ker = plane.family, plane.kernel
    return plane.integral(lambda y1, y2: _step(y1 + fam.value(y1, y2, rho), 0.0) * ker.value(y1, y2),
                          rho, 0.0)


def _smooth_f(plane, rho, eps):
    fam, ker = plane.family, plane.kernel
    return plane.integral(lambda y1, y2: _step(y1 + fam.value(y1, y2, rho), eps) * ker.value(y1, y2),
                          rho, eps)


def identity_terms(plane, sigma, eps, first_term="proof"):
    """The four right-hand-side terms for step width ``eps``.

    ``first_term="statement"`` evaluates the first term with ``F(y, sigma)``
    inside the step, as the identity is sometimes written; that form is not
    an identity and is kept only to show the difference.
    """
    fam, ker = plane.family, plane.kernel
    rhos, wr = plane.rho_rule(sigma)
    t1 = t3 = 0.0
    for rho, w in zip(rhos, wr):
        at = sigma if first_term == "statement" else rho

        def g1(y1, y2, rho=rho, at=at):
            inner = (fam.d_y1_rho(y1, y2, rho) * ker.value(y1, y2)
                     + fam.d_rho(y1, y2, rho) * ker.d_y1(y1, y2))
            return _step(y1 + fam.value(y1, y2, at), eps) * inner

        def g3(y1, y2, rho=rho):
            return _step(y1 + fam.value(y1, y2, rho), eps) * fam.d_y1_rho(y1, y2, rho) * ker.value(y1, y2)

        t1 -= w * plane.integral(g1, at, eps)
        t3 += w * plane.integral(g3, rho, eps)

    def boundary(rho):
        return plane.integral(lambda y1, y2: _step(y1 + fam.value(y1, y2, rho), eps)
                              * fam.d_y1(y1, y2, rho) * ker.value(y1, y2), rho, eps)

    t2 = -boundary(sigma)
    t0 = boundary(0.0)
    return t1, t2, t0, t3


def verify_level_set_identity(family, sigma, epsilons=(0.2, 0.1, 0.05, 0.025), scale=1.0,
                              taper=2.0, resolution=None, floor_factor=10.0, first_term="proof"):
    """Check the identity for one family at one ``sigma`` over an ``epsilon`` ladder.

    Parameters
    ----------
    family : QuadraticFamily
    sigma : float
        Upper end of the ``rho`` integration, positive.
    epsilons : sequence of float
        Decreasing step widths.
    scale : float
        Symbol factor ``A`` of the kernel.
    floor_factor : float
        Gaps within this multiple of the quadrature floor need not shrink.
        The floor is the largest discrepancy between the smoothed
        left-hand side and the right-hand side, which agree exactly for
        every smooth step.

    Returns
    -------
    IdentityReport
        Passes iff every halving of ``epsilon`` at least halves the gap
        between the sharp left-hand side and the smoothed right-hand side,
        or the gap is already at the floor.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    eps = [float(e) for e in epsilons]
    if any(b >= a for a, b in zip(eps, eps[1:])) or eps[-1] <= 0:
        raise ValueError("epsilons must be positive and decreasing")
    ker = _tapered(float(family.alpha), float(scale), float(taper))
    plane = _Plane(family, ker, resolution or Resolution())
    lhs = _sharp_f(plane, sigma) - _sharp_f(plane, 0.0)
    rhs, smooth, terms = [], [], []
    exact = []
    for e in eps:
        t = identity_terms(plane, sigma, e)
        exact.append(sum(t))
        if first_term != "proof":
            t = identity_terms(plane, sigma, e, first_term)
        terms.append(t)
        rhs.append(sum(t))
        smooth.append(_smooth_f(plane, sigma, e) - _smooth_f(plane, 0.0, e))
    gaps = [abs(lhs - r) for r in rhs]
    # the proof form is exact for smooth steps, so its residual is quadrature error
    floor = max(abs(s - r) for s, r in zip(smooth, exact))
    limit = floor_factor * floor + 1e-14
    ratios, ok = [], True
    for g0, g1 in zip(gaps, gaps[1:]):
        ratios.append(g1 / g0 if g0 > 0 else 0.0)
        if not (g1 <= 0.5 * g0 or g0 <= limit):
            ok = False
    return IdentityReport(float(family.alpha), tuple(map(tuple, family.matrix)), float(family.shift),
                          float(sigma), eps, lhs, rhs, smooth, gaps, ratios, floor, terms, ok)
