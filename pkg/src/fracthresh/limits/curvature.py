"""Fractional curvature of sets at boundary points.

For a set ``E`` with ``x`` on its boundary,

    kappa_alpha(E, x) = int (1_{E^c} - 1_E)(x + y) |y|^(-N-alpha) dy,

which is positive for convex sets, zero for half-spaces and scales like
``R^(-alpha)`` under dilation by ``R``.  Sets are given by a level function
``phi`` (vectorized over ``(M, N)`` arrays) with ``E = {phi >= 0}``.

Two independent quadratures are provided.  The polar one integrates the
angular imbalance ``D(r)`` of ``E`` on circles (spheres) around ``x``; the
Cartesian one (2-D) integrates, line by line, the kernel over the set of
``y`` where ``x + y`` and ``x - y`` lie on the same side of the boundary.
Boundary crossings are located by bracketing and root polishing, so each
piecewise-constant integrand is integrated exactly between crossings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import brentq
from scipy.special import beta, betainc

from .profile import sphere_area

__all__ = ["CurvatureResult", "fractional_curvature", "ball_level", "half_space_level",
           "ball_curvature"]

MIN_DELTA = 1e-6


def ball_level(radius=1.0, center=None):
    """Level function of the closed ball."""
    def phi(y):
        y = np.atleast_2d(y)
        c = np.zeros(y.shape[1]) if center is None else np.asarray(center, float)
        return radius - np.sqrt(np.sum((y - c) ** 2, axis=1))
    return phi


def half_space_level(normal, offset=0.0):
    """Level function of ``{normal . y <= offset}``."""
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)

    def phi(y):
        return offset - np.atleast_2d(y) @ n
    return phi


def ball_curvature(alpha, dim=2, radius=1.0):
    """Closed form of ``kappa_alpha`` on the sphere of radius ``radius``.

    Pairing opposite rays reduces the integral to
    ``2^(-alpha) / alpha * int_{S^(N-1)} |theta_1|^(-alpha) dtheta``.
    """
    a = float(alpha)
    # int_{S^(N-1)} |t1|^-a = |S^(N-2)| int_0^pi |cos p|^-a sin^(N-2) p dp
    ang = sphere_area(dim - 1) * beta(0.5 * (1.0 - a), 0.5 * (dim - 1))
    return 2.0 ** -a / a * ang * radius ** -a


@dataclass(frozen=True)
class CurvatureResult:
    value: float
    error_estimate: float
    tail_bound: float
    method: str


def _outward_normal(phi, x, eps=1e-6):
    dim = len(x)
    g = np.empty(dim)
    for i in range(dim):
        e = np.zeros(dim)
        e[i] = eps
        g[i] = (phi((x + e)[None])[0] - phi((x - e)[None])[0]) / (2 * eps)
    norm = np.linalg.norm(g)
    if not norm > 0:
        raise ValueError("level function has no gradient at the boundary point")
    return -g / norm


def _sign_changes(values):
    inside = values >= 0
    return np.nonzero(inside[:-1] != inside[1:])[0]


def _refine(f, a, b, fa):
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if (fa > 0) == (fb > 0):
        # scalar and vectorized evaluation disagree in the last bit: the
        # crossing sits on an endpoint
        return a if abs(fa) < abs(fb) else b
    return brentq(f, a, b, xtol=1e-16, rtol=8.9e-16, maxiter=200)


def _circle_samples(base=256):
    # uniform samples plus clusters at the two tangent directions (+-pi/2
    # from the normal), where crossings crowd for small radii
    u = np.linspace(-math.pi, math.pi, base + 1)
    off = 2.0 ** -np.arange(1, 53)
    clusters = np.concatenate([0.5 * math.pi + off, 0.5 * math.pi - off,
                               -0.5 * math.pi + off, -0.5 * math.pi - off])
    return np.unique(np.concatenate([u, clusters]))


_THETA = _circle_samples()


def _arc_imbalance(phi, x, r, e1, e2, theta=None):
    """``int_0^{2 pi} s(x + r (cos t e1 + sin t e2)) dt`` with ``s = +1`` outside.

    ``t`` is measured from ``e1``; the set is sampled on ``theta`` to bracket
    boundary crossings, which are then polished.
    """
    t = _THETA if theta is None else theta
    pts = x + r * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)
    v = phi(pts)
    f = lambda s: phi((x + r * (math.cos(s) * e1 + math.sin(s) * e2))[None])[0]
    roots = [_refine(f, t[i], t[i + 1], v[i]) for i in _sign_changes(v)]
    edges = np.concatenate([[t[0]], roots, [t[-1]]])
    # classify each arc by its midpoint
    mids = 0.5 * (edges[:-1] + edges[1:])
    mv = phi(x + r * (np.cos(mids)[:, None] * e1 + np.sin(mids)[:, None] * e2))
    sign = np.where(mv >= 0, -1.0, 1.0)
    return float(np.sum(sign * np.diff(edges)))


def _sphere_imbalance(phi, x, r, normal, frame):
    """``int_{S^2} s(x + r theta) dtheta`` in polar angle from the outward normal."""
    e1, e2 = frame

    def ring(p):
        c, s = math.cos(p), math.sin(p)
        if s == 0.0:
            return 0.0
        centre = x + r * c * normal
        # circle of latitude: centre + r s (cos t e1 + sin t e2)
        return math.sin(p) * _arc_imbalance(phi, centre, r * s, e1, e2,
                                            np.linspace(-math.pi, math.pi, 257))

    band = min(0.25, 2.0 * r)
    pts = sorted({0.5 * math.pi - band, 0.5 * math.pi, 0.5 * math.pi + band})
    v, _ = integrate.quad(ring, 0.0, math.pi, points=pts, limit=200, epsabs=1e-11, epsrel=1e-9)
    return v


def _imbalance_function(phi, x, dim):
    n = _outward_normal(phi, x)
    if dim == 2:
        tang = np.array([-n[1], n[0]])
        # t measured from the outward normal; tangent directions at +-pi/2
        return lambda r: _arc_imbalance(phi, x, r, n, tang)
    # orthonormal frame completing the normal
    a = np.eye(3)[np.argmin(np.abs(n))]
    e1 = np.cross(n, a)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return lambda r: _sphere_imbalance(phi, x, r, n, (e1, e2))


def _near_field(g, delta, power, exponents):
    """``int_0^delta g(r) dr`` where ``g(r) r^power`` has an expansion in ``r^exponents``.

    Level functions lose relative precision at tiny radii, so the integral
    is split at ``r0 = 1e-3 delta``: quadrature in ``log r`` above it, and
    below it the exact integral of the expansion fitted at ``r0 * 2^k``.
    """
    r0 = 1e-3 * delta
    v, e = integrate.quad(lambda u: math.exp(u) * g(math.exp(u)), math.log(r0), math.log(delta),
                          limit=400, epsabs=1e-13, epsrel=1e-11)
    rs = r0 * 2.0 ** np.arange(len(exponents))
    lhs = np.array([[r ** q for q in exponents] for r in rs])
    c = np.linalg.solve(lhs, [g(r) * r ** power for r in rs])
    k = 1.0 - power
    pieces = [ci * r0 ** (k + q) / (k + q) for ci, q in zip(c, exponents)]
    return v + sum(pieces), e + abs(pieces[-1])


def _polar(phi, x, alpha, delta, r_max):
    dim = len(x)
    d = _imbalance_function(phi, x, dim)
    a = alpha
    # r^(-1-a) D(r) with D(r) ~ r near the boundary point
    inner, e1 = _near_field(lambda r: r ** (-1.0 - a) * d(r), delta, a, (0.0, 1.0))
    outer_f = lambda u: math.exp(-a * u) * d(math.exp(u))
    outer, e2 = integrate.quad(outer_f, math.log(delta), math.log(r_max), limit=1000,
                               epsabs=1e-13, epsrel=1e-11)
    far = d(r_max)
    tail = far * r_max ** -a / a
    bound = sphere_area(dim) * r_max ** -a / a
    return CurvatureResult(inner + outer + tail, e1 + e2, bound, "polar")


def _line_integral(c, a, b, p):
    """``int_a^b (u^2 + c^2)^(-p) du`` via the incomplete beta function."""
    def prim(u):
        x = u * u / (u * u + c * c)
        return math.copysign(0.5 * c ** (1.0 - 2.0 * p) * beta(0.5, p - 0.5)
                             * betainc(0.5, p - 0.5, x), u)
    return prim(b) - prim(a)


def _line_pieces(phi, x, n, tang, y2, r_max):
    """Signed pieces ``(t0, t1, s)`` of ``s(x + t n + y2 tang)`` for ``|t| <= r_max``."""
    base = np.linspace(-r_max, r_max, 1025)
    scale = np.concatenate([y2 * y2 * 2.0 ** np.arange(-30, 31), 2.0 ** -np.arange(1, 53)])
    scale = scale[(scale > 0) & (scale < r_max)]
    t = np.unique(np.concatenate([base, scale, -scale, [0.0]]))
    pts = x + t[:, None] * n + y2 * tang
    v = phi(pts)
    f = lambda s: phi((x + s * n + y2 * tang)[None])[0]
    roots = [_refine(f, t[i], t[i + 1], v[i]) for i in _sign_changes(v)]
    edges = np.concatenate([[t[0]], roots, [t[-1]]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    mv = phi(x + mids[:, None] * n + y2 * tang)
    sign = np.where(mv >= 0, -1.0, 1.0)
    return edges, sign


def _cartesian(phi, x, alpha, delta, r_max):
    if len(x) != 2:
        raise ValueError("the Cartesian quadrature is implemented for N = 2")
    n = _outward_normal(phi, x)
    tang = np.array([-n[1], n[0]])
    p = 0.5 * (2.0 + alpha)

    def h(y2):
        # 1/2 int [s(t, y2) + s(-t, -y2)] |y|^(-2-a) dt; the second term is the
        # line at -y2 traversed backwards
        total = 0.0
        for sgn in (1.0, -1.0):
            edges, sign = _line_pieces(phi, x, n, tang, sgn * y2, r_max)
            for t0, t1, s in zip(edges[:-1], edges[1:], sign):
                total += s * _line_integral(abs(y2), t0, t1, p)
        return 0.5 * total

    a = alpha
    # h(y2) ~ |y2|^(-a) (c0 + c1 |y2|^a + c2 |y2|) near 0: the lens between
    # the tangent line and the boundary, then the far part of each line
    inner, e1 = _near_field(h, delta, a, (0.0, a, 1.0))
    outer_f = lambda u: math.exp(u) * h(math.exp(u))
    outer, e2 = integrate.quad(outer_f, math.log(delta), math.log(r_max), limit=1000,
                               epsabs=1e-13, epsrel=1e-11)
    # both half-lines in y2 contribute equally
    body = 2.0 * (inner + outer)
    # outside the square [-r_max, r_max]^2, with the far-field imbalance of the set
    ang, _ = integrate.quad(lambda t: math.cos(t) ** a, 0.0, 0.25 * math.pi, epsabs=1e-15)
    far = _arc_imbalance(phi, x, r_max, n, tang) / (2.0 * math.pi)
    tail = far * 8.0 / a * r_max ** -a * ang
    bound = 8.0 / a * r_max ** -a * ang
    return CurvatureResult(body + tail, 2.0 * (e1 + e2), bound, "cartesian")


def fractional_curvature(phi, x, alpha, delta=0.05, r_max=1e3, method="polar"):
    """Fractional curvature ``kappa_alpha`` of ``{phi >= 0}`` at boundary point ``x``.

    Parameters
    ----------
    phi : callable
        Level function, vectorized over ``(M, N)`` arrays.
    x : array_like
        Boundary point (``phi(x) = 0``).
    alpha : float
        Order in (0, 1).
    delta : float
        Radius splitting the near field (integrated in ``log r`` with a
        fitted expansion below ``1e-3 delta``) from the far field.
    r_max : float
        Far-field cutoff.  Beyond it the set's angular imbalance is frozen at
        its value on the sphere of radius ``r_max``; the worst-case size of
        that tail is returned as ``tail_bound``.
    method : {"polar", "cartesian"}

    Returns
    -------
    CurvatureResult
    """
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise ValueError(f"fractional curvature needs alpha in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) not in (2, 3):
        raise ValueError("x must be a point in 2 or 3 dimensions")
    if not delta >= MIN_DELTA:
        raise ValueError(f"delta must be at least {MIN_DELTA} (angular resolution floor)")
    if not r_max > delta:
        raise ValueError("r_max must exceed delta")
    if abs(phi(x[None])[0]) > 1e-10:
        raise ValueError("x is not on the boundary of the set")
    if method == "polar":
        return _polar(phi, x, a, delta, r_max)
    if method == "cartesian":
        return _cartesian(phi, x, a, delta, r_max)
    raise ValueError(f"unknown method {method!r}")
