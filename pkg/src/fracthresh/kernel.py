"""Spectral construction and validation of fractional heat kernels.

The kernel ``p(., t)`` is defined through its Fourier multiplier
``exp(-t * A * |xi|**alpha)``.  Under the standard convention ``A = 1``; under
the unnormalized convention ``A`` is the symbol of the operator written with
the bare kernel ``|y|**(-N-alpha)`` (see :func:`symbol_constant`).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy import integrate
from scipy.special import gamma

from .grid import Grid, RealField, get_fft_workers

__all__ = [
    "Convention",
    "ResolutionError",
    "SpectralKernel",
    "fractional_laplacian_constant",
    "symbol_constant",
    "symbol_scale",
    "effective_width",
    "build_kernel",
    "periodic_power_sum",
    "poisson_kernel",
    "poisson_deviation",
    "TailBoundReport",
    "validate_tail_bound",
    "SmallTimeReport",
    "validate_small_time_limit",
]

# values below -CLAMP_FLOOR * max(kernel) count as ringing
CLAMP_FLOOR = 1e-10
UNDERFLOW = 1e-300


class Convention(str, enum.Enum):
    """How the fractional Laplacian is normalized."""

    STANDARD_SYMBOL = "standard"
    UNNORMALIZED_PAPER = "unnormalized"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown normalization convention {value!r}")


class ResolutionError(ValueError):
    """Raised when a kernel is too narrow for the grid."""


def fractional_laplacian_constant(dim, alpha):
    """Constant ``c`` with ``(-Delta)^(alpha/2) f = c * PV int (f(x)-f(y))|x-y|^(-N-alpha) dy``.

    It is also the tail constant of the standard kernel at unit time,
    ``p(x, 1) ~ c |x|^(-N-alpha)``.
    """
    a = float(alpha)
    return a * 2.0 ** (a - 1.0) * gamma(0.5 * (dim + a)) / (math.pi ** (0.5 * dim) * gamma(1.0 - 0.5 * a))


def _radial_symbol_integral(alpha):
    # int_0^inf (1 - cos s) s^(-1-alpha) ds, split where the integrand changes character
    a = float(alpha)
    near, e1 = integrate.quad(lambda s: 2.0 * math.sin(0.5 * s) ** 2 * s ** (-1.0 - a),
                              0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    # int_1^inf cos(s) s^(-1-alpha) ds after one integration by parts
    tail, e2 = integrate.quad(lambda s: s ** (-2.0 - a), 1.0, np.inf,
                              weight="sin", wvar=1.0, epsabs=1e-12, limlst=100)
    osc = -math.sin(1.0) + (1.0 + a) * tail
    return near + 1.0 / a - osc, e1 + (1.0 + a) * e2


def _angular_moment(dim, alpha):
    # int over the unit sphere of |theta_1|^alpha
    a = float(alpha)
    if dim == 1:
        return 2.0, 0.0
    area = 2.0 * math.pi ** (0.5 * (dim - 1)) / gamma(0.5 * (dim - 1))
    val, err = integrate.quad(lambda p: abs(math.cos(p)) ** a * math.sin(p) ** (dim - 2),
                              0.0, math.pi, points=[0.5 * math.pi], epsabs=1e-14, epsrel=1e-13)
    return area * val, area * err


@lru_cache(maxsize=None)
def symbol_constant(dim, alpha, tol=1e-6):
    """``A(N, alpha) = int (1 - cos y_1) |y|^(-N-alpha) dy``.

    Evaluated in closed form as ``1 / c(N, alpha)`` and independently by
    quadrature in polar coordinates; the two must agree to ``tol``.

    Examples
    --------
    >>> round(symbol_constant(1, 1.0), 12) == round(math.pi, 12)
    True
    """
    a = float(alpha)
    if not 0.0 < a < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    closed = 1.0 / fractional_laplacian_constant(dim, a)
    radial, _ = _radial_symbol_integral(a)
    angular, _ = _angular_moment(dim, a)
    quad = radial * angular
    if abs(quad - closed) > tol * max(1.0, abs(closed)):
        raise ArithmeticError(
            f"symbol constant mismatch for N={dim}, alpha={a}: closed {closed!r} vs quadrature {quad!r}")
    return closed


def symbol_scale(convention, dim, alpha):
    """Factor ``A`` multiplying ``|xi|^alpha`` in the kernel's multiplier."""
    if Convention.parse(convention) is Convention.STANDARD_SYMBOL:
        return 1.0
    return symbol_constant(int(dim), float(alpha))


def effective_width(t, alpha, scale=1.0):
    """Spatial scale ``(A t)^(1/alpha)`` of the kernel at time ``t``."""
    return (scale * t) ** (1.0 / alpha)


@dataclass
class SpectralKernel:
    """Fractional heat kernel sampled on a periodic grid.

    Attributes
    ----------
    multiplier : ndarray
        ``exp(-t A |xi|^alpha)`` on the half spectrum.
    step_multiplier : ndarray
        Multiplier actually applied by the scheme; equal to ``multiplier``
        unless ringing had to be clamped.
    real_space : RealField
        Kernel values, origin at the grid's centre node, unit discrete mass.
    metadata : dict
        Mass, extrema, ringing and wrap-around diagnostics.
    """

    grid: Grid
    alpha: float
    t: float
    convention: Convention
    multiplier: np.ndarray = dc_field(repr=False)
    step_multiplier: np.ndarray = dc_field(repr=False)
    real_space: RealField = dc_field(repr=False)
    metadata: dict = dc_field(default_factory=dict)

    @property
    def scale(self):
        return symbol_scale(self.convention, self.grid.dim, self.alpha)

    @property
    def width(self):
        return effective_width(self.t, self.alpha, self.scale)


def _symmetrize(p):
    """Make ``p`` (origin at index 0) exactly invariant under the cube's symmetry group.

    Every node takes the value of its canonical representative (absolute
    offsets, sorted), so reflections and axis permutations hold bit for bit.
    """
    n = p.shape[0]
    j = np.arange(n, dtype=np.int32)
    off = np.minimum(j, n - j)  # |offset|, with the Nyquist node its own mirror
    if p.ndim == 1:
        return p[off]
    if p.ndim == 2:
        a, b = off[:, None], off[None, :]
        return p[np.minimum(a, b), np.maximum(a, b)]
    a, b, c = off[:, None, None], off[None, :, None], off[None, None, :]
    lo = np.minimum(np.minimum(a, b), c)
    hi = np.maximum(np.maximum(a, b), c)
    mid = a + b + c - lo - hi
    return p[lo, mid, hi]


def build_kernel(grid, alpha, t, convention=Convention.STANDARD_SYMBOL,
                 wrap_tolerance=0.05, check_resolution=True):
    """Build ``p_alpha(., t)`` on ``grid`` from its Fourier multiplier.

    Parameters
    ----------
    grid : Grid
    alpha : float
        Order in (0, 2).
    t : float
        Kernel time, positive.
    convention : Convention or str
    wrap_tolerance : float
        Mass outside the ball of radius ``extent/4`` above which the
        metadata flags a wrap-around warning.
    check_resolution : bool
        Refuse kernels narrower than two grid cells.

    Returns
    -------
    SpectralKernel
    """
    a = float(alpha)
    if not 0.0 < a < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"kernel time must be positive, got {t}")
    conv = Convention.parse(convention)
    scale = symbol_scale(conv, grid.dim, a)
    width = effective_width(t, a, scale)
    if check_resolution and width < 2.0 * grid.spacing:
        need = 2 ** math.ceil(math.log2(2.0 * grid.extent / width))
        raise ResolutionError(
            f"kernel width {width:.3g} is below two grid spacings ({2 * grid.spacing:.3g}); "
            f"use at least {need} points per axis or a larger kernel time")

    mult = np.exp(-(t * scale) * grid.wavenumber_magnitude() ** a)
    mult[mult < UNDERFLOW] = 0.0

    p0 = scipy.fft.irfftn(mult, s=grid.shape, workers=get_fft_workers()) / grid.cell_volume
    p0 = _symmetrize(p0)
    pmax = float(p0.max())
    pmin = float(p0.min())
    ringing = pmin < -CLAMP_FLOOR * pmax
    step_mult = mult
    if ringing:
        p0 = np.where(p0 < 0.0, 0.0, p0)
        p0 /= p0.sum() * grid.cell_volume
        step_mult = scipy.fft.rfftn(p0, workers=get_fft_workers()) * grid.cell_volume
        step_mult = step_mult.real.copy()
    centred = np.fft.fftshift(p0)

    r = grid.radius()
    outside = r > 0.25 * grid.extent
    wrap_mass = float(np.abs(centred[outside]).sum() * grid.cell_volume)
    mass = float(centred.sum() * grid.cell_volume)
    meta = {
        "mass": mass,
        "max": pmax,
        "min": pmin,
        "ringing": bool(ringing),
        "clamped": bool(ringing),
        "wrap_mass": wrap_mass,
        "wrap_warning": bool(wrap_mass > wrap_tolerance),
        "width": width,
        "width_over_spacing": width / grid.spacing,
        "symbol_scale": scale,
    }
    if meta["wrap_warning"]:
        warnings.warn(f"kernel has {wrap_mass:.3g} of its mass beyond extent/4; "
                      "periodic images are significant", RuntimeWarning, stacklevel=2)
    return SpectralKernel(grid, a, float(t), conv, mult, step_mult,
                          RealField(grid, centred), meta)


def periodic_power_sum(points, extent, exponent, images=8, skip_origin=False):
    """``sum_n |x + n L|^(-exponent)`` over the integer lattice.

    Direct summation over ``|n|_inf <= images`` plus a continuum estimate of
    the remaining shells.  ``points`` has shape ``(M, N)``.  With
    ``skip_origin`` the ``n = 0`` term is left out.
    """
    pts = np.asarray(points, dtype=float)
    dim = pts.shape[1]
    out = np.zeros(pts.shape[0])
    rng = range(-images, images + 1)
    for shift in np.array(np.meshgrid(*([list(rng)] * dim), indexing="ij")).reshape(dim, -1).T:
        if skip_origin and not shift.any():
            continue
        d = pts + extent * shift
        out += np.sqrt(np.sum(d * d, axis=1)) ** (-exponent)
    # remaining cells: continuum integral over the exterior of the summed cube
    a = (images + 0.5) * extent
    out += _cube_exterior_moment(dim, exponent - dim) * a ** (dim - exponent) / (
        (exponent - dim) * extent ** dim)
    return out


@lru_cache(maxsize=None)
def _cube_exterior_moment(dim, s):
    """``int_{S^(N-1)} max_i |theta_i|^s dtheta``, the angular factor of a cube's exterior."""
    if dim == 1:
        return 2.0
    if dim == 2:
        v, _ = integrate.quad(lambda t: math.cos(t) ** s, 0.0, 0.25 * math.pi, epsabs=1e-14)
        return 8.0 * v
    # six faces; on the face x_3 = max the polar angle runs to where x_3 = max(|x_1|, |x_2|)
    def inner(psi):
        lim = math.atan(1.0 / max(abs(math.cos(psi)), abs(math.sin(psi))))
        v, _ = integrate.quad(lambda p: math.cos(p) ** s * math.sin(p), 0.0, lim, epsabs=1e-14)
        return v
    v, _ = integrate.quad(inner, 0.0, 2.0 * math.pi, points=[k * 0.25 * math.pi for k in range(1, 8)],
                          epsabs=1e-13, limit=200)
    return 6.0 * v


def poisson_kernel(r, t=1.0, dim=2):
    """Closed form of the ``alpha = 1`` standard kernel at radius ``r``."""
    c = gamma(0.5 * (dim + 1)) / math.pi ** (0.5 * (dim + 1))
    r = np.asarray(r, dtype=float)
    return c * t * (t * t + r * r) ** (-0.5 * (dim + 1))


def poisson_deviation(kernel, r_max=None, images=8):
    """Largest relative deviation of an ``alpha = 1`` standard kernel from the Poisson kernel.

    The reference is periodized: the ``n != 0`` images use the far-field
    form ``c t |x + n L|^(-N-1)``, whose error relative to the exact image
    is ``O((t / L)^2)``.  Compared on ``|x| <= r_max`` (default
    ``extent / 8``) over the fundamental wedge.
    """
    if kernel.alpha != 1.0 or kernel.convention is not Convention.STANDARD_SYMBOL:
        raise ValueError("the Poisson comparison needs alpha = 1 under the standard convention")
    grid = kernel.grid
    r_max = grid.extent / 8.0 if r_max is None else r_max
    sel, pts, r = _wedge_nodes(grid, 0.0, r_max)
    t, n = kernel.t, grid.dim
    c = gamma(0.5 * (n + 1)) / math.pi ** (0.5 * (n + 1))
    images_sum = periodic_power_sum(pts, grid.extent, n + 1.0, images, skip_origin=True)
    ref = poisson_kernel(r, t, n) + c * t * images_sum
    return float(np.max(np.abs(kernel.real_space.values[sel] / ref - 1.0)))


def _wedge_nodes(grid, r_min, r_max):
    """Nodes of the annulus inside the fundamental wedge ``0 <= x_N <= .. <= x_1``.

    Kernels and periodized references are invariant under the cube's
    symmetry group, so extrema over the wedge equal extrema over the annulus.
    """
    r = grid.radius()
    sel = (r >= r_min) & (r <= r_max)
    mesh = grid.mesh(sparse=True)
    sel &= mesh[-1] >= 0
    for lo, hi in zip(mesh[1:], mesh[:-1]):
        sel &= lo <= hi
    idx = np.nonzero(sel)
    coords = grid.coordinates()
    pts = np.stack([coords[i] for i in idx], axis=1)
    return sel, pts, r[sel]


def _shells(r_min, r_max):
    edges = [r_min]
    while edges[-1] * 2.0 < r_max:
        edges.append(edges[-1] * 2.0)
    edges.append(r_max)
    return edges


@dataclass
class TailBoundReport:
    alpha: float
    t: float
    convention: str
    tail_constant: float
    gradient_constant: float
    shell_edges: list
    shell_maxima: list
    asymptotic_constant: float
    min_value: float
    passed: bool

    def to_dict(self):
        return {
            "check": "tail_bound",
            "alpha": self.alpha,
            "t": self.t,
            "convention": self.convention,
            "fitted_constants": {
                "tail": self.tail_constant,
                "gradient": self.gradient_constant,
                "asymptotic": self.asymptotic_constant,
            },
            "shell_edges": self.shell_edges,
            "shell_maxima": self.shell_maxima,
            "min_value": self.min_value,
            "pass": self.passed,
        }


def validate_tail_bound(kernel, r_min=0.5, r_max=10.0, growth_tolerance=0.1, images=8):
    """Check ``p(x) <= C / (1 + |x|^(N+alpha))`` and the matching gradient bound.

    The torus adds periodic images to the kernel's tail.  They are removed
    with the leading tail term before forming the ratio
    ``p(x) (1 + |x|^(N+alpha))``.  The bound holds when the ratio over the
    outer dyadic shell does not exceed its maximum over the inner shells by
    more than ``growth_tolerance`` and the kernel is nonnegative.

    The gradient ratio ``|Dp| (1+|x|^(N+alpha))^2 / |x|^(N-1+alpha)`` is
    reported over the same range; it is singular at the origin, which is why
    the range starts at ``r_min``.
    """
    grid = kernel.grid
    if r_max >= 0.5 * grid.extent:
        raise ValueError("r_max must lie inside the periodic box")
    a, dim = kernel.alpha, grid.dim
    expo = dim + a
    lead = kernel.t * kernel.scale * fractional_laplacian_constant(dim, a)

    p = kernel.real_space.values
    sel, pts, rs = _wedge_nodes(grid, r_min, r_max)
    images_part = lead * (periodic_power_sum(pts, grid.extent, expo, images) - rs ** (-expo))
    free = p[sel] - images_part
    ratio = free * (1.0 + rs ** expo)

    grads = np.gradient(p, grid.spacing)
    if grid.dim == 1:
        grads = [grads]
    gmag = np.sqrt(sum(g[sel] ** 2 for g in grads))
    gratio = gmag * (1.0 + rs ** expo) ** 2 / rs ** (dim - 1 + a)

    edges = _shells(r_min, r_max)
    maxima = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (rs >= lo) & (rs <= hi)
        maxima.append(float(ratio[m].max()) if np.any(m) else float("nan"))
    inner = max(maxima[:-1]) if len(maxima) > 1 else maxima[0]
    bounded = bool(np.all(np.isfinite(ratio)) and maxima[-1] <= (1.0 + growth_tolerance) * inner)
    nonneg = float(p.min()) >= -CLAMP_FLOOR * float(p.max())
    return TailBoundReport(
        alpha=a, t=kernel.t, convention=kernel.convention.value,
        tail_constant=float(ratio.max()), gradient_constant=float(gratio.max()),
        shell_edges=[float(e) for e in edges], shell_maxima=maxima,
        asymptotic_constant=lead, min_value=float(p.min()),
        passed=bounded and nonneg)


@dataclass
class SmallTimeReport:
    alpha: float
    times: list
    convention: str
    fitted_constants: list
    errors: list
    off_axis_errors: list
    expected_constant: float
    constant_tolerance: float
    monotone: bool
    constant_ok: bool

    @property
    def passed(self):
        return self.monotone and self.constant_ok

    def to_dict(self):
        return {
            "check": "small_time_limit",
            "alpha": self.alpha,
            "t": self.times,
            "convention": self.convention,
            "fitted_constants": self.fitted_constants,
            "errors": self.errors,
            "off_axis_errors": self.off_axis_errors,
            "expected_constant": self.expected_constant,
            "monotone": self.monotone,
            "constant_ok": self.constant_ok,
            "pass": self.passed,
        }


def validate_small_time_limit(grid, alpha, convention, times, r_min=0.5, r_max=2.0,
                              constant_tolerance=0.05, images=8):
    """Check ``p(x, t) / t -> C |x|^(-N-alpha)`` on an annulus as ``t -> 0``.

    For each time the constant ``C`` is fitted on the outermost ring of
    nodes.  The reference is the periodized power law, which is the torus
    counterpart of ``|x|^(-N-alpha)``.  ``E(t)`` is the sup over the annulus
    of ``|p/t - C * reference|``.  The check passes when ``E`` decreases
    strictly along ``times`` (given largest first) and the constant fitted at
    the smallest time is within ``constant_tolerance`` of its exact value
    (1 under the unnormalized convention).

    The sup away from the coordinate axes is reported alongside for
    diagnosis; it plays no part in the verdict.
    """
    a, dim = float(alpha), grid.dim
    conv = Convention.parse(convention)
    times = [float(t) for t in times]
    if any(t2 >= t1 for t1, t2 in zip(times, times[1:])):
        raise ValueError("times must be strictly decreasing")
    if r_max >= 0.5 * grid.extent:
        raise ValueError("annulus must lie inside the periodic box")
    expo = dim + a
    sel, pts, rs = _wedge_nodes(grid, r_min, r_max)
    ref = periodic_power_sum(pts, grid.extent, expo, images)
    ring = rs >= r_max - grid.spacing
    off_axis = np.all(np.abs(pts) > 8 * grid.spacing, axis=1)
    expected = symbol_scale(conv, dim, a) * fractional_laplacian_constant(dim, a)

    consts, errs, off_errs = [], [], []
    for t in times:
        k = build_kernel(grid, a, t, conv, wrap_tolerance=np.inf)
        q = k.real_space.values[sel] / t
        c = float(np.mean(q[ring] / ref[ring]))
        e = np.abs(q - c * ref)
        consts.append(c)
        errs.append(float(e.max()))
        off_errs.append(float(e[off_axis].max()) if np.any(off_axis) else float("nan"))
    monotone = all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))
    constant_ok = abs(consts[-1] - expected) <= constant_tolerance * expected
    return SmallTimeReport(a, times, conv.value, consts, errs, off_errs, expected,
                           constant_tolerance, monotone, constant_ok)
