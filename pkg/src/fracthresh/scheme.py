"""Threshold scheme: convolve a sign field with the kernel, then take the sign.

One step maps ``u`` to ``sign(p(., sigma) * u)`` with ``sign(0) = -1``.  The
kernel time ``sigma`` is tied to the step ``h`` so that the scheme moves
fronts at unit speed in the limit:

* ``alpha in (1, 2)``:  ``sigma = h^(alpha/2)``
* ``alpha = 1``:        ``sigma^2 |ln sigma| = h``
* ``alpha in (0, 1)``:  ``sigma = h^(alpha/(1+alpha))``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.fft
from scipy.optimize import brentq

from .grid import RealField, SignField, get_fft_workers
from .kernel import Convention, build_kernel

__all__ = [
    "SchemeParams",
    "Trajectory",
    "sigma_of_h",
    "h_of_sigma",
    "regime",
    "disk",
    "half_space",
    "initialize",
    "smooth",
    "threshold",
    "step",
    "run",
]

CRITICAL_H_MAX = 0.1


def regime(alpha):
    """Name of the limiting motion for order ``alpha``."""
    if alpha == 1.0:
        return "critical"
    return "mcf" if alpha > 1.0 else "fractional"


def _critical_sigma(h):
    f = lambda s: s * s * -math.log(s) - h
    s = brentq(f, 1e-300, math.exp(-1.0), xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    for _ in range(3):
        # Newton polish; the derivative sigma (-2 ln sigma - 1) is positive here
        d = s * (-2.0 * math.log(s) - 1.0)
        s -= f(s) / d
    return s


def sigma_of_h(h, alpha):
    """Kernel time ``sigma`` for time step ``h``.

    For ``alpha = 1`` the implicit relation ``sigma^2 |ln sigma| = h`` is
    solved on ``(0, 1/e)`` to relative accuracy 1e-12; this needs
    ``h < 0.1``.
    """
    h = float(h)
    a = float(alpha)
    if not h > 0:
        raise ValueError(f"time step must be positive, got {h}")
    if not 0.0 < a < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if a > 1.0:
        return h ** (0.5 * a)
    if a < 1.0:
        return h ** (a / (1.0 + a))
    if h >= CRITICAL_H_MAX:
        raise ValueError(f"alpha = 1 needs h < {CRITICAL_H_MAX}, got {h}")
    s = _critical_sigma(h)
    if abs(s * s * -math.log(s) - h) > 1e-12 * h:
        raise ArithmeticError(f"sigma solve did not converge for h={h}")
    return s


def h_of_sigma(sigma, alpha):
    """Inverse of :func:`sigma_of_h`."""
    s = float(sigma)
    a = float(alpha)
    if a > 1.0:
        return s ** (2.0 / a)
    if a < 1.0:
        return s ** ((1.0 + a) / a)
    return s * s * -math.log(s)


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of a threshold run.

    Parameters
    ----------
    alpha : float
        Order of the fractional kernel, in (0, 2).
    h : float
        Time step.
    steps : int
        Number of steps.
    convention : Convention
        Normalization of the kernel's multiplier.
    """

    alpha: float
    h: float
    steps: int
    convention: Convention = Convention.STANDARD_SYMBOL

    def __post_init__(self):
        object.__setattr__(self, "convention", Convention.parse(self.convention))
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError(f"steps must be a nonnegative integer, got {self.steps}")
        sigma_of_h(self.h, self.alpha)  # validates alpha and h

    @property
    def sigma(self):
        return sigma_of_h(self.h, self.alpha)

    @property
    def regime(self):
        return regime(self.alpha)

    def to_dict(self):
        return {"alpha": self.alpha, "h": self.h, "steps": int(self.steps),
                "convention": self.convention.value, "sigma": self.sigma}


def disk(radius, center=None):
    """Indicator of the closed ball ``|x - center| <= radius``."""
    def inside(*coords):
        c = center if center is not None else [0.0] * len(coords)
        r2 = sum((x - x0) ** 2 for x, x0 in zip(coords, c))
        return r2 <= radius * radius
    return inside


def half_space(normal=None, offset=0.0):
    """Indicator of the open half-space ``normal . x < offset``."""
    def inside(*coords):
        nrm = normal if normal is not None else [1.0] + [0.0] * (len(coords) - 1)
        return sum(n * x for n, x in zip(nrm, coords)) < offset
    return inside


def initialize(grid, shape):
    """Sign field that is +1 on ``shape`` and -1 elsewhere.

    ``shape`` is a callable taking one coordinate array per axis and
    returning a boolean mask.
    """
    mask = np.broadcast_to(shape(*grid.mesh(sparse=True)), grid.shape)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise ValueError("initial set contains no grid node")
    if count == grid.nodes:
        raise ValueError("initial set covers the whole grid")
    return SignField.from_indicator(grid, mask)


def smooth(field, kernel):
    """Periodic convolution of a sign field with the kernel."""
    if field.grid != kernel.grid:
        raise ValueError("field and kernel live on different grids")
    w = get_fft_workers()
    spec = scipy.fft.rfftn(field.values.astype(np.float64), workers=w)
    spec *= kernel.step_multiplier
    return RealField(field.grid, scipy.fft.irfftn(spec, s=field.grid.shape, workers=w))


def threshold(values):
    """Sign with ``sign(0) = -1``."""
    return np.where(np.asarray(values) > 0.0, 1, -1).astype(np.int8)


def step(field, kernel, return_smoothed=False):
    """One threshold step."""
    smoothed = smooth(field, kernel)
    new = SignField(field.grid, threshold(smoothed.values))
    if return_smoothed:
        return new, smoothed
    return new


@dataclass
class Trajectory:
    """Output of :func:`run`.

    ``fields[i]`` is the sign field after ``field_steps[i]`` steps, i.e. at
    time ``field_steps[i] * h``.  ``volumes`` holds the measure of the set
    after every step taken.
    """

    params: SchemeParams
    grid: object
    field_steps: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list, repr=False)
    volumes: list = dc_field(default_factory=list)
    extinction_time: float | None = None
    steps_taken: int = 0
    smoothed: RealField | None = dc_field(default=None, repr=False)
    kernel_metadata: dict = dc_field(default_factory=dict)

    @property
    def times(self):
        return [n * self.params.h for n in self.field_steps]


def run(params, initial, snapshot_every=1, keep_fields=True, callback=None,
        stop_at_extinction=True, wrap_tolerance=0.05):
    """Iterate the scheme from ``initial``.

    Parameters
    ----------
    params : SchemeParams
    initial : SignField
    snapshot_every : int
        Keep the field every this many steps (the initial and final fields
        are always kept when ``keep_fields`` is true).
    keep_fields : bool
    callback : callable, optional
        Called as ``callback(n, t, field, smoothed)`` after every step, and
        with ``smoothed=None`` for the initial field.
    stop_at_extinction : bool
        Stop once the set (or its complement) becomes empty.
    wrap_tolerance : float
        Largest kernel mass allowed to wrap around the torus.

    Returns
    -------
    Trajectory
    """
    grid = initial.grid
    kernel = build_kernel(grid, params.alpha, params.sigma, params.convention,
                          wrap_tolerance=wrap_tolerance)
    traj = Trajectory(params=params, grid=grid, kernel_metadata=dict(kernel.metadata))
    u = initial
    traj.volumes.append(u.volume())
    if keep_fields:
        traj.field_steps.append(0)
        traj.fields.append(u)
    if callback is not None:
        callback(0, 0.0, u, None)
    for n in range(1, int(params.steps) + 1):
        u, w = step(u, kernel, return_smoothed=True)
        traj.smoothed = w
        traj.steps_taken = n
        count = int(np.count_nonzero(u.values > 0))
        traj.volumes.append(count * grid.cell_volume)
        empty = count == 0
        full = count == grid.nodes
        last = n == params.steps or ((empty or full) and stop_at_extinction)
        if keep_fields and (n % snapshot_every == 0 or last):
            traj.field_steps.append(n)
            traj.fields.append(u)
        if callback is not None:
            callback(n, n * params.h, u, w)
        if empty and traj.extinction_time is None:
            traj.extinction_time = n * params.h
        if (empty or full) and stop_at_extinction:
            break
    return traj
