"""Periodic Cartesian grids, fields on them and the spectral transform pair.

Nodes sit at ``x_j = -L/2 + j * dx`` for ``j = 0 .. n-1`` so the origin is a
node (``j = n/2``).  Transforms use the real-input FFT: the forward transform
is unnormalized and the inverse carries the ``1/nodes`` factor, so
``fft_inverse(fft_forward(f)) == f`` up to roundoff.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "RealField",
    "SignField",
    "make_grid",
    "fft_forward",
    "fft_inverse",
    "spectral_norm",
    "set_fft_workers",
    "get_fft_workers",
    "save_field",
    "load_field",
]

_FFT_WORKERS = 1


def set_fft_workers(n):
    """Set the number of threads used by every transform in the package."""
    global _FFT_WORKERS
    n = int(n)
    if n < 1:
        raise ValueError("number of FFT workers must be >= 1")
    _FFT_WORKERS = n


def get_fft_workers():
    return _FFT_WORKERS


def _is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus ``[-L/2, L/2)^N``.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 to 3.
    extent : float
        Side length ``L`` of the periodic box.
    points : int
        Nodes per axis, a power of two.
    """

    dim: int
    extent: float
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")
        if not _is_power_of_two(int(self.points)) or self.points < 8:
            raise ValueError(f"points must be a power of two >= 8, got {self.points}")

    @property
    def spacing(self):
        return self.extent / self.points

    @property
    def shape(self):
        return (self.points,) * self.dim

    @property
    def nodes(self):
        return self.points ** self.dim

    @property
    def cell_volume(self):
        return self.spacing ** self.dim

    @property
    def origin_index(self):
        """Index tuple of the node at ``x = 0``."""
        return (self.points // 2,) * self.dim

    def coordinates(self):
        """1-D node coordinates shared by every axis."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    def mesh(self, sparse=True):
        x = self.coordinates()
        return np.meshgrid(*([x] * self.dim), indexing="ij", sparse=sparse)

    def radius(self):
        """Distance of every node from the origin (no periodic wrap)."""
        r2 = sum(c * c for c in self.mesh(sparse=True))
        return np.sqrt(r2)

    def frequencies(self):
        """Angular frequencies ``2 pi k / L`` for ``k`` in ``[-n/2, n/2)``, FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def wavenumber_magnitude(self):
        """``|xi|`` on the half spectrum used by the real transform."""
        k = self.frequencies()
        kr = 2.0 * np.pi * np.fft.rfftfreq(self.points, d=self.spacing)
        axes = [k] * (self.dim - 1) + [kr]
        mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
        return np.sqrt(sum(m * m for m in mesh))

    def spectral_shape(self):
        return (self.points,) * (self.dim - 1) + (self.points // 2 + 1,)

    def to_dict(self):
        return {"dim": self.dim, "extent": self.extent, "points": self.points}


def make_grid(dim, extent, points):
    """Build a :class:`Grid` after validating its parameters."""
    return Grid(int(dim), float(extent), int(points))


@dataclass
class RealField:
    """Real-valued nodal field on a grid."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        self.values = v


@dataclass
class SignField:
    """Nodal field with values in {-1, +1}; +1 marks the evolving set."""

    grid: Grid
    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all((v == 1) | (v == -1)):
            raise ValueError("sign field values must be exactly -1 or +1")
        self.values = v.astype(np.int8, copy=False)

    @classmethod
    def from_indicator(cls, grid, inside):
        """Sign field that is +1 where ``inside`` is true."""
        return cls(grid, np.where(inside, 1, -1).astype(np.int8))

    def inside(self):
        return self.values > 0

    def volume(self):
        return float(np.count_nonzero(self.values > 0)) * self.grid.cell_volume


def _values(f):
    return f.values if isinstance(f, (RealField, SignField)) else np.asarray(f)


def fft_forward(f):
    """Unnormalized real-input transform of a field (or plain array)."""
    return scipy.fft.rfftn(np.asarray(_values(f), dtype=np.float64), workers=_FFT_WORKERS)


def fft_inverse(spectrum, grid):
    """Inverse of :func:`fft_forward`; carries the ``1/nodes`` factor."""
    return scipy.fft.irfftn(spectrum, s=grid.shape, workers=_FFT_WORKERS)


def spectral_norm(spectrum, grid):
    """Grid-weighted L2 norm recovered from a half spectrum (Parseval).

    Modes in the interior of the last axis stand for a conjugate pair and
    are counted twice.
    """
    w = np.full(spectrum.shape[-1], 2.0)
    w[0] = 1.0
    if grid.points % 2 == 0:
        w[-1] = 1.0
    s = np.sum(np.abs(spectrum) ** 2 * w)
    return math.sqrt(s * grid.cell_volume / grid.nodes)


def save_field(path, f, kind=None):
    """Write a field as one JSON header line followed by raw float64 data.

    The payload is little-endian float64 in row-major order.  ``kind``
    defaults to ``"sign"`` or ``"real"`` from the field type.
    """
    if kind is None:
        kind = "sign" if isinstance(f, SignField) else "real"
    header = dict(f.grid.to_dict(), kind=kind)
    path = Path(path)
    data = np.ascontiguousarray(f.values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        fh.write(data.tobytes(order="C"))
    return path


def load_field(path):
    """Read a field written by :func:`save_field`."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    grid = make_grid(header["dim"], header["extent"], header["points"])
    values = np.frombuffer(raw, dtype="<f8").reshape(grid.shape).astype(np.float64)
    if header.get("kind") == "sign":
        return SignField(grid, values)
    return RealField(grid, values)
