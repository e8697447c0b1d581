"""Front extraction, Hausdorff distances and convergence studies.

The discrete front is the zero level of the smoothed field ``p * u``, found
by linear interpolation along grid edges.  Convergence studies run the
scheme on a ball over a ladder of time steps and compare the extracted
fronts with the exact radius law of the limiting motion.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _accel
from .config import ConvergeConfig
from .grid import SignField, make_grid, set_fft_workers
from .kernel import Convention, effective_width, symbol_scale
from .limits import LawKind, radius_law
from .scheme import SchemeParams, disk, initialize, regime, run, sigma_of_h

__all__ = ["FrontSnapshot", "extract_front", "hausdorff_distance", "points_inside",
           "reference_sphere", "ConvergenceRow", "ConvergenceTable", "convergence_study",
           "grid_points_for"]


@dataclass
class FrontSnapshot:
    """Zero level of a smoothed field at one time.

    ``segments`` index into ``points`` (2-D only).  ``extinct`` means the
    field has no positive node, ``complement_extinct`` that it has no
    nonpositive one; both leave ``points`` empty.
    """

    time: float
    points: np.ndarray
    segments: np.ndarray | None = None
    extinct: bool = False
    complement_extinct: bool = False
    components: int = 0
    centroid: np.ndarray | None = None
    radius_stats: dict | None = None

    @property
    def empty(self):
        return len(self.points) == 0

    def densified(self, spacing):
        """Points along the front polyline no farther apart than ``spacing``."""
        if self.segments is None or len(self.segments) == 0:
            return self.points
        a = self.points[self.segments[:, 0]]
        b = self.points[self.segments[:, 1]]
        length = np.linalg.norm(b - a, axis=1)
        k = np.maximum(1, np.ceil(length / spacing).astype(int))
        # segments are unoriented, so both endpoints are kept
        n = k + 1
        rep = np.repeat(np.arange(len(k)), n)
        frac = (np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)) / np.repeat(k, n)
        return np.unique(a[rep] + frac[:, None] * (b - a)[rep], axis=0)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(self.points.shape[1])] if self.points.ndim == 2 else ["x0"])
        for p in self.points:
            w.writerow([repr(float(v)) for v in p])
        return buf.getvalue()


def _edge_crossings(w, x0, dx):
    # zero crossings along every axis, ordered by axis then row-major index
    out = []
    for ax in range(w.ndim):
        a = np.take(w, np.arange(w.shape[ax] - 1), axis=ax)
        b = np.take(w, np.arange(1, w.shape[ax]), axis=ax)
        cross = (a > 0) != (b > 0)
        idx = np.nonzero(cross)
        theta = a[cross] / (a[cross] - b[cross])
        coords = [x0 + i * dx for i in idx]
        coords[ax] = coords[ax] + theta * dx
        out.append(np.stack(coords, axis=1))
    return np.concatenate(out).reshape(-1, w.ndim)


def _radius_stats(points, weights=None):
    c = np.average(points, axis=0, weights=weights)
    r = np.linalg.norm(points - c, axis=1)
    return c, {"mean": float(np.average(r, weights=weights)), "min": float(r.min()), "max": float(r.max())}


def extract_front(smoothed, time=0.0):
    """Zero level set of a smoothed field.

    2-D fields use marching squares (saddles resolved by the cell mean);
    other dimensions return the edge-crossing vertex set.  Points are
    physical coordinates, one column per axis, in a deterministic order.
    """
    if isinstance(smoothed, SignField):
        values = smoothed.values.astype(np.float64)
    else:
        values = np.asarray(smoothed.values, dtype=np.float64)
    grid = smoothed.grid
    x0, dx = -0.5 * grid.extent, grid.spacing
    positive = int(np.count_nonzero(values > 0))
    snap = FrontSnapshot(time=float(time), points=np.empty((0, grid.dim)))
    if positive == 0:
        snap.extinct = True
        return snap
    if positive == values.size:
        snap.complement_extinct = True
        return snap
    if grid.dim == 2:
        pts, segs = _accel.marching_squares(np.ascontiguousarray(values), x0, dx)
        snap.points, snap.segments = np.asarray(pts), np.asarray(segs)
        n = len(snap.points)
        if n:
            adj = coo_matrix((np.ones(len(segs)), (segs[:, 0], segs[:, 1])), shape=(n, n))
            snap.components = int(connected_components(adj, directed=False)[0])
            a, b = snap.points[segs[:, 0]], snap.points[segs[:, 1]]
            mids = 0.5 * (a + b)
            wts = np.linalg.norm(b - a, axis=1)
            c, _ = _radius_stats(mids, wts)
            snap.centroid = c
            if snap.components == 1:
                r = np.linalg.norm(snap.points - c, axis=1)
                snap.radius_stats = {"mean": float(np.average(np.linalg.norm(mids - c, axis=1), weights=wts)),
                                     "min": float(r.min()), "max": float(r.max())}
        return snap
    snap.points = _edge_crossings(values, x0, dx)
    if len(snap.points):
        snap.components = 1 if grid.dim > 1 else len(snap.points)
        snap.centroid, stats = _radius_stats(snap.points)
        if grid.dim > 1:
            snap.radius_stats = stats
    return snap


def hausdorff_distance(a, b):
    """Hausdorff distance between two finite point sets (exact)."""
    a = np.ascontiguousarray(np.atleast_2d(np.asarray(a, dtype=np.float64)))
    b = np.ascontiguousarray(np.atleast_2d(np.asarray(b, dtype=np.float64)))
    if a.size == 0 or b.size == 0:
        raise ValueError("Hausdorff distance needs two nonempty point sets")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets live in different dimensions")
    return max(_accel.directed_hausdorff(a, b), _accel.directed_hausdorff(b, a))


def points_inside(snapshot, query):
    """Even-odd test of ``query`` points against a closed 2-D front."""
    if snapshot.segments is None:
        raise ValueError("containment needs a 2-D front with segments")
    q = np.atleast_2d(np.asarray(query, float))
    a = snapshot.points[snapshot.segments[:, 0]]
    b = snapshot.points[snapshot.segments[:, 1]]
    inside = np.zeros(len(q), bool)
    for s in range(0, len(q), 512):
        p = q[s:s + 512, None, :]
        straddle = (a[None, :, 1] > p[..., 1]) != (b[None, :, 1] > p[..., 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = a[None, :, 0] + (p[..., 1] - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                b[None, :, 1] - a[None, :, 1])
        hits = straddle & (p[..., 0] < xc)
        inside[s:s + 512] = np.count_nonzero(hits, axis=1) % 2 == 1
    return inside


def reference_sphere(radius, dim, spacing, center=None):
    """Points on the sphere of ``radius`` no farther apart than about ``spacing``."""
    c = np.zeros(dim) if center is None else np.asarray(center, float)
    if radius <= 0:
        return c[None, :]
    if dim == 2:
        m = max(8, int(math.ceil(2.0 * math.pi * radius / spacing)))
        t = 2.0 * math.pi * np.arange(m) / m
        return c + radius * np.stack([np.cos(t), np.sin(t)], axis=1)
    # Fibonacci lattice
    m = max(32, int(math.ceil(4.0 * math.pi * radius ** 2 / spacing ** 2)))
    k = np.arange(m) + 0.5
    z = 1.0 - 2.0 * k / m
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    s = np.sqrt(1.0 - z * z)
    return c + radius * np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def grid_points_for(cfg, h):
    """Grid size for one rung: kernel width spans ``cells_per_width`` cells."""
    sigma = sigma_of_h(h, cfg.alpha)
    width = effective_width(sigma, cfg.alpha, symbol_scale(cfg.convention, cfg.dim, cfg.alpha))
    target = cfg.extent * cfg.cells_per_width / width
    n = 2 ** int(round(math.log2(target)))
    return int(min(max(n, cfg.min_points), cfg.max_points))


@dataclass
class ConvergenceRow:
    h: float
    sigma: float
    points: int
    spacing: float = float("nan")
    width_cells: float = float("nan")
    steps: int = 0
    error: float = float("nan")
    relative_error: float = float("nan")
    order: float | None = None
    fitted_rate: float = float("nan")
    centroid_drift: float = float("nan")
    status: str = "ok"
    times: list = dc_field(default_factory=list, repr=False)
    radii: list = dc_field(default_factory=list, repr=False)
    errors: list = dc_field(default_factory=list, repr=False)
    fronts: list = dc_field(default_factory=list, repr=False)

    COLUMNS = ("h", "sigma", "points", "spacing", "width_cells", "steps", "error", "relative_error",
               "order", "fitted_rate", "centroid_drift", "status")

    def record(self):
        return {k: getattr(self, k) for k in self.COLUMNS}


@dataclass
class ConvergenceTable:
    """Rows sorted by decreasing ``h``.

    ``error`` is the largest Hausdorff distance between extracted and exact
    fronts over the comparison window, ``relative_error`` the largest ratio
    of that distance to the exact radius, ``order`` the observed order
    ``log(e_prev / e) / log(h_prev / h)`` and ``fitted_rate`` the slope
    of ``R^p`` against time (``p = 2`` for MCF, ``1 + alpha`` otherwise).
    """

    alpha: float
    dim: int
    convention: str
    radius: float
    law: dict
    rows: list

    @property
    def expected_rate(self):
        """Slope of ``R^p`` against time under the exact law."""
        return -_law_rate(self.law)

    def errors(self):
        return [r.error for r in self.rows]

    def monotone(self):
        e = [r.error for r in self.rows]
        return all(b < a for a, b in zip(e, e[1:])) and all(math.isfinite(v) for v in e)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ConvergenceRow.COLUMNS)
        for r in self.rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v)
                        for v in r.record().values()])
        return buf.getvalue()

    def to_text(self):
        head = ConvergenceRow.COLUMNS
        body = []
        for r in self.rows:
            cells = []
            for k in head:
                v = getattr(r, k)
                if v is None:
                    cells.append("-")
                elif isinstance(v, float):
                    cells.append(f"{v:.6g}")
                else:
                    cells.append(str(v))
            body.append(cells)
        widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h) for i, h in enumerate(head)]
        lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
        lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {"alpha": self.alpha, "dim": self.dim, "convention": self.convention,
                "radius": self.radius, "law": self.law, "rows": [r.record() for r in self.rows],
                "monotone": self.monotone()}


def _law_rate(law):
    if law["kind"] == LawKind.MCF.value:
        return 2.0 * law["constant"] * (law["dim"] - 1)
    return (1.0 + law["alpha"]) * law["constant"]


def _law_for(cfg):
    kind = LawKind.MCF if regime(cfg.alpha) != "fractional" else LawKind.FRACTIONAL
    return radius_law(kind, cfg.alpha, cfg.dim, cfg.radius, cfg.convention)


def _run_rung(cfg, law, h, fft_workers=None):
    if fft_workers is not None:
        set_fft_workers(fft_workers)
    row = ConvergenceRow(h=h, sigma=sigma_of_h(h, cfg.alpha), points=grid_points_for(cfg, h))
    grid = make_grid(cfg.dim, cfg.extent, row.points)
    row.spacing = grid.spacing
    scale = symbol_scale(cfg.convention, cfg.dim, cfg.alpha)
    row.width_cells = effective_width(row.sigma, cfg.alpha, scale) / grid.spacing
    t_end = cfg.window * law.extinction_time
    row.steps = int(math.floor(t_end / h + 1e-9))
    params = SchemeParams(cfg.alpha, h, row.steps, cfg.convention)
    u0 = initialize(grid, disk(cfg.radius))
    ref_spacing = 0.25 * grid.spacing
    c0 = np.zeros(cfg.dim)
    drift = 0.0

    def observe(n, t, field, smoothed):
        nonlocal drift
        if smoothed is None:
            return
        snap = extract_front(smoothed, t)
        if snap.empty:
            row.times.append(t)
            row.radii.append(0.0)
            row.errors.append(float("inf"))
            return
        exact = law.radius(t)
        front = snap.densified(ref_spacing) if cfg.dim == 2 else snap.points
        err = hausdorff_distance(front, reference_sphere(exact, cfg.dim, ref_spacing))
        mean_r = snap.radius_stats["mean"] if snap.radius_stats else float("nan")
        drift = max(drift, float(np.linalg.norm(snap.centroid - c0)) / grid.spacing)
        row.times.append(t)
        row.radii.append(mean_r)
        row.errors.append(err / exact if exact > 0 else float("inf"))
        row.error = max(err, 0.0 if math.isnan(row.error) else row.error)
        if cfg.write_fronts:
            row.fronts.append(snap)

    run(params, u0, keep_fields=False, callback=observe, stop_at_extinction=True)
    row.relative_error = max(row.errors) if row.errors else float("nan")
    row.centroid_drift = drift
    t = np.asarray(row.times)
    r = np.asarray(row.radii)
    ok = np.isfinite(r) & (r > 0)
    if ok.sum() >= 2:
        p = 2.0 if law.kind is LawKind.MCF else 1.0 + cfg.alpha
        row.fitted_rate = float(np.polyfit(t[ok], r[ok] ** p, 1)[0])
    return row


def convergence_study(cfg, threads=1):
    """Run every rung of ``cfg.h_ladder`` and tabulate the errors.

    Rungs run in separate processes when ``threads > 1``; a rung that
    raises is recorded with its error message and the others complete.
    """
    if isinstance(cfg, dict):
        cfg = ConvergeConfig.from_dict(cfg)
    cfg.validate()
    law = _law_for(cfg)
    ladder = sorted(cfg.h_ladder, reverse=True)
    rows = []
    if threads > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(ladder))) as ex:
            futures = [ex.submit(_run_rung, cfg, law, h, 1) for h in ladder]
            results = []
            for h, fut in zip(ladder, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:  # isolate failing rungs
                    results.append(_failed_row(cfg, h, exc))
    else:
        results = []
        for h in ladder:
            try:
                results.append(_run_rung(cfg, law, h))
            except Exception as exc:
                results.append(_failed_row(cfg, h, exc))
    prev = None
    for row in results:
        if prev is not None and prev.status == "ok" and row.status == "ok" and row.error > 0:
            row.order = math.log(prev.error / row.error) / math.log(prev.h / row.h)
        rows.append(row)
        prev = row
    return ConvergenceTable(cfg.alpha, cfg.dim, Convention.parse(cfg.convention).value, cfg.radius,
                            law.to_dict(), rows)


def _failed_row(cfg, h, exc):
    try:
        sigma = sigma_of_h(h, cfg.alpha)
        pts = grid_points_for(cfg, h)
    except Exception:
        sigma, pts = float("nan"), 0
    return ConvergenceRow(h=h, sigma=sigma, points=pts, status=f"failed: {type(exc).__name__}: {exc}")


def write_plots(table, out_dir):
    """Radius against time and error against ``h``; needs matplotlib."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in table.rows:
        if r.times:
            ax.plot(r.times, r.radii, ".", ms=3, label=f"h={r.h:g}")
    if table.rows and table.rows[-1].times:
        t = np.linspace(0, max(table.rows[-1].times), 200)
        rate = _law_rate(table.law)
        p = 2.0 if table.law["kind"] == LawKind.MCF.value else 1.0 + table.alpha
        ax.plot(t, np.maximum(table.radius ** p - rate * t, 0) ** (1 / p), "k-", lw=1, label="exact")
    ax.set_xlabel("t")
    ax.set_ylabel("mean front radius")
    ax.legend()
    path = os.path.join(out_dir, "radius.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(5, 4))
    ok = [r for r in table.rows if r.status == "ok"]
    ax.loglog([r.h for r in ok], [r.error for r in ok], "o-")
    ax.set_xlabel("h")
    ax.set_ylabel("sup Hausdorff error")
    path = os.path.join(out_dir, "error.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    paths.append(path)
    return paths
