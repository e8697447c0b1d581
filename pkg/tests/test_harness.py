import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import directed_hausdorff as scipy_directed

from fracthresh.config import ConvergeConfig
from fracthresh.grid import RealField, make_grid
from fracthresh.harness import (ConvergenceTable, convergence_study, extract_front, grid_points_for,
                                hausdorff_distance, points_inside, reference_sphere, write_plots)
from fracthresh.scheme import disk, initialize

pytestmark = pytest.mark.usefixtures("quiet")

point_sets = arrays(np.float64, st.tuples(st.integers(1, 40), st.just(2)),
                    elements=st.floats(-10, 10, allow_subnormal=False))


@settings(max_examples=100, deadline=None)
@given(a=point_sets, b=point_sets, c=point_sets)
def test_hausdorff_is_a_metric(a, b, c):
    dab = hausdorff_distance(a, b)
    assert dab == pytest.approx(hausdorff_distance(b, a), abs=0, rel=0)
    assert hausdorff_distance(a, a) == 0.0
    assert dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12
    oracle = max(scipy_directed(a, b)[0], scipy_directed(b, a)[0])
    assert dab == pytest.approx(oracle, rel=1e-12, abs=1e-12)


def test_hausdorff_rejects_bad_input():
    with pytest.raises(ValueError):
        hausdorff_distance(np.empty((0, 2)), np.zeros((1, 2)))
    with pytest.raises(ValueError):
        hausdorff_distance(np.zeros((1, 2)), np.zeros((1, 3)))


def test_concentric_circles():
    a = reference_sphere(1.0, 2, 0.01)
    b = reference_sphere(1.3, 2, 0.01)
    assert hausdorff_distance(a, b) == pytest.approx(0.3, abs=1e-4)
    s = reference_sphere(2.0, 3, 0.1)
    assert np.allclose(np.linalg.norm(s, axis=1), 2.0)
    assert reference_sphere(0.0, 2, 0.1).shape == (1, 2)


def test_linear_field_front_is_exact():
    g = make_grid(2, 4.0, 32)
    x, y = g.mesh(sparse=False)
    w = RealField(g, 0.3 - x + 0.0 * y)
    snap = extract_front(w, 0.5)
    assert snap.time == 0.5 and snap.components == 1
    assert np.allclose(snap.points[:, 0], 0.3)
    assert len(snap.points) == g.points


def test_circle_front():
    g = make_grid(2, 4.0, 128)
    x, y = g.mesh()
    w = RealField(g, 1.0 - np.sqrt(x * x + y * y))
    snap = extract_front(w)
    assert snap.components == 1
    assert np.allclose(np.linalg.norm(snap.points, axis=1), 1.0, atol=g.spacing ** 2)
    assert snap.radius_stats["mean"] == pytest.approx(1.0, abs=1e-3)
    assert np.allclose(snap.centroid, 0.0, atol=1e-12)
    dense = snap.densified(g.spacing / 4)
    assert len(dense) > 3 * len(snap.points)
    assert hausdorff_distance(dense, reference_sphere(1.0, 2, g.spacing / 4)) <= g.spacing / 8 + 1e-3


def test_nested_fronts_and_containment():
    g = make_grid(2, 4.0, 64)
    x, y = g.mesh()
    r = np.sqrt(x * x + y * y)
    inner = extract_front(RealField(g, 0.7 - r))
    outer = extract_front(RealField(g, 1.2 - r))
    assert np.all(points_inside(outer, inner.points))
    assert not np.any(points_inside(inner, outer.points))
    ring = extract_front(RealField(g, np.minimum(1.2 - r, r - 0.5)))
    assert ring.components == 2 and ring.radius_stats is None


def test_extinct_and_full_fields():
    g = make_grid(2, 4.0, 16)
    assert extract_front(RealField(g, -np.ones(g.shape))).extinct
    snap = extract_front(RealField(g, np.ones(g.shape)))
    assert snap.complement_extinct and snap.empty


@pytest.mark.parametrize("dim", [1, 3])
def test_other_dimensions_use_edge_crossings(dim):
    g = make_grid(dim, 4.0, 16)
    u = initialize(g, disk(1.0))
    snap = extract_front(u)
    assert snap.points.shape[1] == dim and not snap.empty
    if dim == 1:
        assert snap.components == 2


def test_front_csv():
    g = make_grid(2, 4.0, 16)
    snap = extract_front(initialize(g, disk(1.0)))
    lines = snap.to_csv().splitlines()
    assert lines[0] == "x0,x1" and len(lines) == len(snap.points) + 1


def test_grid_rule():
    cfg = ConvergeConfig(alpha=1.5, cells_per_width=6.4)
    assert [grid_points_for(cfg, h) for h in cfg.h_ladder] == [256, 512, 1024]
    small = ConvergeConfig(alpha=1.5, cells_per_width=6.4, max_points=512)
    assert grid_points_for(small, 0.0025) == 512


@pytest.fixture(scope="module")
def small_table():
    cfg = ConvergeConfig(alpha=1.5, h_ladder=[0.16, 0.08, 0.04], cells_per_width=6.4, window=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return convergence_study(cfg)


def test_convergence_table(small_table, tmp_path):
    t = small_table
    assert [r.points for r in t.rows] == [128, 256, 256]
    assert all(r.status == "ok" for r in t.rows)
    assert t.rows[0].order is None and t.rows[1].order is not None
    assert t.expected_rate == pytest.approx(-2 * 1.48377, rel=1e-5)
    assert all(r.fitted_rate < 0 for r in t.rows[1:])
    assert t.rows[1].centroid_drift < 1e-6
    csv = t.to_csv().splitlines()
    assert len(csv) == 4 and csv[0].startswith("h,sigma,points")
    assert len(t.to_text().splitlines()) >= 4
    assert t.to_dict()["law"]["kind"] == "mcf"
    paths = write_plots(t, tmp_path)
    assert all((tmp_path / name).exists() for name in ("radius.png", "error.png"))


def test_failed_rung_is_isolated():
    # the last rung needs more points than allowed, so it cannot be resolved
    cfg = ConvergeConfig(alpha=1.5, h_ladder=[0.16, 0.08, 0.0025], cells_per_width=6.4, max_points=128)
    t = convergence_study(cfg)
    assert t.rows[0].status == "ok"
    assert t.rows[2].status.startswith("failed: ResolutionError")
    assert not t.monotone()
    assert math.isnan(t.rows[2].error)


def test_parallel_rungs_match_serial(small_table):
    cfg = ConvergeConfig(alpha=1.5, h_ladder=[0.16, 0.08, 0.04], cells_per_width=6.4, window=0.5)
    par = convergence_study(cfg, threads=2)
    assert par.to_csv() == small_table.to_csv()
