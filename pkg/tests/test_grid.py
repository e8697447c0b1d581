import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fracthresh.grid import (RealField, SignField, fft_forward, fft_inverse, load_field, make_grid,
                             save_field, set_fft_workers, get_fft_workers, spectral_norm)


@pytest.mark.parametrize("dim,extent,points", [(0, 1, 8), (4, 1, 8), (2, 0.0, 8), (2, -1, 8),
                                               (2, math.inf, 8), (2, 1, 12), (2, 1, 4)])
def test_rejects_bad_grids(dim, extent, points):
    with pytest.raises(ValueError):
        make_grid(dim, extent, points)


def test_coordinates_and_origin():
    g = make_grid(2, 8.0, 16)
    x = g.coordinates()
    assert x[0] == -4.0 and x[g.points // 2] == 0.0
    assert np.allclose(np.diff(x), g.spacing)
    assert g.radius()[g.origin_index] == 0.0
    assert g.nodes == 256 and g.cell_volume == 0.25


def test_frequencies_match_fft_convention():
    g = make_grid(1, 2 * np.pi, 8)
    assert np.array_equal(g.frequencies(), [0, 1, 2, 3, -4, -3, -2, -1])
    assert g.wavenumber_magnitude().shape == g.spectral_shape() == (5,)
    g2 = make_grid(2, 4.0, 8)
    xi = g2.wavenumber_magnitude()
    assert xi.shape == g2.spectral_shape() == (8, 5)
    assert xi[1, 1] == pytest.approx(math.hypot(2 * math.pi / 4, 2 * math.pi / 4))


def test_transform_of_a_plane_wave():
    g = make_grid(2, 2 * np.pi, 16)
    x, y = g.mesh()
    f = np.cos(3 * x) * np.ones_like(y)
    spec = fft_forward(f)
    peak = np.unravel_index(np.argmax(np.abs(spec)), spec.shape)
    assert peak == (3, 0)
    assert abs(spec[3, 0]) == pytest.approx(0.5 * g.nodes)


@settings(max_examples=30, deadline=None)
@given(dim=st.sampled_from([1, 2, 3]), data=st.data())
def test_fft_roundtrip_and_parseval(dim, data):
    g = make_grid(dim, data.draw(st.floats(0.5, 20)), 8)
    f = data.draw(arrays(np.float64, g.shape, elements=st.floats(-1e3, 1e3)))
    spec = fft_forward(f)
    assert np.allclose(fft_inverse(spec, g), f, atol=1e-9)
    direct = math.sqrt(float(np.sum(f * f)) * g.cell_volume)
    assert spectral_norm(spec, g) == pytest.approx(direct, rel=1e-10, abs=1e-9)


def test_sign_field_rejects_other_values():
    g = make_grid(1, 1.0, 8)
    with pytest.raises(ValueError):
        SignField(g, np.zeros(8))
    with pytest.raises(ValueError):
        RealField(g, np.zeros(9))


@pytest.mark.parametrize("kind", ["sign", "real"])
def test_raw_dump_roundtrip(tmp_path, kind):
    g = make_grid(2, 3.0, 8)
    rng = np.random.default_rng(0)
    if kind == "sign":
        f = SignField.from_indicator(g, rng.random(g.shape) < 0.5)
    else:
        f = RealField(g, rng.standard_normal(g.shape))
    path = save_field(tmp_path / "f.raw", f)
    back = load_field(path)
    assert type(back) is type(f) and back.grid == g
    assert np.array_equal(back.values, f.values)
    header, payload = path.read_bytes().split(b"\n", 1)
    assert len(payload) == 8 * g.nodes


def test_fft_worker_setting():
    old = get_fft_workers()
    try:
        set_fft_workers(2)
        assert get_fft_workers() == 2
        with pytest.raises(ValueError):
            set_fft_workers(0)
    finally:
        set_fft_workers(old)
