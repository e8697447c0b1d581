import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from fracthresh import _accel, _pykernels

ck = pytest.importorskip("fracthresh._ckernels")

fields = arrays(np.float64, st.tuples(st.integers(2, 24), st.integers(2, 24)),
                elements=st.floats(-1, 1, allow_subnormal=False))


@settings(max_examples=150, deadline=None)
@given(w=fields, periodic=st.booleans())
def test_marching_squares_backends_agree_exactly(w, periodic):
    p1, s1 = _pykernels.marching_squares(w, -1.0, 0.1, periodic)
    p2, s2 = ck.marching_squares(np.ascontiguousarray(w), -1.0, 0.1, periodic)
    assert np.array_equal(p1, np.asarray(p2))
    assert np.array_equal(s1, np.asarray(s2))


@settings(max_examples=150, deadline=None)
@given(a=arrays(np.float64, st.tuples(st.integers(1, 60), st.sampled_from([2, 3])),
                elements=st.floats(-5, 5, allow_subnormal=False)),
       data=st.data())
def test_hausdorff_backends_agree(a, data):
    b = data.draw(arrays(np.float64, st.tuples(st.integers(1, 60), st.just(a.shape[1])),
                         elements=st.floats(-5, 5, allow_subnormal=False)))
    assert ck.directed_hausdorff(a, b) == pytest.approx(_pykernels.directed_hausdorff(a, b),
                                                        rel=1e-14, abs=1e-14)


def test_saddle_cells_follow_the_cell_mean():
    w = np.array([[1.0, -1.0], [-1.0, 1.0]])
    _, joined = _pykernels.marching_squares(w + 0.1, 0.0, 1.0)
    _, split = _pykernels.marching_squares(w - 0.1, 0.0, 1.0)
    assert len(joined) == len(split) == 2
    assert {tuple(s) for s in joined} != {tuple(s) for s in split}


def test_backend_selection_by_environment():
    code = "from fracthresh import _accel; print(_accel.BACKEND)"
    env = dict(os.environ, FRACTHRESH_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    assert _accel.BACKEND == ("python" if os.environ.get("FRACTHRESH_PURE_PYTHON") == "1" else "cython")
