"""Numpy implementations of the compiled loops in ``_ckernels``.

Output matches the compiled versions bit for bit (marching squares) or to
roundoff (distances).
"""
import numpy as np
from scipy.spatial import cKDTree


def marching_squares(w, x0, dx, periodic=False):
    """Zero level set of a 2-D nodal field as points and segments.

    See ``_ckernels.marching_squares`` for the layout of the output.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    n0, n1 = w.shape
    if periodic:
        wa0, wb0 = w, np.roll(w, -1, axis=0)
        wa1, wb1 = w, np.roll(w, -1, axis=1)
    else:
        wa0, wb0 = w[:-1, :], w[1:, :]
        wa1, wb1 = w[:, :-1], w[:, 1:]
    c0 = (wa0 > 0) != (wb0 > 0)
    c1 = (wa1 > 0) != (wb1 > 0)

    i0, j0 = np.nonzero(c0)
    i1, j1 = np.nonzero(c1)
    a, b = wa0[c0], wb0[c0]
    p0 = np.stack([x0 + (i0 + a / (a - b)) * dx, x0 + j0 * dx], axis=1)
    a, b = wa1[c1], wb1[c1]
    p1 = np.stack([x0 + i1 * dx, x0 + (j1 + a / (a - b)) * dx], axis=1)
    points = np.concatenate([p0, p1]).reshape(-1, 2)

    id0 = np.full((n0, n1), -1, dtype=np.int64)
    id1 = np.full((n0, n1), -1, dtype=np.int64)
    id0[i0, j0] = np.arange(len(i0))
    id1[i1, j1] = len(i0) + np.arange(len(i1))

    m0 = n0 if periodic else n0 - 1
    m1 = n1 if periodic else n1 - 1
    i = np.arange(m0)[:, None]
    j = np.arange(m1)[None, :]
    ip = (i + 1) % n0
    jp = (j + 1) % n1
    w0, w1, w2, w3 = w[i, j], w[ip, j], w[ip, jp], w[i, jp]
    b0, b1, b2, b3 = w0 > 0, w1 > 0, w2 > 0, w3 > 0
    active = ~((b0 == b1) & (b1 == b2) & (b2 == b3))
    e = np.stack([id0[i, j], id1[ip, j], id0[i, jp], id1[i, j]], axis=-1)
    e = np.broadcast_to(e, (m0, m1, 4))[active]
    saddle = ((b0 == b2) & (b1 == b3))[active]
    centre = ((w0 + w1 + w2 + w3) * 0.25)[active]
    joined = (centre > 0) == b0[active]

    segs = np.full((e.shape[0], 2, 2), -1, dtype=np.int64)
    # ordinary cells: exactly two crossing edges, taken in local order
    ordinary = ~saddle
    eo = e[ordinary]
    hit = eo >= 0
    order = np.argsort(~hit, axis=1, kind="stable")[:, :2]
    segs[ordinary, 0] = np.take_along_axis(eo, order, axis=1)
    sj = saddle & joined
    sn = saddle & ~joined
    segs[sj, 0] = e[sj][:, [0, 1]]
    segs[sj, 1] = e[sj][:, [2, 3]]
    segs[sn, 0] = e[sn][:, [0, 3]]
    segs[sn, 1] = e[sn][:, [1, 2]]
    segs = segs.reshape(-1, 2)
    segs = segs[segs[:, 0] >= 0]
    return points, np.ascontiguousarray(segs)


def directed_hausdorff(a, b):
    """``max_{x in a} min_{y in b} |x - y|`` via an exact nearest-neighbour tree."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("point sets must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise ValueError("point sets have different dimensions")
    d, _ = cKDTree(b).query(a, k=1)
    return float(np.max(d))
