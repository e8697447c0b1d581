# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled loops for front extraction and point-set distances.

The output of every function matches the numpy versions in ``_pykernels``
exactly, including the order of points and segments.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()


cdef inline double _cross(double wa, double wb):
    return wa / (wa - wb)


def marching_squares(double[:, ::1] w, double x0, double dx, bint periodic=False):
    """Zero level set of a 2-D nodal field as points and segments.

    Returns
    -------
    points : (M, 2) float64
        Edge crossings, axis-0 edges first, each group in row-major order.
    segments : (K, 2) int64
        Pairs of point indices, one or two per cell, cells in row-major order.
    """
    cdef Py_ssize_t n0 = w.shape[0], n1 = w.shape[1]
    cdef Py_ssize_t m0 = n0 if periodic else n0 - 1
    cdef Py_ssize_t m1 = n1 if periodic else n1 - 1
    cdef Py_ssize_t i, j, ip, jp, k, count = 0, nseg = 0
    cdef double wa, wb
    cdef cnp.int64_t[:, ::1] id0 = np.full((n0, n1), -1, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] id1 = np.full((n0, n1), -1, dtype=np.int64)

    # count crossings so the output can be allocated once
    for i in range(m0):
        ip = i + 1 if i + 1 < n0 else 0
        for j in range(n1):
            if (w[i, j] > 0) != (w[ip, j] > 0):
                count += 1
    for i in range(n0):
        for j in range(m1):
            jp = j + 1 if j + 1 < n1 else 0
            if (w[i, j] > 0) != (w[i, jp] > 0):
                count += 1

    pts_arr = np.empty((count, 2), dtype=np.float64)
    cdef double[:, ::1] pts = pts_arr
    k = 0
    for i in range(m0):
        ip = i + 1 if i + 1 < n0 else 0
        for j in range(n1):
            wa = w[i, j]
            wb = w[ip, j]
            if (wa > 0) != (wb > 0):
                pts[k, 0] = x0 + (i + _cross(wa, wb)) * dx
                pts[k, 1] = x0 + j * dx
                id0[i, j] = k
                k += 1
    for i in range(n0):
        for j in range(m1):
            jp = j + 1 if j + 1 < n1 else 0
            wa = w[i, j]
            wb = w[i, jp]
            if (wa > 0) != (wb > 0):
                pts[k, 0] = x0 + i * dx
                pts[k, 1] = x0 + (j + _cross(wa, wb)) * dx
                id1[i, j] = k
                k += 1

    seg_arr = np.empty((2 * count, 2), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] seg = seg_arr
    cdef cnp.int64_t e[4]
    cdef bint b0, b1, b2, b3
    cdef double w0, w1, w2, w3, centre
    cdef int first, q
    for i in range(m0):
        ip = i + 1 if i + 1 < n0 else 0
        for j in range(m1):
            jp = j + 1 if j + 1 < n1 else 0
            w0 = w[i, j]
            w1 = w[ip, j]
            w2 = w[ip, jp]
            w3 = w[i, jp]
            b0 = w0 > 0
            b1 = w1 > 0
            b2 = w2 > 0
            b3 = w3 > 0
            if b0 == b1 and b1 == b2 and b2 == b3:
                continue
            # local edges: bottom, right, top, left
            e[0] = id0[i, j]
            e[1] = id1[ip, j]
            e[2] = id0[i, jp]
            e[3] = id1[i, j]
            if b0 == b2 and b1 == b3:
                centre = (w0 + w1 + w2 + w3) * 0.25
                if (centre > 0) == b0:
                    seg[nseg, 0] = e[0]; seg[nseg, 1] = e[1]
                    seg[nseg + 1, 0] = e[2]; seg[nseg + 1, 1] = e[3]
                else:
                    seg[nseg, 0] = e[0]; seg[nseg, 1] = e[3]
                    seg[nseg + 1, 0] = e[1]; seg[nseg + 1, 1] = e[2]
                nseg += 2
            else:
                first = -1
                for q in range(4):
                    if e[q] >= 0:
                        if first < 0:
                            first = q
                        else:
                            seg[nseg, 0] = e[first]
                            seg[nseg, 1] = e[q]
                            nseg += 1
                            break
    return pts_arr, seg_arr[:nseg].copy()


def directed_hausdorff(double[:, ::1] a, double[:, ::1] b):
    """``max_{x in a} min_{y in b} |x - y|``, exact.

    ``b`` is sorted along its first coordinate; each nearest-neighbour
    search expands outward from the bisection point and stops once the
    coordinate gap alone exceeds the best distance, or as soon as the best
    distance cannot raise the running maximum.
    """
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], dim = a.shape[1]
    cdef Py_ssize_t i, lo, hi, mid, q, up, dn
    cdef double cmax = 0.0, cmin, d, diff, gap, x
    cdef bint go_up, go_dn
    if na == 0 or nb == 0:
        raise ValueError("point sets must be non-empty")
    if b.shape[1] != dim:
        raise ValueError("point sets have different dimensions")
    order = np.argsort(np.asarray(b[:, 0]), kind="stable")
    cdef double[:, ::1] s = np.ascontiguousarray(np.asarray(b)[order])
    for i in range(na):
        x = a[i, 0]
        lo = 0
        hi = nb
        while lo < hi:
            mid = (lo + hi) // 2
            if s[mid, 0] < x:
                lo = mid + 1
            else:
                hi = mid
        up = lo
        dn = lo - 1
        cmin = INFINITY
        go_up = up < nb
        go_dn = dn >= 0
        while go_up or go_dn:
            if go_up:
                gap = s[up, 0] - x
                if gap * gap >= cmin:
                    go_up = False
                else:
                    d = 0.0
                    for q in range(dim):
                        diff = a[i, q] - s[up, q]
                        d += diff * diff
                    if d < cmin:
                        cmin = d
                    up += 1
                    go_up = up < nb
            if go_dn:
                gap = x - s[dn, 0]
                if gap * gap >= cmin:
                    go_dn = False
                else:
                    d = 0.0
                    for q in range(dim):
                        diff = a[i, q] - s[dn, q]
                        d += diff * diff
                    if d < cmin:
                        cmin = d
                    dn -= 1
                    go_dn = dn >= 0
            if cmin <= cmax:
                break
        if cmin > cmax:
            cmax = cmin
    return sqrt(cmax)
