# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Arithmetic mirrors _reference.py expression-for-expression
(float64 math, float32 storage) so the two backends agree; compiled with
-ffp-contract=off to keep IEEE semantics identical."""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, isfinite
from libc.string cimport memchr

cnp.import_array()

NAME = "native"


def upsample_bilinear(cnp.ndarray[cnp.float32_t, ndim=3] src, int out_h, int out_w):
    cdef int h = src.shape[0]
    cdef int w = src.shape[1]
    cdef int dim = src.shape[2]
    cdef double ry = (<double> h) / (<double> out_h)
    cdef double rx = (<double> w) / (<double> out_w)

    cdef cnp.ndarray[cnp.float32_t, ndim=3] out = np.empty((out_h, out_w, dim), dtype=np.float32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] x0 = np.empty(out_w, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] x1 = np.empty(out_w, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fxs = np.empty(out_w, dtype=np.float64)

    cdef Py_ssize_t i, j, c
    cdef double pos, f, wy0, wy1, wx0, wx1, v00, v01, v10, v11
    cdef long long i0, i1

    for j in range(out_w):
        pos = ((<double> j) + 0.5) * rx - 0.5
        f = floor(pos)
        fxs[j] = pos - f
        i0 = <long long> f
        i1 = i0 + 1
        if i0 < 0:
            i0 = 0
        elif i0 > w - 1:
            i0 = w - 1
        if i1 < 0:
            i1 = 0
        elif i1 > w - 1:
            i1 = w - 1
        x0[j] = i0
        x1[j] = i1

    cdef const cnp.float32_t[:, :, :] s = src
    cdef cnp.float32_t[:, :, :] o = out
    cdef cnp.int64_t[:] mx0 = x0
    cdef cnp.int64_t[:] mx1 = x1
    cdef cnp.float64_t[:] mfx = fxs
    cdef Py_ssize_t y0, y1

    with nogil:
        for i in range(out_h):
            pos = ((<double> i) + 0.5) * ry - 0.5
            f = floor(pos)
            wy1 = pos - f
            wy0 = 1.0 - wy1
            i0 = <long long> f
            i1 = i0 + 1
            if i0 < 0:
                i0 = 0
            elif i0 > h - 1:
                i0 = h - 1
            if i1 < 0:
                i1 = 0
            elif i1 > h - 1:
                i1 = h - 1
            y0 = i0
            y1 = i1
            for j in range(out_w):
                wx1 = mfx[j]
                wx0 = 1.0 - wx1
                for c in range(dim):
                    v00 = <double> s[y0, mx0[j], c]
                    v01 = <double> s[y0, mx1[j], c]
                    v10 = <double> s[y1, mx0[j], c]
                    v11 = <double> s[y1, mx1[j], c]
                    o[i, j, c] = <cnp.float32_t> (
                        wy0 * (wx0 * v00 + wx1 * v01) + wy1 * (wx0 * v10 + wx1 * v11)
                    )
    return out


def _as_u8(masks):
    # bool arrays share the uint8 layout, so viewing them is zero-copy
    m = np.ascontiguousarray(masks)
    return m.view(np.uint8) if m.dtype == np.bool_ else m.astype(np.uint8, copy=False)


def mask_means(cnp.ndarray[cnp.float32_t, ndim=3] feat, masks):
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] m = _as_u8(masks)
    cdef int k = m.shape[0]
    cdef int h = m.shape[1]
    cdef int w = m.shape[2]
    cdef int dim = feat.shape[2]
    cdef cnp.ndarray[cnp.float32_t, ndim=2] out = np.empty((k, dim), dtype=np.float32)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acc = np.empty(dim, dtype=np.float64)

    cdef const cnp.float32_t[:, :, :] fv = feat
    cdef const cnp.uint8_t[:, :, :] mv = m
    cdef cnp.float32_t[:, :] ov = out
    cdef cnp.float64_t[:] av = acc
    cdef Py_ssize_t ki, y, x, c
    cdef long long n

    with nogil:
        for ki in range(k):
            for c in range(dim):
                av[c] = 0.0
            n = 0
            for y in range(h):
                for x in range(w):
                    if mv[ki, y, x]:
                        n += 1
                        for c in range(dim):
                            av[c] += <double> fv[y, x, c]
            for c in range(dim):
                ov[ki, c] = <cnp.float32_t> (av[c] / (<double> n))
    return out


def assign_pixels(masks, cnp.ndarray[cnp.int64_t, ndim=1] paint_order):
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] m = _as_u8(masks)
    cdef int h = m.shape[1]
    cdef int w = m.shape[2]
    cdef cnp.ndarray[cnp.uint16_t, ndim=2] out = np.zeros((h, w), dtype=np.uint16)

    cdef const cnp.uint8_t[:, :, :] mv = m
    cdef cnp.uint16_t[:, :] ov = out
    cdef const cnp.int64_t[:] order = paint_order
    cdef const cnp.uint8_t* row
    cdef const cnp.uint8_t* hit
    cdef Py_ssize_t oi, y, x, x0, x1
    cdef long long k
    cdef cnp.uint16_t val

    with nogil:
        for oi in range(order.shape[0]):
            k = order[oi]
            val = <cnp.uint16_t> (k + 1)
            for y in range(h):
                # paint foreground runs; memchr skips blank spans at memcpy speed
                row = &mv[k, y, 0]
                x = 0
                while x < w:
                    hit = <const cnp.uint8_t*> memchr(row + x, 1, w - x)
                    if hit == NULL:
                        break
                    x0 = hit - row
                    hit = <const cnp.uint8_t*> memchr(row + x0, 0, w - x0)
                    x1 = (hit - row) if hit != NULL else w
                    for x in range(x0, x1):
                        ov[y, x] = val
                    x = x1
    return out


def back_project(
    cnp.ndarray[cnp.float32_t, ndim=2] depth,
    cnp.ndarray[cnp.uint16_t, ndim=2] index_map,
    double fx,
    double fy,
    double cx,
    double cy,
    cnp.ndarray[cnp.float64_t, ndim=2] pose,
    int stride,
):
    cdef int h = depth.shape[0]
    cdef int w = depth.shape[1]
    cdef long long cap = ((h + stride - 1) // stride) * (<long long> ((w + stride - 1) // stride))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts = np.empty((cap, 3), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] ids = np.empty(cap, dtype=np.int64)

    cdef const cnp.float32_t[:, :] dv = depth
    cdef const cnp.uint16_t[:, :] iv = index_map
    cdef cnp.float64_t[:, :] pv = pts
    cdef cnp.int64_t[:] idv = ids
    cdef double r00 = pose[0, 0], r01 = pose[0, 1], r02 = pose[0, 2], t0 = pose[0, 3]
    cdef double r10 = pose[1, 0], r11 = pose[1, 1], r12 = pose[1, 2], t1 = pose[1, 3]
    cdef double r20 = pose[2, 0], r21 = pose[2, 1], r22 = pose[2, 2], t2 = pose[2, 3]

    cdef Py_ssize_t v, u
    cdef long long n = 0, total = 0
    cdef double d, x, y, z

    with nogil:
        v = 0
        while v < h:
            u = 0
            while u < w:
                total += 1
                d = <double> dv[v, u]
                if isfinite(d) and d > 0.0 and iv[v, u] != 0:
                    x = ((<double> u) + 0.5 - cx) * d / fx
                    y = ((<double> v) + 0.5 - cy) * d / fy
                    z = d
                    pv[n, 0] = r00 * x + r01 * y + r02 * z + t0
                    pv[n, 1] = r10 * x + r11 * y + r12 * z + t1
                    pv[n, 2] = r20 * x + r21 * y + r22 * z + t2
                    idv[n] = <long long> iv[v, u]
                    n += 1
                u += stride
            v += stride
    return pts[:n].copy(), ids[:n].copy(), int(total - n)
