# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-pixel kernels; see shipprop._kernels_np for the contract."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def gradient_field(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] av = a
    cdef Py_ssize_t h = av.shape[0], w = av.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gx = np.zeros((h, w))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] gy = np.zeros((h, w))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mag = np.zeros((h, w))
    cdef Py_ssize_t r, c
    cdef double vx, vy
    for r in range(h - 1):
        for c in range(w - 1):
            vx = (av[r, c + 1] + av[r + 1, c + 1] - av[r, c] - av[r + 1, c]) / 2.0
            vy = (av[r + 1, c] + av[r + 1, c + 1] - av[r, c] - av[r, c + 1]) / 2.0
            gx[r, c] = vx
            gy[r, c] = vy
            mag[r, c] = sqrt(vx * vx + vy * vy)
    return np.asarray(gx), np.asarray(gy), np.asarray(mag)


def erode3(mask, int iterations):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out
    cdef Py_ssize_t r, c, rr, cc
    cdef int it, keep
    for it in range(iterations):
        out = np.zeros((h, w), dtype=np.uint8)
        for r in range(h):
            for c in range(w):
                if not m[r, c]:
                    continue
                keep = 1
                if r == 0 or c == 0 or r == h - 1 or c == w - 1:
                    keep = 0  # out-of-bounds neighbours count as background
                else:
                    for rr in range(r - 1, r + 2):
                        for cc in range(c - 1, c + 2):
                            if not m[rr, cc]:
                                keep = 0
                                break
                        if not keep:
                            break
                out[r, c] = keep
        m = out
    return np.asarray(m).astype(bool)


def dilate3(mask, int iterations):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out
    cdef Py_ssize_t r, c, rr, cc, r0, r1, c0, c1
    cdef int it
    for it in range(iterations):
        out = np.zeros((h, w), dtype=np.uint8)
        for r in range(h):
            for c in range(w):
                if not m[r, c]:
                    continue
                r0 = r - 1 if r > 0 else 0
                r1 = r + 2 if r < h - 1 else h
                c0 = c - 1 if c > 0 else 0
                c1 = c + 2 if c < w - 1 else w
                for rr in range(r0, r1):
                    for cc in range(c0, c1):
                        out[rr, cc] = 1
        m = out
    return np.asarray(m).astype(bool)


def label_components(mask):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2] labels = np.zeros((h, w), dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] stack = np.empty(h * w, dtype=np.int64)
    cdef Py_ssize_t r0, c0, r, c, rr, cc, top
    cdef int count = 0
    for r0 in range(h):
        for c0 in range(w):
            if not m[r0, c0] or labels[r0, c0]:
                continue
            count += 1
            top = 0
            stack[top] = r0 * w + c0
            top += 1
            labels[r0, c0] = count
            while top > 0:
                top -= 1
                r = stack[top] // w
                c = stack[top] % w
                for rr in range(r - 1 if r > 0 else 0, r + 2 if r < h - 1 else h):
                    for cc in range(c - 1 if c > 0 else 0, c + 2 if c < w - 1 else w):
                        if m[rr, cc] and not labels[rr, cc]:
                            labels[rr, cc] = count
                            stack[top] = rr * w + cc
                            top += 1
    return np.asarray(labels), count


def local_mean_sd(a, int window):
    a = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] av = a
    cdef Py_ssize_t h = av.shape[0], w = av.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s1 = np.zeros((h + 1, w + 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s2 = np.zeros((h + 1, w + 1))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] mean = np.zeros((h, w))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sd = np.zeros((h, w))
    cdef Py_ssize_t r, c, r0, r1, c0, c1
    cdef int half = window // 2
    cdef double v, n, b1, b2, mu, var
    for r in range(h):
        for c in range(w):
            v = av[r, c]
            s1[r + 1, c + 1] = v + s1[r, c + 1] + s1[r + 1, c] - s1[r, c]
            s2[r + 1, c + 1] = v * v + s2[r, c + 1] + s2[r + 1, c] - s2[r, c]
    for r in range(h):
        r0 = r - half if r - half > 0 else 0
        r1 = r + half + 1 if r + half + 1 < h else h
        for c in range(w):
            c0 = c - half if c - half > 0 else 0
            c1 = c + half + 1 if c + half + 1 < w else w
            n = <double>((r1 - r0) * (c1 - c0))
            b1 = s1[r1, c1] - s1[r0, c1] - s1[r1, c0] + s1[r0, c0]
            b2 = s2[r1, c1] - s2[r0, c1] - s2[r1, c0] + s2[r0, c0]
            mu = b1 / n
            var = b2 / n - mu * mu
            if var < 0.0:
                var = 0.0
            mean[r, c] = mu
            sd[r, c] = sqrt(var)
    return np.asarray(mean), np.asarray(sd)
