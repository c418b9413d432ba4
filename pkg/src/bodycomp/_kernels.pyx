# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin in ``_kernels_py`` that evaluates the
same floating-point expressions in the same order, so both backends return
bit-identical results.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, cos, sin

cnp.import_array()


def im2col(const double[:, :, :, ::1] x, int k):
    """Channel-major (C, N, H, W) input -> (C*k*k, N*H*W) patch matrix, zero 'same' padding."""
    cdef Py_ssize_t n_ch = x.shape[0], n_img = x.shape[1]
    cdef Py_ssize_t h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t p = k // 2
    cdef Py_ssize_t c, i, j, n, r, s, rr, ss, row, col
    out_arr = np.zeros((n_ch * k * k, n_img * h * w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for c in range(n_ch):
        for i in range(k):
            for j in range(k):
                row = (c * k + i) * k + j
                for n in range(n_img):
                    for r in range(h):
                        rr = r + i - p
                        if rr < 0 or rr >= h:
                            continue
                        col = (n * h + r) * w
                        for s in range(w):
                            ss = s + j - p
                            if 0 <= ss < w:
                                out[row, col + s] = x[c, n, rr, ss]
    return out_arr


def col2im(const double[:, ::1] cols, Py_ssize_t n_ch, Py_ssize_t n_img,
           Py_ssize_t h, Py_ssize_t w, int k):
    """Adjoint of im2col; returns (C, N, H, W)."""
    cdef Py_ssize_t p = k // 2
    cdef Py_ssize_t c, i, j, n, r, s, rr, ss, row, col
    out_arr = np.zeros((n_ch, n_img, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    for c in range(n_ch):
        for i in range(k):
            for j in range(k):
                row = (c * k + i) * k + j
                for n in range(n_img):
                    for r in range(h):
                        rr = r + i - p
                        if rr < 0 or rr >= h:
                            continue
                        col = (n * h + r) * w
                        for s in range(w):
                            ss = s + j - p
                            if 0 <= ss < w:
                                out[c, n, rr, ss] += cols[row, col + s]
    return out_arr


def maxpool2_forward(const double[:, :, :, ::1] x):
    cdef Py_ssize_t n_img = x.shape[0], n_ch = x.shape[1]
    cdef Py_ssize_t ho = x.shape[2] // 2, wo = x.shape[3] // 2
    cdef Py_ssize_t n, c, r, s, q
    cdef double best, v
    cdef long long arg
    out_arr = np.empty((n_img, n_ch, ho, wo), dtype=np.float64)
    idx_arr = np.empty((n_img, n_ch, ho, wo), dtype=np.int64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef long long[:, :, :, ::1] idx = idx_arr
    for n in range(n_img):
        for c in range(n_ch):
            for r in range(ho):
                for s in range(wo):
                    best = x[n, c, 2 * r, 2 * s]
                    arg = 0
                    for q in range(1, 4):
                        v = x[n, c, 2 * r + q // 2, 2 * s + q % 2]
                        if v > best:
                            best = v
                            arg = q
                    out[n, c, r, s] = best
                    idx[n, c, r, s] = arg
    return out_arr, idx_arr


def maxpool2_backward(const double[:, :, :, ::1] dout,
                      const long long[:, :, :, ::1] idx,
                      Py_ssize_t h, Py_ssize_t w):
    cdef Py_ssize_t n_img = dout.shape[0], n_ch = dout.shape[1]
    cdef Py_ssize_t ho = dout.shape[2], wo = dout.shape[3]
    cdef Py_ssize_t n, c, r, s
    cdef long long q
    dx_arr = np.zeros((n_img, n_ch, h, w), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = dx_arr
    for n in range(n_img):
        for c in range(n_ch):
            for r in range(ho):
                for s in range(wo):
                    q = idx[n, c, r, s]
                    dx[n, c, 2 * r + q // 2, 2 * s + q % 2] = dout[n, c, r, s]
    return dx_arr


cdef inline void _source(Py_ssize_t d, double scale, Py_ssize_t n_in,
                         Py_ssize_t* i0, Py_ssize_t* i1, double* f) nogil:
    cdef double s = (d + 0.5) * scale - 0.5
    if s < 0.0:
        s = 0.0
    if s > n_in - 1:
        s = n_in - 1
    i0[0] = <Py_ssize_t>floor(s)
    i1[0] = i0[0] + 1 if i0[0] + 1 < n_in else n_in - 1
    f[0] = s - i0[0]


def resize_bilinear(const unsigned char[:, :, ::1] img, Py_ssize_t out_h, Py_ssize_t out_w):
    cdef Py_ssize_t in_h = img.shape[0], in_w = img.shape[1], n_ch = img.shape[2]
    cdef double sy_scale = <double>in_h / <double>out_h
    cdef double sx_scale = <double>in_w / <double>out_w
    cdef Py_ssize_t r, s, c, y0, y1, x0, x1
    cdef double fy, fx, top, bot, v
    out_arr = np.empty((out_h, out_w, n_ch), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    for r in range(out_h):
        _source(r, sy_scale, in_h, &y0, &y1, &fy)
        for s in range(out_w):
            _source(s, sx_scale, in_w, &x0, &x1, &fx)
            for c in range(n_ch):
                top = (1.0 - fx) * img[y0, x0, c] + fx * img[y0, x1, c]
                bot = (1.0 - fx) * img[y1, x0, c] + fx * img[y1, x1, c]
                v = floor((1.0 - fy) * top + fy * bot + 0.5)
                if v < 0.0:
                    v = 0.0
                if v > 255.0:
                    v = 255.0
                out[r, s, c] = <unsigned char>v
    return out_arr


def rotate_bilinear(const double[:, ::1] img, double angle):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0
    cdef double ca = cos(angle), sa = sin(angle)
    cdef Py_ssize_t r, s, y0, y1, x0, x1
    cdef double dy, dx, sy, sx, fy, fx, top, bot
    out_arr = np.empty((h, w), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for r in range(h):
        dy = r - cy
        for s in range(w):
            dx = s - cx
            sx = ca * dx + sa * dy + cx
            sy = -sa * dx + ca * dy + cy
            if sx < 0.0:
                sx = 0.0
            if sx > w - 1:
                sx = w - 1
            if sy < 0.0:
                sy = 0.0
            if sy > h - 1:
                sy = h - 1
            x0 = <Py_ssize_t>floor(sx)
            y0 = <Py_ssize_t>floor(sy)
            x1 = x0 + 1 if x0 + 1 < w else w - 1
            y1 = y0 + 1 if y0 + 1 < h else h - 1
            fx = sx - x0
            fy = sy - y0
            top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
            bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
            out[r, s] = (1.0 - fy) * top + fy * bot
    return out_arr


def split_scan(const double[::1] xs, const double[::1] ys, Py_ssize_t min_leaf, double tie_rtol=1e-12):
    """Best prefix split of x-sorted targets; returns (score, n_left, threshold).

    score is sum_left**2/n_left + sum_right**2/n_right (maximized).  Scores
    within ``tie_rtol`` of the maximum count as ties and the smallest n_left
    wins.  n_left is -1 when no admissible split exists.
    """
    cdef Py_ssize_t n = xs.shape[0], kk
    cdef double total = 0.0, run, right, score
    cdef double best = -1.0, floor
    cdef Py_ssize_t best_k = -1
    for kk in range(n):
        total += ys[kk]
    # pass 1: maximum score
    run = 0.0
    for kk in range(1, n):
        run += ys[kk - 1]
        if kk < min_leaf or n - kk < min_leaf or not (xs[kk - 1] < xs[kk]):
            continue
        right = total - run
        score = run * run / kk + right * right / (n - kk)
        if best_k < 0 or score > best:
            best = score
            best_k = kk
    if best_k < 0:
        return 0.0, -1, 0.0
    # pass 2: first split within tolerance of the maximum
    floor = best - tie_rtol * best
    run = 0.0
    for kk in range(1, n):
        run += ys[kk - 1]
        if kk < min_leaf or n - kk < min_leaf or not (xs[kk - 1] < xs[kk]):
            continue
        right = total - run
        score = run * run / kk + right * right / (n - kk)
        if score >= floor:
            return score, kk, (xs[kk - 1] + xs[kk]) / 2.0
    return best, best_k, (xs[best_k - 1] + xs[best_k]) / 2.0
