"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same floating-point evaluation order, same results.
"""

import math

import numpy as np


def im2col(x, k):
    n_ch, n_img, h, w = x.shape
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    cols = np.empty((n_ch, k, k, n_img, h, w), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, :, i:i + h, j:j + w]
    return cols.reshape(n_ch * k * k, n_img * h * w)


def col2im(cols, n_ch, n_img, h, w, k):
    p = k // 2
    cols6 = cols.reshape(n_ch, k, k, n_img, h, w)
    dxp = np.zeros((n_ch, n_img, h + 2 * p, w + 2 * p), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + h, j:j + w] += cols6[:, i, j]
    return np.ascontiguousarray(dxp[:, :, p:p + h, p:p + w])


def maxpool2_forward(x):
    n_img, n_ch, h, w = x.shape
    ho, wo = h // 2, w // 2
    x = x[:, :, :2 * ho, :2 * wo]
    windows = np.stack(
        [x[:, :, 0::2, 0::2], x[:, :, 0::2, 1::2], x[:, :, 1::2, 0::2], x[:, :, 1::2, 1::2]],
        axis=-1,
    )
    # argmax returns the first maximum, matching the strict '>' scan
    idx = np.argmax(windows, axis=-1).astype(np.int64)
    out = np.take_along_axis(windows, idx[..., None], axis=-1)[..., 0]
    return np.ascontiguousarray(out), idx


def maxpool2_backward(dout, idx, h, w):
    n_img, n_ch, ho, wo = dout.shape
    dx = np.zeros((n_img, n_ch, h, w), dtype=np.float64)
    for q in range(4):
        mask = idx == q
        dx[:, :, q // 2:2 * ho:2, q % 2:2 * wo:2][mask] = dout[mask]
    return dx


def _source(n_out, n_in):
    scale = n_in / n_out
    s = (np.arange(n_out) + 0.5) * scale - 0.5
    s = np.clip(s, 0.0, n_in - 1)
    i0 = np.floor(s).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    return i0, i1, s - i0


def resize_bilinear(img, out_h, out_w):
    in_h, in_w, _ = img.shape
    y0, y1, fy = _source(out_h, in_h)
    x0, x1, fx = _source(out_w, in_w)
    src = img.astype(np.float64)
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = (1.0 - fx) * src[y0][:, x0] + fx * src[y0][:, x1]
    bot = (1.0 - fx) * src[y1][:, x0] + fx * src[y1][:, x1]
    v = np.floor((1.0 - fy) * top + fy * bot + 0.5)
    return np.clip(v, 0.0, 255.0).astype(np.uint8)


def rotate_bilinear(img, angle):
    h, w = img.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ca, sa = math.cos(angle), math.sin(angle)
    dy = (np.arange(h) - cy)[:, None]
    dx = (np.arange(w) - cx)[None, :]
    sx = np.clip(ca * dx + sa * dy + cx, 0.0, w - 1)
    sy = np.clip(-sa * dx + ca * dy + cy, 0.0, h - 1)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


def split_scan(xs, ys, min_leaf, tie_rtol=1e-12):
    n = xs.shape[0]
    if n < 2:
        return 0.0, -1, 0.0
    cs = np.cumsum(ys)
    total = cs[-1]
    nl = np.arange(1, n)
    run = cs[:-1]
    right = total - run
    score = run * run / nl + right * right / (n - nl)
    ok = (nl >= min_leaf) & (n - nl >= min_leaf) & (xs[:-1] < xs[1:])
    if not ok.any():
        return 0.0, -1, 0.0
    cand = np.flatnonzero(ok)
    best = score[cand].max()
    # first split within tolerance of the maximum
    first = cand[np.flatnonzero(score[cand] >= best - tie_rtol * best)[0]]
    k = int(first + 1)
    return float(score[first]), k, float((xs[k - 1] + xs[k]) / 2.0)
