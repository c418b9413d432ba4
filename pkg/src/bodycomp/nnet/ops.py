"""Layer primitives on float64 numpy arrays.

Each ``*_forward`` returns ``(out, cache)``; the matching ``*_backward`` maps
the upstream gradient and cache to input and parameter gradients.  Feature
maps are channel-major (C, N, H, W) so a convolution is one gemm whose output
is already laid out for the next layer.
"""

import numpy as np

from .. import kernels


class NonFiniteError(FloatingPointError):
    """A forward or backward value became NaN or infinite."""


def check_finite(arr, where):
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite value in {where}")
    return arr


def conv2d_forward(x, w, b):
    """Stride-1 convolution with zero 'same' padding (odd kernel)."""
    c, n, h, wd = x.shape
    f, c_w, k, _ = w.shape
    if c_w != c:
        raise ValueError(f"conv expects {c_w} input channels, got {c}")
    cols = kernels.im2col(np.ascontiguousarray(x), k)
    w2 = w.reshape(f, -1)
    out = w2 @ cols
    out += b[:, None]
    return out.reshape(f, n, h, wd), (x.shape, cols, w2, k)


def conv2d_backward(dout, cache, need_dx=True):
    (c, n, h, wd), cols, w2, k = cache
    f = w2.shape[0]
    d2 = np.ascontiguousarray(dout).reshape(f, -1)
    dw = (d2 @ cols.T).reshape(f, c, k, k)
    db = d2.sum(axis=1)
    dx = None
    if need_dx:
        dx = kernels.col2im(np.ascontiguousarray(w2.T @ d2), c, n, h, wd, k)
    return dx, dw, db


def relu_forward(x):
    out = np.maximum(x, 0.0)
    return out, out > 0


def relu_backward(dout, mask):
    # subgradient at exactly 0 is 0
    return dout * mask


def maxpool_forward(x):
    out, idx = kernels.maxpool2_forward(np.ascontiguousarray(x))
    return out, (idx, x.shape[2], x.shape[3])


def maxpool_backward(dout, cache):
    idx, h, w = cache
    return kernels.maxpool2_backward(np.ascontiguousarray(dout), idx, h, w)


def gap_forward(x):
    """(C, N, H, W) -> (N, C) spatial mean."""
    return np.ascontiguousarray(x.mean(axis=(2, 3)).T), x.shape


def gap_backward(dout, shape):
    c, n, h, w = shape
    return np.broadcast_to((dout.T / (h * w))[:, :, None, None], shape).copy()


def dense_forward(x, w, b):
    return x @ w + b, x


def dense_backward(dout, x, w):
    return dout @ w.T, x.T @ dout, dout.sum(axis=0)
