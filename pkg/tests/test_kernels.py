import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bodycomp import kernels

py = kernels.backend_module("python")
try:
    cy = kernels.backend_module("cython")
except ImportError:  # extension not built
    cy = None

needs_cython = pytest.mark.skipif(cy is None, reason="compiled kernels not built")


def same(a, b):
    if isinstance(a, tuple):
        return len(a) == len(b) and all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
    return a == b


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")


def test_env_var_forces_fallback():
    env = dict(os.environ, BODYCOMP_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import bodycomp.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


def test_im2col_matches_direct_convolution(rng):
    x = rng.normal(size=(2, 3, 5, 6))
    w = rng.normal(size=(4, 2, 3, 3))
    out = (w.reshape(4, -1) @ py.im2col(x, 3)).reshape(4, 3, 5, 6)
    pad = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    ref = np.zeros_like(out)
    for f in range(4):
        for i in range(5):
            for j in range(6):
                ref[f, :, i, j] = np.einsum("cnkl,ckl->n", pad[:, :, i:i + 3, j:j + 3], w[f])
    assert np.allclose(out, ref, atol=1e-12)


def test_col2im_is_adjoint_of_im2col(rng):
    x = rng.normal(size=(2, 2, 4, 5))
    cols = rng.normal(size=(2 * 9, 2 * 4 * 5))
    lhs = np.sum(py.im2col(x, 3) * cols)
    rhs = np.sum(x * py.col2im(cols, 2, 2, 4, 5, 3))
    assert abs(lhs - rhs) <= 1e-10


def test_maxpool_first_maximum_wins():
    x = np.zeros((1, 1, 2, 2))
    out, idx = py.maxpool2_forward(x)
    assert out.ravel().tolist() == [0.0] and idx.ravel().tolist() == [0]
    back = py.maxpool2_backward(np.ones((1, 1, 1, 1)), idx, 2, 2)
    assert back.ravel().tolist() == [1.0, 0.0, 0.0, 0.0]


def test_split_scan_ties_take_lowest_threshold():
    xs = np.array([0.0, 1.0, 2.0, 3.0])
    ys = np.array([1.0, -1.0, -1.0, 1.0])  # n_left = 1 and 3 score the same
    score, k, thr = py.split_scan(xs, ys, 1)
    assert (k, thr) == (1, 0.5)


def test_split_scan_no_admissible_split():
    assert py.split_scan(np.zeros(5), np.arange(5.0), 1)[1] == -1
    assert py.split_scan(np.arange(3.0), np.arange(3.0), 2)[1] == -1


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 3), st.integers(1, 3), st.integers(1, 9), st.integers(1, 9), st.sampled_from([1, 3, 5]))
def test_conv_kernels_bit_identical(seed, c, n, h, w, k):
    r = np.random.default_rng(seed)
    x = r.normal(size=(c, n, h, w))
    assert same(py.im2col(x, k), cy.im2col(x, k))
    cols = r.normal(size=(c * k * k, n * h * w))
    assert same(py.col2im(cols, c, n, h, w, k), cy.col2im(cols, c, n, h, w, k))


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 3), st.integers(1, 3), st.integers(1, 6), st.integers(1, 6), st.booleans())
def test_pool_kernels_bit_identical(seed, c, n, h2, w2, quantized):
    r = np.random.default_rng(seed)
    x = r.normal(size=(c, n, 2 * h2, 2 * w2))
    if quantized:
        x = np.round(x)  # many ties
    a, b = py.maxpool2_forward(x), cy.maxpool2_forward(x)
    assert same(a, b)
    d = r.normal(size=a[0].shape)
    assert same(py.maxpool2_backward(d, a[1], 2 * h2, 2 * w2), cy.maxpool2_backward(d, b[1], 2 * h2, 2 * w2))


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 12), st.integers(1, 12), st.integers(1, 20), st.integers(1, 20), st.sampled_from([1, 3]))
def test_resize_bit_identical(seed, h, w, oh, ow, c):
    img = np.random.default_rng(seed).integers(0, 256, size=(h, w, c), dtype=np.uint8)
    assert same(py.resize_bilinear(img, oh, ow), cy.resize_bilinear(img, oh, ow))


@needs_cython
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 20), st.integers(1, 20), st.floats(-0.5, 0.5))
def test_rotate_bit_identical(seed, h, w, angle):
    img = np.random.default_rng(seed).uniform(0, 255, size=(h, w))
    assert same(py.rotate_bilinear(img, angle), cy.rotate_bilinear(img, angle))


@needs_cython
@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 30), st.integers(1, 5), st.booleans())
def test_split_scan_bit_identical(seed, n, min_leaf, integer):
    r = np.random.default_rng(seed)
    xs = np.sort(r.integers(0, 5, n).astype(float) if integer else r.normal(size=n))
    ys = r.integers(-3, 4, n).astype(float) if integer else r.normal(size=n)
    assert same(py.split_scan(xs, ys, min_leaf), cy.split_scan(xs, ys, min_leaf))
