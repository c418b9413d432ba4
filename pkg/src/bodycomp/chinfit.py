"""Least-squares polynomial fit of the chin contour.

Points are first mapped into the face box frame (u in [-1, 1] across the
box, v in [0, 1] down the box) so the coefficients do not depend on image
resolution.
"""

from dataclasses import dataclass

import numpy as np

DEFAULT_DEGREE = 2
MAX_DEGREE = 4


class ChinFitError(ValueError):
    pass


@dataclass(frozen=True)
class ChinFit:
    degree: int
    coefficients: tuple  # c0..c_degree, lowest power first
    rmse: float

    def __post_init__(self):
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("coefficient count must equal degree + 1")

    def evaluate(self, u):
        u = np.asarray(u, dtype=np.float64)
        return np.polynomial.polynomial.polyval(u, self.coefficients)


def normalize_points(points, bbox):
    """Map pixel points into the (u, v) frame of ``bbox``."""
    x0, y0, w, h = (bbox.x, bbox.y, bbox.w, bbox.h) if hasattr(bbox, "x") else bbox
    if w < 1 or h < 1:
        raise ChinFitError(f"degenerate bbox {w}x{h}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    u = 2.0 * (pts[:, 0] - x0) / w - 1.0
    v = (pts[:, 1] - y0) / h
    return np.column_stack([u, v])


def denormalize_points(uv, bbox):
    x0, y0, w, h = (bbox.x, bbox.y, bbox.w, bbox.h) if hasattr(bbox, "x") else bbox
    uv = np.asarray(uv, dtype=np.float64).reshape(-1, 2)
    x = (uv[:, 0] + 1.0) * w / 2.0 + x0
    y = uv[:, 1] * h + y0
    return np.column_stack([x, y])


def fit_polynomial(points, degree=DEFAULT_DEGREE):
    """Fit v = sum_k c_k u**k by Householder QR of the Vandermonde matrix.

    Raises ChinFitError when there are too few points or the design matrix
    is rank deficient (for instance when every u is the same).
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise ChinFitError(f"degree must be in 1..{MAX_DEGREE}, got {degree}")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(pts) < degree + 1:
        raise ChinFitError(f"need at least {degree + 1} points for degree {degree}, got {len(pts)}")
    u, v = pts[:, 0], pts[:, 1]
    X = np.vander(u, degree + 1, increasing=True)
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0):
        raise ChinFitError("rank-deficient design matrix (u values not distinct enough)")
    coef = np.linalg.solve(r, q.T @ v)
    resid = v - X @ coef
    rmse = float(np.sqrt(np.mean(resid * resid)))
    return ChinFit(degree, tuple(float(c) for c in coef), rmse)
