"""Ellipse fitting and geometry.

The fit minimizes the gradient-weighted (approximate mean square) algebraic
distance of the conic, solved as a generalized eigenproblem after centering
and isotropic scaling of the input points.  If the minimizer is not of
elliptic type, the ellipse-constrained direct least-squares fit is used
instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateInputError, NoTangentError


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float  # semi-major
    b: float  # semi-minor
    theta_deg: float  # major-axis angle from +x toward +y, in [0, 180)

    def __post_init__(self):
        vals = (self.cx, self.cy, self.a, self.b, self.theta_deg)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"ellipse parameters must be finite: {vals}")
        if not (self.a >= self.b > 0):
            raise ValueError(f"need a >= b > 0, got a={self.a}, b={self.b}")
        if not (0.0 <= self.theta_deg < 180.0):
            raise ValueError(f"theta must lie in [0, 180), got {self.theta_deg}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def to_local(self, pts: np.ndarray) -> np.ndarray:
        """Rotate/translate world points into the axis-aligned ellipse frame."""
        t = math.radians(self.theta_deg)
        c, s = math.cos(t), math.sin(t)
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64)) - (self.cx, self.cy)
        return pts @ np.array([[c, -s], [s, c]])

    def from_local(self, pts: np.ndarray) -> np.ndarray:
        t = math.radians(self.theta_deg)
        c, s = math.cos(t), math.sin(t)
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return pts @ np.array([[c, s], [-s, c]]) + (self.cx, self.cy)

    def quad_form(self, pts: np.ndarray) -> np.ndarray:
        """(x'/a)^2 + (y'/b)^2 for each point; <= 1 means inside or on."""
        loc = self.to_local(pts)
        return (loc[:, 0] / self.a) ** 2 + (loc[:, 1] / self.b) ** 2


def _design(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])


def _taubin_conic(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = _design(x, y)
    m = z.T @ z
    zx = np.column_stack([2 * x, y, np.zeros_like(x), np.ones_like(x), np.zeros_like(x), np.zeros_like(x)])
    zy = np.column_stack([np.zeros_like(x), x, 2 * y, np.zeros_like(x), np.ones_like(x), np.zeros_like(x)])
    n = zx.T @ zx + zy.T @ zy
    w, v = scipy.linalg.eig(m, n)
    w = np.real(w)
    finite = np.isfinite(w) & (w > -1e-9)
    if not finite.any():
        raise DegenerateInputError("gradient-weighted fit has no admissible eigenvalue")
    idx = np.flatnonzero(finite)[np.argmin(w[finite])]
    return np.real(v[:, idx])


def _direct_conic(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Ellipse-constrained direct least-squares fit (4AC - B^2 = 1)."""
    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        raise DegenerateInputError("rank-deficient scatter matrix")
    m = s1 + s2 @ t
    c_inv = np.array([[0.0, 0.0, 0.5], [0.0, -1.0, 0.0], [0.5, 0.0, 0.0]])
    w, v = np.linalg.eig(c_inv @ m)
    best = None
    for i in range(3):
        a1 = np.real(v[:, i])
        cond = 4 * a1[0] * a1[2] - a1[1] ** 2
        if cond > 0:
            best = a1
            break
    if best is None:
        raise DegenerateInputError("no elliptic solution from the direct fit")
    return np.concatenate([best, t @ best])


def _conic_matrix(c: np.ndarray) -> np.ndarray:
    a, b, cc, d, e, f = c
    return np.array([[a, b / 2, d / 2], [b / 2, cc, e / 2], [d / 2, e / 2, f]])


def _conic_to_ellipse(c: np.ndarray) -> Ellipse:
    a, b, cc, d, e, f = c
    det = b * b - 4 * a * cc
    if det >= 0:
        raise DegenerateInputError("conic is not of elliptic type")
    cx = (2 * cc * d - b * e) / det
    cy = (2 * a * e - b * d) / det
    # constant term after translating to the center
    f0 = a * cx * cx + b * cx * cy + cc * cy * cy + d * cx + e * cy + f
    q = np.array([[a, b / 2], [b / 2, cc]])
    evals, evecs = np.linalg.eigh(q)
    axes2 = -f0 / evals
    if not np.all(axes2 > 0):
        raise DegenerateInputError("conic has no real elliptic axes")
    axes = np.sqrt(axes2)
    major = int(np.argmax(axes))
    vx, vy = evecs[:, major]
    theta = math.degrees(math.atan2(vy, vx)) % 180.0
    if theta >= 180.0:
        theta = 0.0
    return Ellipse(float(cx), float(cy), float(axes[major]), float(axes[1 - major]), float(theta))


def fit_ams(points: np.ndarray) -> Ellipse:
    """Fit an ellipse to (N, 2) points by the approximate-mean-square conic fit."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] < 5:
        raise DegenerateInputError(f"need at least 5 points, got {pts.shape[0]}")
    mean = pts.mean(axis=0)
    centered = pts - mean
    rms = np.sqrt((centered**2).sum(axis=1).mean())
    if rms < 1e-12:
        raise DegenerateInputError("all points coincide")
    scale = math.sqrt(2.0) / rms
    xn = centered[:, 0] * scale
    yn = centered[:, 1] * scale
    try:
        conic = _taubin_conic(xn, yn)
        if conic[1] ** 2 - 4 * conic[0] * conic[2] >= 0:
            conic = _direct_conic(xn, yn)
    except DegenerateInputError:
        conic = _direct_conic(xn, yn)
    # undo normalization: x_n = (x - mx) * s, y_n = (y - my) * s
    t = np.array(
        [
            [scale, 0.0, -scale * mean[0]],
            [0.0, scale, -scale * mean[1]],
            [0.0, 0.0, 1.0],
        ]
    )
    cm = t.T @ _conic_matrix(conic) @ t
    denorm = np.array(
        [cm[0, 0], 2 * cm[0, 1], cm[1, 1], 2 * cm[0, 2], 2 * cm[1, 2], cm[2, 2]]
    )
    return _conic_to_ellipse(denorm)


def contains(e: Ellipse, p) -> bool:
    """True iff the point lies inside or on the ellipse."""
    return bool(e.quad_form(np.asarray(p, dtype=np.float64).reshape(1, 2))[0] <= 1.0)


def rasterize(e: Ellipse, width: int, height: int) -> np.ndarray:
    """Mask of pixels whose centers (x + 0.5, y + 0.5) lie inside the ellipse."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be >= 1")
    # evaluate only in the bounding box of the ellipse
    r = e.a
    x0 = max(0, int(math.floor(e.cx - r - 1)))
    x1 = min(width, int(math.ceil(e.cx + r + 1)))
    y0 = max(0, int(math.floor(e.cy - r - 1)))
    y1 = min(height, int(math.ceil(e.cy + r + 1)))
    out = np.zeros((height, width), dtype=np.uint8)
    if x0 >= x1 or y0 >= y1:
        return out
    xs = np.arange(x0, x1) + 0.5
    ys = np.arange(y0, y1) + 0.5
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    inside = e.quad_form(pts) <= 1.0
    out[y0:y1, x0:x1] = inside.reshape(y1 - y0, x1 - x0)
    return out


def external_tangents(e: Ellipse, p) -> tuple[np.ndarray, np.ndarray]:
    """Tangent contact points on the ellipse as seen from an external point.

    Solved on the unit circle after the affine map that normalizes the
    ellipse; returned with the smaller local polar angle first.
    """
    p = np.asarray(p, dtype=np.float64).reshape(2)
    loc = e.to_local(p.reshape(1, 2))[0]
    q = np.array([loc[0] / e.a, loc[1] / e.b])
    d2 = float(q @ q)
    if d2 <= 1.0 + 1e-12:
        raise NoTangentError("point is inside or on the ellipse")
    # unit-circle tangency: t = q/d2 +/- sqrt(d2-1)/d2 * perp(q)
    root = math.sqrt(d2 - 1.0) / d2
    perp = np.array([-q[1], q[0]])
    t1 = q / d2 + root * perp
    t2 = q / d2 - root * perp
    cand = sorted([t1, t2], key=lambda t: math.atan2(t[1], t[0]))
    out = []
    for t in cand:
        local = np.array([t[0] * e.a, t[1] * e.b])
        out.append(e.from_local(local.reshape(1, 2))[0])
    return out[0], out[1]
