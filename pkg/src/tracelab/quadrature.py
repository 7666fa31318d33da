"""Adaptive Gauss-Legendre quadrature on intervals and rectangles.

Panels are processed breadth-first in batches so that the integrand is
always called on large vectorized point sets.  A panel is accepted when
the two-level estimate (one rule versus the rule on both halves) meets
its share of the global tolerance; otherwise it is split.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import QuadratureFailure

_RULES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_rule(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if n not in _RULES:
        x, w = leggauss(n)
        _RULES[n] = (x, w)
    return _RULES[n]


def _panel_values_1d(f, lo, hi, order):
    # lo, hi: arrays of panel bounds; returns per-panel integrals
    x, w = gauss_rule(order)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    vals = f(pts.reshape(-1)).reshape(pts.shape)
    return half * (vals @ w)


def integrate(f, a, b, tol=1e-10, rel_tol=0.0, max_depth=40, order=12,
              breakpoints=()):
    """Integrate a vectorized callable f over [a, b].

    ``tol`` is an absolute tolerance for the whole interval, distributed
    over panels by length.  ``breakpoints`` lists interior points where the
    integrand may lose smoothness; panels never straddle them.
    """
    a = float(a)
    b = float(b)
    if a == b:
        return 0.0
    cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    lo = np.array(cuts[:-1])
    hi = np.array(cuts[1:])
    total_len = b - a
    result = 0.0
    for depth in range(max_depth + 1):
        if lo.size == 0:
            return result
        coarse = _panel_values_1d(f, lo, hi, order)
        mid = 0.5 * (lo + hi)
        left = _panel_values_1d(f, lo, mid, order)
        right = _panel_values_1d(f, mid, hi, order)
        fine = left + right
        err = np.abs(fine - coarse)
        budget = tol * (hi - lo) / total_len + rel_tol * np.abs(fine)
        done = err <= np.maximum(budget, 1e-300)
        result += fine[done].sum()
        lo, hi, mid = lo[~done], hi[~done], mid[~done]
        lo = np.concatenate([lo, mid])
        hi = np.concatenate([mid, hi])
        order_pairs = np.argsort(lo, kind="stable")
        lo, hi = lo[order_pairs], hi[order_pairs]
    raise QuadratureFailure(
        f"1d quadrature did not converge within depth {max_depth}")


def _panel_values_2d(f, boxes, order):
    x, w = gauss_rule(order)
    xlo, xhi, ylo, yhi = boxes.T
    xm, xh = 0.5 * (xlo + xhi), 0.5 * (xhi - xlo)
    ym, yh = 0.5 * (ylo + yhi), 0.5 * (yhi - ylo)
    px = xm[:, None] + xh[:, None] * x[None, :]          # (p, n)
    py = ym[:, None] + yh[:, None] * x[None, :]
    gx = np.repeat(px[:, :, None], order, axis=2)        # (p, n, n)
    gy = np.repeat(py[:, None, :], order, axis=1)
    pts = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    vals = f(pts).reshape(len(boxes), order, order)
    return (xh * yh) * np.einsum("pij,i,j->p", vals, w, w)


def integrate2d(f, box, tol=1e-9, rel_tol=0.0, max_depth=24, order=8):
    """Integrate f(points) over the rectangle box = (x0, x1, y0, y1).

    f takes an (m, 2) array and returns m values.  Panels are quartered
    until the two-level error estimate meets the area-weighted tolerance.
    """
    x0, x1, y0, y1 = map(float, box)
    area = (x1 - x0) * (y1 - y0)
    if area == 0.0:
        return 0.0
    boxes = np.array([[x0, x1, y0, y1]])
    result = 0.0
    for depth in range(max_depth + 1):
        if len(boxes) == 0:
            return result
        coarse = _panel_values_2d(f, boxes, order)
        children = _quarter(boxes)
        fine_parts = _panel_values_2d(f, children, order)
        fine = fine_parts.reshape(-1, 4).sum(axis=1)
        err = np.abs(fine - coarse)
        panel_area = (boxes[:, 1] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 2])
        budget = tol * panel_area / area + rel_tol * np.abs(fine)
        done = err <= np.maximum(budget, 1e-300)
        result += fine[done].sum()
        boxes = children[np.repeat(~done, 4)]
        if len(boxes) > 200_000:
            raise QuadratureFailure("2d quadrature panel explosion")
    raise QuadratureFailure(
        f"2d quadrature did not converge within depth {max_depth}")


def _quarter(boxes):
    x0, x1, y0, y1 = boxes.T
    xm = 0.5 * (x0 + x1)
    ym = 0.5 * (y0 + y1)
    quads = [
        np.stack([x0, xm, y0, ym], axis=1),
        np.stack([xm, x1, y0, ym], axis=1),
        np.stack([x0, xm, ym, y1], axis=1),
        np.stack([xm, x1, ym, y1], axis=1),
    ]
    return np.concatenate(
        [q[:, None, :] for q in quads], axis=1).reshape(-1, 4)


def van_der_corput(indices):
    """Base-2 radical inverse of the given integer indices (in [0, 1))."""
    idx = np.asarray(indices, dtype=np.uint64)
    out = np.zeros(idx.shape, dtype=float)
    scale = 0.5
    work = idx.copy()
    while work.any():
        out += scale * (work & 1)
        work >>= 1
        scale *= 0.5
    return out
