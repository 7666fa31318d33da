"""Boundary charts, tubular coordinates, signed distance, projection, reach.

A domain is described by a finite family of parameterized boundary charts
plus an inside test.  Charts are oriented so that the boundary is traversed
with the domain on the left; the wedge-product normal (the 90-degree
counterclockwise rotation of the tangent in 2d, the cross product of the
tangent columns in 3d) then points into the domain.

The collar mechanism builds a smooth partition of unity subordinate to the
chart cover: where two charts overlap, complementary smoothstep profiles
hand the weight from one chart to the other; chart ends that terminate at a
junction (corner, closure-arc contact) carry full weight up to the end.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (BadRadii, DegenerateChart, DomainError, NoConvergence,
                     NonPositiveJacobian, OrientationMismatch, OutOfTube)
from .quadrature import van_der_corput

_RANK_TOL = 1e-10


def smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) transition."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.where(t_arr >= 1.0, 1.0, 0.0)
    mid = (t_arr > 0.0) & (t_arr < 1.0)
    if np.any(mid):
        tm = t_arr[mid]
        a = np.exp(-1.0 / tm)
        b = np.exp(-1.0 / (1.0 - tm))
        out[mid] = a / (a + b)
    return float(out[0]) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# Charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """A parameterized boundary patch s -> g(s) in R^N.

    eval maps an (m,) array (param_dim 1) or (m, 2) array (param_dim 2) to
    an (m, N) array of boundary points.  jacobian, when given, returns the
    (m, N, param_dim) derivative; otherwise central differences are used.
    collars holds per-end overlap widths in parameter units; width 0 marks
    a terminal end (junction with another chart, no overlap).
    """
    eval: Callable
    domain_box: np.ndarray            # (param_dim, 2)
    ambient_dim: int
    param_dim: int = 1
    jacobian: Optional[Callable] = None
    invert: Optional[Callable] = None  # x (m, N) -> s or NaN when off-chart
    collars: tuple = ((0.0, 0.0),)
    label: str = ""

    def __post_init__(self):
        box = np.atleast_2d(np.asarray(self.domain_box, dtype=float))
        object.__setattr__(self, "domain_box", box)

    def points(self, s):
        s = np.asarray(s, dtype=float)
        if self.param_dim == 1:
            return self.eval(np.atleast_1d(s))
        return self.eval(np.atleast_2d(s))

    def dpoints(self, s):
        """Derivative Dg(s), shape (m, N, param_dim)."""
        s = np.asarray(s, dtype=float)
        s = np.atleast_1d(s) if self.param_dim == 1 else np.atleast_2d(s)
        if self.jacobian is not None:
            return self.jacobian(s)
        return self._fd_jacobian(s)

    def _fd_jacobian(self, s):
        cols = []
        for k in range(self.param_dim):
            sk = s if self.param_dim == 1 else s[:, k]
            h = 1e-6 * np.maximum(1.0, np.abs(sk))
            if self.param_dim == 1:
                sp, sm = s + h, s - h
            else:
                sp, sm = s.copy(), s.copy()
                sp[:, k] += h
                sm[:, k] -= h
            cols.append((self.eval(sp) - self.eval(sm)) / (2.0 * h)[:, None])
        return np.stack(cols, axis=-1)

    def contains(self, s, margin=0.0):
        s2 = np.asarray(s, dtype=float).reshape(-1, self.param_dim)
        lo = self.domain_box[:, 0] - margin
        hi = self.domain_box[:, 1] + margin
        return np.all((s2 >= lo) & (s2 <= hi), axis=1)

    def bump(self, s):
        """Per-chart partition weight before normalization, in [0, 1]."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.param_dim != 1:
            return np.ones(s.shape[0])
        lo, hi = self.domain_box[0]
        c_lo, c_hi = self.collars[0]
        w = np.ones_like(s)
        if c_lo > 0:
            w = w * smoothstep((s - lo) / c_lo)
        if c_hi > 0:
            w = w * smoothstep((hi - s) / c_hi)
        return w


def smallest_singular_value(dg):
    """Smallest singular value of each (N, d) block in an (m, N, d) array."""
    gram = np.einsum("mik,mil->mkl", dg, dg)
    if gram.shape[1] == 1:
        return np.sqrt(gram[:, 0, 0])
    eig = np.linalg.eigvalsh(gram)
    return np.sqrt(np.maximum(eig[:, 0], 0.0))


def chart_normal(chart, s, inside_test=None, scale=1.0):
    """Inward unit normal from the wedge product of the tangent columns.

    In 2d the tangent is rotated counterclockwise (domain on the left);
    in 3d the two tangent columns are crossed.  When an inside test is
    supplied, a probe point g(s) + delta*n must land inside the domain,
    with delta = 1e-4 * scale; otherwise OrientationMismatch is raised.
    """
    s_arr = np.asarray(s, dtype=float)
    single = (chart.param_dim == 1 and s_arr.ndim == 0) or \
             (chart.param_dim == 2 and s_arr.ndim == 1)
    dg = chart.dpoints(s)
    sv = smallest_singular_value(dg)
    if np.any(sv < _RANK_TOL):
        raise DegenerateChart(
            f"chart {chart.label!r}: singular value {sv.min():.3e} below "
            f"{_RANK_TOL:g}")
    if chart.ambient_dim == 2 and chart.param_dim == 1:
        t = dg[:, :, 0]
        n = np.stack([-t[:, 1], t[:, 0]], axis=1)
    elif chart.ambient_dim == 3 and chart.param_dim == 2:
        n = np.cross(dg[:, :, 0], dg[:, :, 1])
    else:
        raise DegenerateChart("unsupported chart dimensions")
    n = n / np.linalg.norm(n, axis=1, keepdims=True)
    if inside_test is not None:
        probe = chart.points(s) + (1e-4 * scale) * n
        ok = np.asarray(inside_test(probe), dtype=bool)
        if not np.all(ok):
            raise OrientationMismatch(
                f"chart {chart.label!r}: wedge normal points outward")
    return n[0] if single else n


# ---------------------------------------------------------------------------
# Tubular frames
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TubularFrame:
    """A chart together with a tube thickness and its inward normal field."""
    chart: Chart
    thickness: float
    normal: Callable = None  # s -> (m, N) unit inward normals

    def __post_init__(self):
        if self.normal is None:
            object.__setattr__(
                self, "normal", lambda s: chart_normal(self.chart, s))

    def normal_jacobian(self, s):
        """Derivative of the normal field along the chart parameters,
        by central differences (step 1e-6 times the local scale)."""
        s = np.asarray(s, dtype=float)
        if self.chart.param_dim == 1:
            s = np.atleast_1d(s)
            h = 1e-6 * np.maximum(1.0, np.abs(s))
            dn = (self.normal(s + h) - self.normal(s - h)) / (2 * h)[:, None]
            return dn[:, :, None]
        s = np.atleast_2d(s)
        cols = []
        for k in range(2):
            h = 1e-6 * np.maximum(1.0, np.abs(s[:, k]))
            sp, sm = s.copy(), s.copy()
            sp[:, k] += h
            sm[:, k] -= h
            cols.append((self.normal(sp) - self.normal(sm)) / (2 * h)[:, None])
        return np.stack(cols, axis=-1)


def make_frame(chart, thickness, inside_test=None, scale=1.0, n_checks=25):
    """Build a TubularFrame, verifying unit normals, orthogonality and a
    positive Jacobian at sample points throughout the tube."""
    frame = TubularFrame(chart, float(thickness))
    s = _sample_box(chart, n_checks)
    n = frame.normal(s)
    if np.max(np.abs(np.linalg.norm(n, axis=1) - 1.0)) > 1e-12:
        raise DegenerateChart("normal field is not unit length")
    dg = chart.dpoints(s)
    dots = np.abs(np.einsum("mi,mik->mk", n, dg))
    if dots.max() > 1e-10:
        raise DegenerateChart("normal field is not orthogonal to tangents")
    if inside_test is not None:
        chart_normal(chart, s, inside_test=inside_test, scale=scale)
    for t in np.linspace(-0.95, 0.95, 7) * frame.thickness:
        j = tubular_jacobian(frame, s, t)
        if np.any(j <= 0):
            raise NonPositiveJacobian(
                "tube thickness exceeds the reach; shrink it")
    return frame


def _sample_box(chart, n):
    box = chart.domain_box
    if chart.param_dim == 1:
        lo, hi = box[0]
        pad = 1e-3 * (hi - lo)
        return np.linspace(lo + pad, hi - pad, n)
    k = int(np.sqrt(n)) + 2
    gx = np.linspace(box[0, 0], box[0, 1], k)[1:-1]
    gy = np.linspace(box[1, 0], box[1, 1], k)[1:-1]
    xx, yy = np.meshgrid(gx, gy)
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


def tubular_map(frame, s, t):
    """h(s, t) = g(s) + t n(g(s)); requires |t| < thickness."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(np.abs(t_arr) >= frame.thickness):
        raise OutOfTube(
            f"|t| = {np.max(np.abs(t_arr)):g} >= thickness "
            f"{frame.thickness:g}")
    s_arr = np.asarray(s, dtype=float)
    single = (frame.chart.param_dim == 1 and s_arr.ndim == 0) or \
             (frame.chart.param_dim == 2 and s_arr.ndim == 1)
    g = frame.chart.points(s)
    n = frame.normal(np.atleast_1d(s_arr) if frame.chart.param_dim == 1
                     else np.atleast_2d(s_arr))
    out = g + (t_arr[..., None] * n if t_arr.ndim else t_arr * n)
    return out[0] if single else out


def tubular_jacobian(frame, s, t):
    """det of the matrix with columns g_{s_k} + t n_{s_k} and n.

    Positive inside the tube; a nonpositive value means the thickness
    exceeds the reach (callers raise NonPositiveJacobian on it).
    """
    s_arr = np.asarray(s, dtype=float)
    single = (frame.chart.param_dim == 1 and s_arr.ndim == 0) or \
             (frame.chart.param_dim == 2 and s_arr.ndim == 1)
    s_b = np.atleast_1d(s_arr) if frame.chart.param_dim == 1 \
        else np.atleast_2d(s_arr)
    dg = frame.chart.dpoints(s_b)
    dn = frame.normal_jacobian(s_b)
    n = frame.normal(s_b)
    t_arr = np.asarray(t, dtype=float)
    cols = dg + (t_arr[..., None, None] * dn if t_arr.ndim else t_arr * dn)
    mat = np.concatenate([cols, n[:, :, None]], axis=2)
    det = np.linalg.det(mat)
    return float(det[0]) if single else det


def jacobian_t_coefficients(frame, s):
    """Coefficients J_0(s), ..., J_{N-1}(s) of the Jacobian polynomial in t.

    Expanded by multilinearity of the determinant, so the polynomial
    reproduces tubular_jacobian exactly (up to rounding).
    """
    s_arr = np.asarray(s, dtype=float)
    single = (frame.chart.param_dim == 1 and s_arr.ndim == 0) or \
             (frame.chart.param_dim == 2 and s_arr.ndim == 1)
    s_b = np.atleast_1d(s_arr) if frame.chart.param_dim == 1 \
        else np.atleast_2d(s_arr)
    dg = frame.chart.dpoints(s_b)
    sv = smallest_singular_value(dg)
    if np.any(sv < _RANK_TOL):
        raise DegenerateChart("rank lost while expanding the Jacobian")
    dn = frame.normal_jacobian(s_b)
    n = frame.normal(s_b)
    N = frame.chart.ambient_dim
    if N == 2:
        j0 = _det2(dg[:, :, 0], n)
        j1 = _det2(dn[:, :, 0], n)
        coeffs = np.stack([j0, j1], axis=1)
    elif N == 3:
        g1, g2 = dg[:, :, 0], dg[:, :, 1]
        n1, n2 = dn[:, :, 0], dn[:, :, 1]
        j0 = _det3(g1, g2, n)
        j1 = _det3(n1, g2, n) + _det3(g1, n2, n)
        j2 = _det3(n1, n2, n)
        coeffs = np.stack([j0, j1, j2], axis=1)
    else:
        raise DegenerateChart("only ambient dimensions 2 and 3 are supported")
    if np.any(coeffs[:, 0] <= 0):
        raise NonPositiveJacobian("J_0(s) must be positive")
    return coeffs[0] if single else coeffs


def _det2(a, b):
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def _det3(a, b, c):
    return np.einsum("mi,mi->m", np.cross(a, b), c)


def mean_curvature_proxy(frame, s):
    """d_t J(s, 0) / J(s, 0): the trace of the normal's derivative along the
    boundary, equal to (N-1) times the mean curvature up to the orientation
    convention (sign left to the caller)."""
    coeffs = np.atleast_2d(jacobian_t_coefficients(frame, s))
    out = coeffs[:, 1] / coeffs[:, 0]
    return float(out[0]) if out.shape[0] == 1 and np.ndim(s) == 0 else out


# ---------------------------------------------------------------------------
# Domain models
# ---------------------------------------------------------------------------

def unit_ball_volume(dim):
    """Volume of the unit ball in R^dim (omega_1 = 2, omega_2 = pi)."""
    from math import gamma, pi
    return pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class ClosedForm:
    """Exact metadata of a catalog domain, parameterized by dimension N."""
    kind: str                 # ball | annulus | cone_corner | cusp | square
    params: dict = field(default_factory=dict)

    def volume(self, dim=2):
        p = self.params
        if self.kind == "ball":
            return unit_ball_volume(dim) * p["b"] ** dim
        if self.kind == "annulus":
            return unit_ball_volume(dim) * (p["b"] ** dim - p["a"] ** dim)
        if self.kind == "square":
            return p["side"] ** 2
        raise DomainError(f"no closed-form volume for {self.kind}")

    def surface(self, dim=2):
        p = self.params
        if self.kind == "ball":
            return dim * unit_ball_volume(dim) * p["b"] ** (dim - 1)
        if self.kind == "annulus":
            return dim * unit_ball_volume(dim) * (
                p["a"] ** (dim - 1) + p["b"] ** (dim - 1))
        if self.kind == "square":
            return 4.0 * p["side"]
        raise DomainError(f"no closed-form surface area for {self.kind}")


@dataclass(frozen=True)
class DomainModel:
    """A bounded domain assembled from boundary charts and an inside test."""
    ambient_dim: int
    charts: tuple
    inside: Callable                  # (m, N) -> bool array
    closed_form: Optional[ClosedForm] = None
    diameter: float = 2.0
    reach_exact: Optional[float] = None
    patch_height: Optional[float] = None
    label: str = ""

    def inside_point(self, x):
        return bool(np.asarray(self.inside(np.atleast_2d(
            np.asarray(x, dtype=float)))).ravel()[0])

    def total_weight(self, x):
        """Sum of raw chart bumps at ambient boundary points x."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        total = np.zeros(x.shape[0])
        for ch in self.charts:
            if ch.invert is None:
                continue
            s = ch.invert(x)
            valid = np.isfinite(s)
            if np.any(valid):
                inb = np.zeros_like(valid)
                inb[valid] = ch.contains(s[valid])
                w = np.zeros(x.shape[0])
                w[inb] = ch.bump(s[inb])
                total += w
        return total

    def pou_weight(self, chart_index, s):
        """Partition-of-unity weight of one chart at its own parameters."""
        ch = self.charts[chart_index]
        s = np.atleast_1d(np.asarray(s, dtype=float))
        w = ch.bump(s)
        total = self.total_weight(ch.points(s))
        return w / np.maximum(total, 1e-300)

    def frame(self, chart_index=0, thickness=None):
        if thickness is None:
            r = self.reach_exact
            if r is None:
                r = reach_estimate(self, 2000)
            if not np.isfinite(r) or r <= 0:
                raise NonPositiveJacobian(
                    "domain has zero reach; pass an explicit thickness")
            thickness = 0.5 * r
        return make_frame(self.charts[chart_index], thickness,
                          inside_test=self.inside, scale=self.diameter)


def validate_domain(domain, n_samples=50, n_inject=40):
    """Construction-time checks: chart rank, injectivity, inward orientation,
    and the partition-of-unity sum and coverage invariants."""
    for ch in domain.charts:
        s = _sample_box(ch, n_samples)
        chart_normal(ch, s, inside_test=domain.inside, scale=domain.diameter)
        if ch.param_dim == 1:
            lo, hi = ch.domain_box[0]
            grid = np.linspace(lo, hi, n_inject)
            pts = ch.points(grid)
            d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
            h_grid = (hi - lo) / (n_inject - 1)
            far = np.abs(grid[:, None] - grid[None, :]) > 1.5 * h_grid
            if np.any(d2[far] <= 0):
                raise DegenerateChart(
                    f"chart {ch.label!r} is not injective on its box")
    pts, _, idx, s = boundary_samples(domain, 200)
    total = domain.total_weight(pts)
    if np.any(total < 1.0 - 1e-12):
        raise DegenerateChart(
            f"charts do not cover the boundary: min weight {total.min():.3e}")
    sums = np.zeros(pts.shape[0])
    for i, ch in enumerate(domain.charts):
        mask = idx == i
        if not np.any(mask):
            continue
        w = domain.pou_weight(i, s[mask])
        if np.any((w < -1e-15) | (w > 1.0 + 1e-12)):
            raise DegenerateChart("partition weight outside [0, 1]")
    for i, ch in enumerate(domain.charts):
        if ch.invert is None:
            continue
        si = ch.invert(pts)
        valid = np.isfinite(si)
        inb = np.zeros_like(valid)
        inb[valid] = ch.contains(si[valid])
        if np.any(inb):
            sums[inb] += ch.bump(si[inb]) / total[inb]
    if np.max(np.abs(sums - 1.0)) > 1e-12:
        raise DegenerateChart("partition of unity does not sum to 1")
    return domain


def boundary_samples(domain, count):
    """Deterministic nested boundary sample: round-robin over charts, each
    chart filled by the van der Corput sequence scaled to its box.

    Growing ``count`` extends the sample, so suprema over it are monotone.
    Returns (points, normals, chart_index, parameters).
    """
    m = len(domain.charts)
    pts, nms, idx, params = [], [], [], []
    for i, ch in enumerate(domain.charts):
        k = int(np.ceil((count - i) / m))
        if k <= 0 or ch.param_dim != 1:
            continue
        lo, hi = ch.domain_box[0]
        s = lo + (hi - lo) * van_der_corput(np.arange(k))
        pts.append(ch.points(s))
        nms.append(chart_normal(ch, s))
        idx.append(np.full(k, i))
        params.append(s)
    return (np.concatenate(pts), np.concatenate(nms),
            np.concatenate(idx), np.concatenate(params))


def reach_estimate(domain, n_samples):
    """Reciprocal of the largest normal-spread ratio |n(x)-n(y)| / |x-y|
    over sampled boundary pairs.  Nonincreasing in n_samples because the
    sample sets are nested."""
    if n_samples < 100:
        raise DomainError("n_samples must be at least 100")
    pts, nms, _, _ = boundary_samples(domain, n_samples)
    best = 0.0
    chunk = 512
    for lo in range(0, len(pts), chunk):
        dx = pts[lo:lo + chunk, None, :] - pts[None, :, :]
        dn = nms[lo:lo + chunk, None, :] - nms[None, :, :]
        dist = np.linalg.norm(dx, axis=2)
        ratio = np.linalg.norm(dn, axis=2) / np.where(dist > 1e-9, dist,
                                                      np.inf)
        best = max(best, float(ratio.max()))
    if best <= 0:
        return np.inf
    return 1.0 / best


# ---------------------------------------------------------------------------
# Projection and signed distance
# ---------------------------------------------------------------------------

def boundary_projection(domain, x, starts=16, newton_iters=12,
                        golden_iters=60):
    """Nearest boundary point(s) for a batch of query points.

    Multi-start damped Newton on the stationarity condition
    (x - g(s)) . g'(s) = 0 per chart, plus a golden-section pass around the
    best coarse bracket and the chart endpoints as candidates.  Returns
    (points (m, N), distances (m,), unique (m,) bool); the leading axis is
    dropped for a single query point.  ``unique`` is False when two
    minimizers further than 1e-6 apart tie within 1e-10.
    """
    single = np.asarray(x, dtype=float).ndim == 1
    X = np.atleast_2d(np.asarray(x, dtype=float))
    m = X.shape[0]
    n_ch = len(domain.charts)
    per_chart = starts + 3
    cand_pts = np.full((m, n_ch, per_chart, domain.ambient_dim), np.nan)
    cand_d = np.full((m, n_ch, per_chart), np.inf)
    for ci, ch in enumerate(domain.charts):
        if ch.param_dim != 1:
            continue
        lo, hi = ch.domain_box[0]
        s0 = np.linspace(lo, hi, starts)
        s_newton = np.clip(_newton_project(ch, X, s0, newton_iters), lo, hi)
        g = ch.points(s_newton.reshape(-1)).reshape(m, starts, -1)
        d = np.linalg.norm(g - X[:, None, :], axis=2)
        cand_pts[:, ci, :starts] = g
        cand_d[:, ci, :starts] = d
        gp, dp = _golden_project(ch, X, s0, golden_iters)
        cand_pts[:, ci, starts] = gp
        cand_d[:, ci, starts] = dp
        ends = ch.points(np.array([lo, hi]))
        cand_pts[:, ci, starts + 1] = ends[0]
        cand_pts[:, ci, starts + 2] = ends[1]
        cand_d[:, ci, starts + 1] = np.linalg.norm(X - ends[0], axis=1)
        cand_d[:, ci, starts + 2] = np.linalg.norm(X - ends[1], axis=1)
    flat_d = cand_d.reshape(m, -1)
    flat_p = cand_pts.reshape(m, flat_d.shape[1], -1)
    dmin = np.nanmin(flat_d, axis=1)
    if not np.all(np.isfinite(dmin)):
        raise NoConvergence("projection found no candidates")
    proj = flat_p[np.arange(m), np.nanargmin(flat_d, axis=1)]
    unique = np.ones(m, dtype=bool)
    for i in range(m):
        tol_hit = max(1e-10, 1e-10 * dmin[i])
        hits = flat_p[i][flat_d[i] <= dmin[i] + tol_hit]
        if len(hits) > 1:
            spread = np.linalg.norm(
                hits[:, None, :] - hits[None, :, :], axis=2).max()
            if spread > 1e-6:
                unique[i] = False
    if single:
        return proj[0], float(dmin[0]), bool(unique[0])
    return proj, dmin, unique


def _newton_project(chart, X, s0, iters):
    m, N = X.shape
    S = np.broadcast_to(s0, (m, s0.size)).copy()
    lo, hi = chart.domain_box[0]
    h2 = 1e-5 * max(1.0, hi - lo)
    for _ in range(iters):
        flat = S.reshape(-1)
        g = chart.points(flat).reshape(m, -1, N)
        dg = chart.dpoints(flat)[:, :, 0].reshape(m, -1, N)
        gp = chart.points(flat + h2).reshape(m, -1, N)
        gm = chart.points(flat - h2).reshape(m, -1, N)
        ddg = (gp - 2 * g + gm) / h2 ** 2
        r = X[:, None, :] - g
        F = np.einsum("msi,msi->ms", r, dg)
        dF = -np.einsum("msi,msi->ms", dg, dg) \
            + np.einsum("msi,msi->ms", r, ddg)
        dF = np.where(np.abs(dF) > 1e-14, dF, -1.0)
        step = np.clip(F / dF, -(hi - lo) / 4, (hi - lo) / 4)
        S = np.clip(S - step, lo, hi)
    return S


def _golden_project(chart, X, s0, iters):
    """Golden-section minimization of |x - g(s)| around the best coarse
    bracket, vectorized over the query points."""
    g = chart.points(s0)
    d = np.linalg.norm(g[None, :, :] - X[:, None, :], axis=2)
    k = np.argmin(d, axis=1)
    a = s0[np.maximum(k - 1, 0)]
    b = s0[np.minimum(k + 1, s0.size - 1)]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        c = b - phi * (b - a)
        dd = a + phi * (b - a)
        fc = np.linalg.norm(chart.points(c) - X, axis=1)
        fd = np.linalg.norm(chart.points(dd) - X, axis=1)
        take = fc < fd
        b = np.where(take, dd, b)
        a = np.where(take, a, c)
    s = 0.5 * (a + b)
    gbest = chart.points(s)
    return gbest, np.linalg.norm(gbest - X, axis=1)


def signed_distance(domain, x):
    """Distance to the boundary, positive inside, negative outside."""
    single = np.asarray(x, dtype=float).ndim == 1
    X = np.atleast_2d(np.asarray(x, dtype=float))
    _, d, _ = boundary_projection(domain, X)
    sgn = np.where(np.asarray(domain.inside(X), dtype=bool), 1.0, -1.0)
    out = sgn * d
    return float(out[0]) if single else out


def signed_distance_gradient(domain, x, step=1e-6):
    """Central-difference gradient of the signed distance field."""
    single = np.asarray(x, dtype=float).ndim == 1
    X = np.atleast_2d(np.asarray(x, dtype=float))
    h = step * max(1.0, domain.diameter)
    cols = []
    for k in range(domain.ambient_dim):
        e = np.zeros(domain.ambient_dim)
        e[k] = h
        cols.append((signed_distance(domain, X + e)
                     - signed_distance(domain, X - e)) / (2 * h))
    out = np.stack(cols, axis=-1)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# Cusp formulas
# ---------------------------------------------------------------------------

def cusp_profile(t, alpha):
    """psi(t) = |t|^(1+alpha) / (1+alpha), the cusp boundary height."""
    return np.abs(t) ** (1.0 + alpha) / (1.0 + alpha)


def cusp_normal_curvature(alpha, t):
    """Normal-section curvature alpha |t|^(alpha-1) / (1 + t^(2 alpha))^(3/2)
    of the cusp boundary; diverges at t = 0 when alpha < 1."""
    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr == 0.0) and alpha < 1.0:
        raise DomainError("curvature diverges at t = 0 for alpha < 1")
    k = alpha * np.abs(t_arr) ** (alpha - 1.0) \
        / (1.0 + np.abs(t_arr) ** (2.0 * alpha)) ** 1.5
    return float(k) if np.ndim(t) == 0 else k


def cusp_reach_witness(alpha, sigma, patch_radius=None, n_points=10_000):
    """True when the sphere of radius sigma centered at (0, sigma) exits the
    cusp domain: some t in (0, sigma) has the sphere profile strictly below
    the boundary profile while the sphere profile wins at t = sigma."""
    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    if patch_radius is None:
        patch_radius = ((1.0 + alpha) * 0.5) ** (1.0 / (1.0 + alpha))
    if sigma <= 0 or sigma > patch_radius:
        raise DomainError(
            f"sigma must lie in (0, {patch_radius:g}] for this patch")
    t = np.linspace(0.0, sigma, n_points + 1)[1:]
    sphere = sigma - np.sqrt(np.maximum(sigma ** 2 - t ** 2, 0.0))
    bound = cusp_profile(t, alpha)
    below_somewhere = bool(np.any(sphere < bound))
    exits_at_sigma = sphere[-1] > bound[-1]
    return below_somewhere and exits_at_sigma


# ---------------------------------------------------------------------------
# Domain catalog
# ---------------------------------------------------------------------------

def _snap_into(s, lo, hi, rel=1e-9):
    """Clamp parameters a rounding error outside [lo, hi] onto the ends;
    anything farther out becomes NaN (off this chart)."""
    tol = rel * max(hi - lo, 1.0)
    s = np.where((s > hi) & (s <= hi + tol), hi, s)
    s = np.where((s < lo) & (s >= lo - tol), lo, s)
    return np.where((s >= lo) & (s <= hi), s, np.nan)


def _circle_chart(radius, center, lo, hi, collars, reverse=False, label=""):
    cx, cy = center
    sgn = -1.0 if reverse else 1.0

    def ev(s):
        s = np.atleast_1d(s)
        return np.stack([cx + radius * np.cos(sgn * s),
                         cy + radius * np.sin(sgn * s)], axis=1)

    def jac(s):
        s = np.atleast_1d(s)
        return np.stack([-sgn * radius * np.sin(sgn * s),
                         sgn * radius * np.cos(sgn * s)],
                        axis=1)[:, :, None]

    def inv(x):
        x = np.atleast_2d(x)
        r = np.linalg.norm(x - np.array([cx, cy]), axis=1)
        theta = sgn * np.arctan2(x[:, 1] - cy, x[:, 0] - cx)
        s = theta + 2 * np.pi * np.round(
            (0.5 * (lo + hi) - theta) / (2 * np.pi))
        off = np.abs(r - radius) > 1e-8 * max(1.0, radius)
        s = np.where(off, np.nan, s)
        return _snap_into(s, lo, hi)

    return Chart(eval=ev, domain_box=np.array([[lo, hi]]), ambient_dim=2,
                 jacobian=jac, invert=inv, collars=(collars,), label=label)


def _two_arc_atlas(radius, reverse=False, tag=""):
    """Two overlapping arc charts covering a circle, with complementary
    collar transitions on both overlaps (their weights sum to 1 exactly)."""
    half = 2.2
    overlap = 2 * half - np.pi
    a = _circle_chart(radius, (0, 0), -half, half, (overlap, overlap),
                      reverse=reverse, label=f"{tag}arc0")
    b = _circle_chart(radius, (0, 0), np.pi - half, np.pi + half,
                      (overlap, overlap), reverse=reverse,
                      label=f"{tag}arc1")
    return (a, b)


def disc(b=1.0):
    """Ball (disc) of radius b in the plane."""
    if b <= 0:
        raise BadRadii("radius must be positive")
    charts = _two_arc_atlas(b)
    dom = DomainModel(
        ambient_dim=2, charts=charts,
        inside=lambda x: np.linalg.norm(np.atleast_2d(x), axis=1) < b,
        closed_form=ClosedForm("ball", {"b": b}),
        diameter=2 * b, reach_exact=b, label=f"disc({b:g})")
    return validate_domain(dom)


def annulus(a=1.0, b=2.0):
    """Annulus a < |x| < b in the plane."""
    if not 0 < a < b:
        raise BadRadii("need 0 < a < b")
    outer = _two_arc_atlas(b, tag="outer_")
    inner = _two_arc_atlas(a, reverse=True, tag="inner_")

    def inside(x):
        r = np.linalg.norm(np.atleast_2d(x), axis=1)
        return (r > a) & (r < b)

    dom = DomainModel(
        ambient_dim=2, charts=outer + inner, inside=inside,
        closed_form=ClosedForm("annulus", {"a": a, "b": b}),
        diameter=2 * b, reach_exact=min(a, 0.5 * (b - a)),
        label=f"annulus({a:g},{b:g})")
    return validate_domain(dom)


def _graph_chart(fn, dfn, lo, hi, label):
    def ev(s):
        s = np.atleast_1d(s)
        return np.stack([s, fn(s)], axis=1)

    def jac(s):
        s = np.atleast_1d(s)
        return np.stack([np.ones_like(s), dfn(s)], axis=1)[:, :, None]

    def inv(x):
        x = np.atleast_2d(x)
        s = _snap_into(x[:, 0].copy(), lo, hi)
        good = np.isfinite(s)
        on = np.zeros_like(good)
        on[good] = np.abs(x[good, 1] - fn(s[good])) <= 1e-8
        return np.where(on, s, np.nan)

    return Chart(eval=ev, domain_box=np.array([[lo, hi]]), ambient_dim=2,
                 jacobian=jac, invert=inv, collars=((0.0, 0.0),), label=label)


def _closure_arc_chart(center_y, rho, gamma, label):
    """Closure arc around center (0, c): the upper circle branch traversed
    east to west with the domain below (inside the circle)."""
    cy = center_y

    def ev(u):
        u = np.atleast_1d(u)
        return np.stack([rho * np.cos(u), cy + rho * np.sin(u)], axis=1)

    def jac(u):
        u = np.atleast_1d(u)
        return np.stack([-rho * np.sin(u), rho * np.cos(u)],
                        axis=1)[:, :, None]

    def inv(x):
        x = np.atleast_2d(x)
        r = np.linalg.norm(x - np.array([0.0, cy]), axis=1)
        u = np.arctan2(x[:, 1] - cy, x[:, 0])
        on = np.abs(r - rho) <= 1e-8 * max(1.0, rho)
        u = np.where(on, u, np.nan)
        return _snap_into(u, gamma, np.pi - gamma)

    return Chart(eval=ev, domain_box=np.array([[gamma, np.pi - gamma]]),
                 ambient_dim=2, jacobian=jac, invert=inv,
                 collars=((0.0, 0.0),), label=label)


class LensDomain(DomainModel):
    """Domain between a symmetric graph x2 = profile(|x1|), |x1| <= R, and a
    circular closure arc crossing the graph at right angles at (+-R, eta).

    The perpendicular contact keeps the region x1-simple, bounds both
    boundary slopes, and leaves {x2 < eta} exactly equal to the local
    supergraph patch the slab families live in.  The junctions are marked
    non-smooth and excluded from curvature checks.
    """


def _lens_domain(profile, dprofile, R, slope_at_R, kind, params, label, eta):
    c = eta - slope_at_R * R            # arc center (0, c), below eta
    rho = R * np.hypot(1.0, slope_at_R)
    gamma = np.arctan2(slope_at_R * R, R)
    arc = _closure_arc_chart(c, rho, gamma, label + "_arc")
    center = np.array([0.0, c])

    def inside(x):
        x = np.atleast_2d(x)
        in_circle = np.linalg.norm(x - center, axis=1) < rho
        return (x[:, 1] > profile(x[:, 0])) & in_circle

    def upper(x1):
        x1 = np.asarray(x1, dtype=float)
        return c + np.sqrt(np.maximum(rho ** 2 - x1 ** 2, 0.0))

    dom = LensDomain(
        ambient_dim=2, charts=(arc,), inside=inside,
        closed_form=ClosedForm(kind, params),
        diameter=float(max(2 * rho, c + rho)),
        reach_exact=None, patch_height=float(eta), label=label)
    object.__setattr__(dom, "_upper", upper)
    object.__setattr__(dom, "_lower",
                       lambda x1: profile(np.asarray(x1, dtype=float)))
    object.__setattr__(dom, "_half_width", float(R))
    object.__setattr__(dom, "_cap", (float(c), float(rho)))
    return dom


def cusp_domain(alpha=0.5, eta=0.5):
    """Domain whose boundary near the origin is x2 = |x1|^(1+alpha)/(1+alpha),
    closed from above by a circular arc crossing the profile at right angles
    at (+-R, eta), R = ((1+alpha) eta)^(1/(1+alpha))."""
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must lie in (0, 1)")
    R = ((1.0 + alpha) * eta) ** (1.0 / (1.0 + alpha))
    slope = R ** alpha

    def prof(s):
        return cusp_profile(s, alpha)

    def dprof(s):
        s = np.asarray(s, dtype=float)
        return np.sign(s) * np.abs(s) ** alpha

    base = _lens_domain(prof, dprof, R, slope, "cusp",
                        {"alpha": alpha, "eta": eta}, f"cusp({alpha:g})", eta)
    graph = _graph_chart(prof, dprof, -R, R, f"cusp({alpha:g})_graph")
    dom = LensDomain(
        ambient_dim=2, charts=(graph,) + base.charts, inside=base.inside,
        closed_form=base.closed_form, diameter=base.diameter,
        reach_exact=None, patch_height=base.patch_height, label=base.label)
    for attr in ("_upper", "_lower", "_half_width", "_cap"):
        object.__setattr__(dom, attr, getattr(base, attr))
    return validate_domain(dom)


def cone_corner_domain(L=1.0, eta=0.5):
    """Corner domain with walls x2 = L |x1| near the origin, closed by a
    circular arc (centered at the corner) that crosses the walls at right
    angles.  The boundary is C^1 except at the corner itself."""
    if L <= 0:
        raise DomainError("L must be positive")
    R = eta / L

    def prof(s):
        return L * np.abs(np.asarray(s, dtype=float))

    def dprof(s):
        return L * np.sign(np.asarray(s, dtype=float))

    base = _lens_domain(prof, dprof, R, L, "cone_corner",
                        {"L": L, "eta": eta}, f"cone({L:g})", eta)
    right = _graph_chart(lambda s: L * np.asarray(s, dtype=float),
                         lambda s: L * np.ones_like(np.asarray(s, float)),
                         0.0, R, "wall_right")
    left = _graph_chart(lambda s: -L * np.asarray(s, dtype=float),
                        lambda s: -L * np.ones_like(np.asarray(s, float)),
                        -R, 0.0, "wall_left")
    dom = LensDomain(
        ambient_dim=2, charts=(right, left) + base.charts,
        inside=base.inside, closed_form=base.closed_form,
        diameter=base.diameter, reach_exact=None,
        patch_height=base.patch_height, label=base.label)
    for attr in ("_upper", "_lower", "_half_width", "_cap"):
        object.__setattr__(dom, attr, getattr(base, attr))
    return validate_domain(dom)


def square_domain(side=1.0):
    """Axis-aligned square (0, side)^2; four wall charts, corners terminal."""
    s0 = float(side)

    def seg(p, q, label):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = q - p
        ln = float(np.linalg.norm(d))

        def ev(t):
            t = np.atleast_1d(t)
            return p[None, :] + t[:, None] * d[None, :]

        def jac(t):
            t = np.atleast_1d(t)
            return np.broadcast_to(d, (t.size, 2)).copy()[:, :, None]

        def inv(x):
            x = np.atleast_2d(x)
            t = ((x - p) @ d) / (ln * ln)
            on = np.linalg.norm(x - (p + t[:, None] * d), axis=1) <= 1e-9
            t = np.where(on, t, np.nan)
            return _snap_into(t, 0.0, 1.0)

        return Chart(eval=ev, domain_box=np.array([[0.0, 1.0]]),
                     ambient_dim=2, jacobian=jac, invert=inv,
                     collars=((0.0, 0.0),), label=label)

    charts = (
        seg((0, 0), (s0, 0), "bottom"),
        seg((s0, 0), (s0, s0), "right"),
        seg((s0, s0), (0, s0), "top"),
        seg((0, s0), (0, 0), "left"),
    )

    def inside(x):
        x = np.atleast_2d(x)
        return (x[:, 0] > 0) & (x[:, 0] < s0) & (x[:, 1] > 0) & (x[:, 1] < s0)

    dom = DomainModel(
        ambient_dim=2, charts=charts, inside=inside,
        closed_form=ClosedForm("square", {"side": s0}),
        diameter=s0 * np.sqrt(2.0), reach_exact=None,
        label=f"square({s0:g})")
    return validate_domain(dom)


def sphere_cap_chart(b=1.0):
    """Chart of a sphere of radius b in R^3 away from the poles, parameter
    order chosen so the wedge normal points inward (toward the center)."""
    def ev(s):
        s = np.atleast_2d(s)
        phi, theta = s[:, 0], s[:, 1]
        return b * np.stack([np.sin(theta) * np.cos(phi),
                             np.sin(theta) * np.sin(phi),
                             np.cos(theta)], axis=1)

    def jac(s):
        s = np.atleast_2d(s)
        phi, theta = s[:, 0], s[:, 1]
        dphi = b * np.stack([-np.sin(theta) * np.sin(phi),
                             np.sin(theta) * np.cos(phi),
                             np.zeros_like(phi)], axis=1)
        dtheta = b * np.stack([np.cos(theta) * np.cos(phi),
                               np.cos(theta) * np.sin(phi),
                               -np.sin(theta)], axis=1)
        return np.stack([dphi, dtheta], axis=2)

    return Chart(eval=ev,
                 domain_box=np.array([[-1.2, 1.2], [0.6, np.pi - 0.6]]),
                 ambient_dim=3, param_dim=2, jacobian=jac,
                 collars=((0.0, 0.0), (0.0, 0.0)), label=f"sphere({b:g})")
