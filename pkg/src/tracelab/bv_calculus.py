"""Concrete BV function representations and the three integrals of the
trace inequality: boundary trace, total variation, and volume integral.

Three representations are supported.  CharacteristicRegion wraps a scaled
indicator of a constructive region (slabs at a cusp or corner, interior
shells); its integrals come from closed forms backed by quadrature cross
routes.  SmoothSampled wraps a callable with gradient access and is
integrated by mapped tensor quadrature adapted to the domain (polar for
balls and annuli, graph strips for the corner and cusp catalog domains,
clipped Cartesian cells as the generic fallback).  PiecewiseLinear wraps
vertex values on a triangle mesh, where all three integrals are exact.
"""

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import geometry
from .errors import (DeltaTooLarge, DomainError, EpsilonTooLarge,
                     PatchExceeded, UnsupportedRegion)
from .geometry import unit_ball_volume
from .quadrature import integrate, integrate2d


def sqrt1p_minus1(z):
    """sqrt(1+z) - 1 without cancellation for small z."""
    z = np.asarray(z, dtype=float)
    return z / (1.0 + np.sqrt(1.0 + z))


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CuspSlab:
    """E = {psi(|x'|) < x_N < psi(r)} under the cusp profile
    psi(t) = |t|^(1+alpha)/(1+alpha); the relative boundary inside the
    domain is the flat top disc, the contact set is the lateral cusp wall.
    """
    alpha: float
    r: float
    dim: int = 2
    eta: float = 0.5

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DomainError("alpha must lie in (0, 1)")
        r_max = ((1.0 + self.alpha) * self.eta) ** (1.0 / (1.0 + self.alpha))
        if not (0.0 < self.r <= r_max):
            raise PatchExceeded(
                f"r = {self.r:g} outside the patch (max {r_max:g})")

    def volume(self):
        n, al = self.dim, self.alpha
        return unit_ball_volume(n - 1) / (n + al) * self.r ** (n + al)

    def perimeter(self):
        return unit_ball_volume(self.dim - 1) * self.r ** (self.dim - 1)

    def trace_excess(self, tol=1e-13):
        """Contact-set area minus the flat-disc area, integrated without
        cancellation: (N-1) om ∫ (sqrt(1+t^2a) - 1) t^(N-2) dt."""
        n, al = self.dim, self.alpha
        om = unit_ball_volume(n - 1)

        def f(t):
            return sqrt1p_minus1(t ** (2 * al)) * t ** (n - 2)

        val = integrate(f, 0.0, self.r, tol=tol * max(self.r, 1e-30),
                        rel_tol=1e-13)
        return (n - 1) * om * val

    def trace(self):
        return self.perimeter() + self.trace_excess()

    def leading_term(self):
        n, al = self.dim, self.alpha
        om = unit_ball_volume(n - 1)
        return (n - 1) * om / (2 * (n - 1 + 2 * al)) \
            * self.r ** (n - 1 + 2 * al)

    def contains(self, x):
        x = np.atleast_2d(x)
        psi = geometry.cusp_profile(x[:, 0], self.alpha)
        top = geometry.cusp_profile(self.r, self.alpha)
        return (x[:, 1] > psi) & (x[:, 1] < top)

    def sample_box(self):
        top = geometry.cusp_profile(self.r, self.alpha)
        return (-self.r, self.r, 0.0, top)


@dataclass(frozen=True)
class ConeSlab:
    """F = {L|x'| < x_N < L r, |x'| < r} at a corner with wall slope L."""
    L: float
    r: float
    dim: int = 2
    eta: float = 0.5

    def __post_init__(self):
        if self.L <= 0:
            raise DomainError("L must be positive")
        if not (0.0 < self.r <= self.eta / self.L):
            raise PatchExceeded(
                f"r = {self.r:g} outside the patch (max {self.eta / self.L:g})")

    def volume(self):
        n = self.dim
        return unit_ball_volume(n - 1) * self.L / n * self.r ** n

    def perimeter(self):
        return unit_ball_volume(self.dim - 1) * self.r ** (self.dim - 1)

    def trace(self):
        return np.sqrt(1.0 + self.L ** 2) * self.perimeter()

    def trace_excess(self):
        # sqrt(1+L^2)-1, stably
        return sqrt1p_minus1(self.L ** 2) * self.perimeter()

    def contains(self, x):
        x = np.atleast_2d(x)
        return (x[:, 1] > self.L * np.abs(x[:, 0])) \
            & (x[:, 1] < self.L * self.r) & (np.abs(x[:, 0]) < self.r)

    def sample_box(self):
        return (-self.r, self.r, 0.0, self.L * self.r)


@dataclass(frozen=True)
class Shell:
    """Q = {x in Omega : dist(x, boundary) < delta} on a ball or annulus."""
    domain: geometry.DomainModel
    delta: float
    dim: int = 2

    def __post_init__(self):
        cf = self.domain.closed_form
        if cf is None or cf.kind not in ("ball", "annulus"):
            raise UnsupportedRegion("shells need a ball or annulus domain")
        reach = self.domain.reach_exact
        if self.delta <= 0 or self.delta >= 0.5 * reach:
            raise DeltaTooLarge(
                f"delta = {self.delta:g} not below reach/2 = {0.5 * reach:g}")

    def _radii(self):
        cf = self.domain.closed_form
        b = cf.params["b"]
        a = cf.params.get("a", 0.0)
        return a, b

    def volume(self):
        a, b = self._radii()
        om, n, d = unit_ball_volume(self.dim), self.dim, self.delta
        out = om * (b ** n - (b - d) ** n)
        if a > 0:
            out += om * ((a + d) ** n - a ** n)
        return out

    def perimeter(self):
        a, b = self._radii()
        om, n, d = unit_ball_volume(self.dim), self.dim, self.delta
        out = n * om * (b - d) ** (n - 1)
        if a > 0:
            out += n * om * (a + d) ** (n - 1)
        return out

    def trace(self):
        return self.domain.closed_form.surface(self.dim)

    def contains(self, x):
        a, b = self._radii()
        r = np.linalg.norm(np.atleast_2d(x), axis=1)
        d = b - r if a == 0 else np.minimum(r - a, b - r)
        inside = np.asarray(self.domain.inside(np.atleast_2d(x)), dtype=bool)
        return inside & (d < self.delta)

    def sample_box(self):
        _, b = self._radii()
        return (-b, b, -b, b)


@dataclass(frozen=True)
class SublevelOfCallable:
    """Generic region {f < c}; volume by Monte Carlo only."""
    f: Callable
    c: float
    box: tuple  # (x0, x1, y0, y1)

    def contains(self, x):
        return np.asarray(self.f(np.atleast_2d(x))) < self.c

    def sample_box(self):
        return self.box


def monte_carlo_volume(region, n=100_000, seed=0):
    """Hit-or-miss volume of a region within its sample box.

    Returns (estimate, standard_error); the seed is fixed for
    reproducibility and recorded by callers in their reports.
    """
    x0, x1, y0, y1 = region.sample_box()
    rng = np.random.default_rng(seed)
    pts = np.stack([rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)], axis=1)
    hit = np.asarray(region.contains(pts), dtype=float)
    p = hit.mean()
    box_vol = (x1 - x0) * (y1 - y0)
    se = box_vol * np.sqrt(max(p * (1 - p), 1e-12) / n)
    return box_vol * p, se


def region_volume(region, method="closed"):
    if method == "closed":
        if isinstance(region, SublevelOfCallable):
            raise UnsupportedRegion("no closed-form volume")
        return region.volume()
    if method == "quadrature":
        if isinstance(region, CuspSlab):
            top = geometry.cusp_profile(region.r, region.alpha)
            return integrate(
                lambda t: top - geometry.cusp_profile(t, region.alpha),
                -region.r, region.r, tol=1e-12, breakpoints=(0.0,))
        if isinstance(region, ConeSlab):
            return integrate(lambda t: region.L * (region.r - np.abs(t)),
                             -region.r, region.r, tol=1e-12,
                             breakpoints=(0.0,))
        if isinstance(region, Shell):
            a, b = region._radii()
            d = region.delta
            out = integrate(lambda r: 2 * np.pi * r, b - d, b, tol=1e-12)
            if a > 0:
                out += integrate(lambda r: 2 * np.pi * r, a, a + d, tol=1e-12)
            return out
        raise UnsupportedRegion("no quadrature route for this region")
    if method == "monte-carlo":
        return monte_carlo_volume(region)[0]
    raise DomainError(f"unknown method {method!r}")


def region_perimeter(region, domain=None, method="closed"):
    """Relative perimeter P(E, Omega): the measure of the part of the
    region's boundary strictly inside the domain (contact with the domain
    boundary excluded)."""
    if method == "closed":
        if isinstance(region, SublevelOfCallable):
            raise UnsupportedRegion("no closed-form perimeter")
        return region.perimeter()
    if method == "quadrature":
        if isinstance(region, (CuspSlab, ConeSlab)):
            # the relative boundary is the flat top disc, a straight segment
            return integrate(lambda t: np.ones_like(t), -region.r, region.r,
                             tol=1e-13)
        if isinstance(region, Shell):
            a, b = region._radii()
            d = region.delta
            out = (b - d) * integrate(lambda t: np.ones_like(t), 0.0,
                                      2 * np.pi, tol=1e-13)
            if a > 0:
                out += (a + d) * integrate(lambda t: np.ones_like(t), 0.0,
                                           2 * np.pi, tol=1e-13)
            return out
        raise UnsupportedRegion("no quadrature route for this region")
    raise DomainError(f"unknown method {method!r}")


def region_trace(region, method="closed"):
    """Boundary contact integral of the unit-amplitude indicator."""
    if isinstance(region, CuspSlab):
        return region.trace()  # quadrature-backed either way
    if isinstance(region, ConeSlab):
        if method == "quadrature":
            wall = integrate(
                lambda t: np.sqrt(1.0 + region.L ** 2) * np.ones_like(t),
                -region.r, region.r, tol=1e-13)
            return wall
        return region.trace()
    if isinstance(region, Shell):
        return region.trace()
    raise UnsupportedRegion("no boundary contact form for this region")


# ---------------------------------------------------------------------------
# BV representations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CharacteristicRegion:
    region: object
    amplitude: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise DomainError("amplitude must be nonnegative")

    def scaled(self, lam):
        return CharacteristicRegion(self.region, self.amplitude * lam)


@dataclass(frozen=True)
class SmoothSampled:
    """u with gradient access; ``radial_profile``, when set, gives u as a
    function of |x| on a radial domain together with its derivative and the
    radii where smoothness may fail."""
    func: Callable                    # (m, 2) -> (m,)
    grad: Callable                    # (m, 2) -> (m, 2)
    radial_profile: Optional[Callable] = None    # r -> values
    radial_slope: Optional[Callable] = None      # r -> d/dr values
    breakpoints: tuple = ()
    label: str = ""

    def scaled(self, lam):
        return SmoothSampled(
            func=lambda x: lam * self.func(x),
            grad=lambda x: lam * self.grad(x),
            radial_profile=(None if self.radial_profile is None
                            else (lambda r: lam * self.radial_profile(r))),
            radial_slope=(None if self.radial_slope is None
                          else (lambda r: lam * self.radial_slope(r))),
            breakpoints=self.breakpoints, label=self.label)


@dataclass(frozen=True)
class PiecewiseLinear:
    mesh: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[0] != len(self.mesh.vertices):
            raise DomainError("vertex value count does not match the mesh")
        if not np.all(np.isfinite(vals)):
            raise DomainError("vertex values must be finite")
        object.__setattr__(self, "values", vals)

    def scaled(self, lam):
        return PiecewiseLinear(self.mesh, lam * self.values)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceReport:
    """The three integrals of the inequality for one function: boundary
    trace, total variation, volume integral, with per-field method tags and
    error estimates."""
    trace: float
    tv: float
    volume: float
    methods: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("trace", "tv", "volume"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and nonnegative")

    def to_dict(self):
        return {"trace": self.trace, "tv": self.tv, "volume": self.volume,
                "methods": dict(self.methods), "errors": dict(self.errors)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(trace=d["trace"], tv=d["tv"], volume=d["volume"],
                   methods=d.get("methods", {}), errors=d.get("errors", {}))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# Domain quadrature dispatch
# ---------------------------------------------------------------------------

def domain_integral(domain, F, tol=1e-9):
    """Integral of F over the domain via an exact-geometry mapped rule:
    polar rectangles for balls and annuli, graph strips for the lens-shaped
    corner and cusp domains, a plain rectangle for squares, clipped
    Cartesian cells otherwise."""
    cf = domain.closed_form
    kind = cf.kind if cf is not None else None
    if kind in ("ball", "annulus"):
        b = cf.params["b"]
        a = cf.params.get("a", 0.0)

        def g(pts):
            r, th = pts[:, 0], pts[:, 1]
            x = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
            return np.asarray(F(x)) * r

        return integrate2d(g, (a, b, 0.0, 2 * np.pi), tol=tol)
    if isinstance(domain, geometry.LensDomain):
        R = domain._half_width
        lower, upper = domain._lower, domain._upper

        def g(pts):
            x1, tau = pts[:, 0], pts[:, 1]
            lo = lower(x1)
            hi = upper(x1)
            x = np.stack([x1, lo + tau * (hi - lo)], axis=1)
            return np.asarray(F(x)) * (hi - lo)

        return integrate2d(g, (-R, R, 0.0, 1.0), tol=tol)
    if kind == "square":
        s0 = cf.params["side"]
        return integrate2d(lambda x: np.asarray(F(x)), (0, s0, 0, s0),
                           tol=tol)
    return clipped_cell_integral(domain, F, tol=tol)


def clipped_cell_integral(domain, F, tol=1e-6, h0=None, depth=12):
    """Generic fallback: tensor-product cells over the bounding box; cells
    straddling the boundary are subdivided to ``depth`` and then assigned
    by center containment.  Accuracy is O(final cell size), far looser than
    the mapped rules; intended for custom regions only."""
    d = domain.diameter
    if h0 is None:
        h0 = d / 16.0
    half = 0.55 * d
    xs = np.arange(-half, half + h0, h0)
    boxes = []
    for i in range(len(xs) - 1):
        for j in range(len(xs) - 1):
            boxes.append((xs[i], xs[i + 1], xs[j], xs[j + 1]))
    boxes = np.array(boxes)
    total = 0.0
    for level in range(depth + 1):
        if len(boxes) == 0:
            break
        corners = _box_corners(boxes)
        inside = np.asarray(domain.inside(corners.reshape(-1, 2)),
                            dtype=bool).reshape(len(boxes), 5)
        n_in = inside.sum(axis=1)
        full = n_in == 5
        empty = n_in == 0
        mixed = ~(full | empty)
        if np.any(full):
            total += _gauss_on_boxes(F, boxes[full])
        if level == depth:
            keep = mixed & inside[:, 4]
            if np.any(keep):
                total += _gauss_on_boxes(F, boxes[keep])
            break
        boxes = _split_boxes(boxes[mixed])
    return total


def _box_corners(boxes):
    x0, x1, y0, y1 = boxes.T
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    pts = np.stack([
        np.stack([x0, y0], axis=1), np.stack([x1, y0], axis=1),
        np.stack([x0, y1], axis=1), np.stack([x1, y1], axis=1),
        np.stack([xm, ym], axis=1)], axis=1)
    return pts


def _gauss_on_boxes(F, boxes, order=4):
    from .quadrature import gauss_rule
    x, w = gauss_rule(order)
    x0, x1, y0, y1 = boxes.T
    xm, xh = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
    ym, yh = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
    px = xm[:, None] + xh[:, None] * x[None, :]
    py = ym[:, None] + yh[:, None] * x[None, :]
    gx = np.repeat(px[:, :, None], order, axis=2).reshape(-1)
    gy = np.repeat(py[:, None, :], order, axis=1).reshape(-1)
    vals = np.asarray(F(np.stack([gx, gy], axis=1))).reshape(
        len(boxes), order, order)
    return float(np.einsum("pij,i,j->", vals, w, w)
                 * 1.0) if len(boxes) == 0 else float(
        np.sum((xh * yh) * np.einsum("pij,i,j->p", vals, w, w)))


def _split_boxes(boxes):
    if len(boxes) == 0:
        return boxes
    x0, x1, y0, y1 = boxes.T
    xm, ym = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    parts = [np.stack([x0, xm, y0, ym], axis=1),
             np.stack([xm, x1, y0, ym], axis=1),
             np.stack([x0, xm, ym, y1], axis=1),
             np.stack([xm, x1, ym, y1], axis=1)]
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# Surface integral
# ---------------------------------------------------------------------------

def surface_integral(domain, f, tol=1e-10):
    """Boundary integral of a scalar field f assembled chart by chart with
    the partition of unity: sum_i int phi_i(g_i(s)) f(g_i(s)) J_i(s,0) ds,
    each chart integrated adaptively to its share of ``tol``."""
    total = 0.0
    charts_1d = [c for c in domain.charts if c.param_dim == 1]
    per_tol = tol / max(1, len(charts_1d))
    for i, ch in enumerate(domain.charts):
        if ch.param_dim != 1:
            continue
        lo, hi = ch.domain_box[0]

        def integrand(s, ch=ch, i=i):
            w = domain.pou_weight(i, s)
            pts = ch.points(s)
            speed = np.linalg.norm(ch.dpoints(s)[:, :, 0], axis=1)
            return w * np.asarray(f(pts)) * speed

        total += integrate(integrand, lo, hi, tol=per_tol, max_depth=40)
    return total


def collar_integral(frame, F, t_max, tol=1e-9):
    """Integral over the one-sided tubular collar 0 < t < t_max of
    F(s, t) J(s, t), in chart coordinates (no clipping needed)."""
    lo, hi = frame.chart.domain_box[0]
    coeff_cache = {}

    def g(pts):
        s, t = pts[:, 0], pts[:, 1]
        key = s.tobytes()
        if key not in coeff_cache:
            coeff_cache.clear()
            coeff_cache[key] = jac_coeffs(s)
        c = coeff_cache[key]
        J = c[:, 0] + c[:, 1] * t if c.shape[1] == 2 else \
            c[:, 0] + c[:, 1] * t + c[:, 2] * t * t
        return np.asarray(F(s, t)) * J

    def jac_coeffs(s):
        return np.atleast_2d(geometry.jacobian_t_coefficients(frame, s))

    return integrate2d(g, (lo, hi, 0.0, t_max), tol=tol)


# ---------------------------------------------------------------------------
# The three integrals
# ---------------------------------------------------------------------------

def total_variation(u, domain=None):
    """Total mass of the distributional gradient.

    Indicator regions use amplitude times the relative perimeter; smooth
    samples integrate |grad u| with the mapped rule (radially when the
    profile is radial); piecewise linear functions sum |grad|_T area(T),
    which is exact.
    """
    if isinstance(u, CharacteristicRegion):
        return u.amplitude * region_perimeter(u.region)
    if isinstance(u, SmoothSampled):
        if u.radial_profile is not None and u.radial_slope is not None:
            a, b = _radial_limits(domain)
            return integrate(
                lambda r: np.abs(u.radial_slope(r)) * 2 * np.pi * r,
                a, b, tol=1e-10, breakpoints=u.breakpoints)
        return domain_integral(
            domain, lambda x: np.linalg.norm(u.grad(x), axis=1),
            tol=1e-9)
    if isinstance(u, PiecewiseLinear):
        grads = u.mesh.tri_gradients(u.values)
        return float(np.sum(np.linalg.norm(grads, axis=1) * u.mesh.areas))
    raise DomainError(f"unknown representation {type(u).__name__}")


def volume_integral(u, domain=None):
    """Integral of |u| over the domain."""
    if isinstance(u, CharacteristicRegion):
        return u.amplitude * region_volume(u.region)
    if isinstance(u, SmoothSampled):
        if u.radial_profile is not None:
            a, b = _radial_limits(domain)
            return integrate(
                lambda r: np.abs(u.radial_profile(r)) * 2 * np.pi * r,
                a, b, tol=1e-10, breakpoints=u.breakpoints)
        return domain_integral(domain, lambda x: np.abs(u.func(x)), tol=1e-9)
    if isinstance(u, PiecewiseLinear):
        tri_vals = u.values[u.mesh.triangles]
        return float(np.sum(_tri_abs_mean(tri_vals) * u.mesh.areas))
    raise DomainError(f"unknown representation {type(u).__name__}")


def trace_of(u, domain=None):
    """Boundary integral of |u|."""
    if isinstance(u, CharacteristicRegion):
        return u.amplitude * region_trace(u.region)
    if isinstance(u, SmoothSampled):
        return surface_integral(domain, lambda x: np.abs(u.func(x)),
                                tol=1e-10)
    if isinstance(u, PiecewiseLinear):
        mesh = u.mesh
        e = mesh.boundary_edges
        va = u.values[e[:, 0]]
        vb = u.values[e[:, 1]]
        lens = np.linalg.norm(mesh.vertices[e[:, 1]]
                              - mesh.vertices[e[:, 0]], axis=1)
        return float(np.sum(_edge_abs_mean(va, vb) * lens))
    raise DomainError(f"unknown representation {type(u).__name__}")


def _radial_limits(domain):
    cf = domain.closed_form
    if cf is None or cf.kind not in ("ball", "annulus"):
        raise DomainError("radial quadrature needs a ball or annulus")
    return cf.params.get("a", 0.0), cf.params["b"]


def _edge_abs_mean(a, b):
    """Mean of |linear| along an edge with endpoint values a, b (exact)."""
    same = a * b >= 0
    mixed = ~same
    out = np.abs(a + b) / 2.0
    if np.any(mixed):
        am, bm = a[mixed], b[mixed]
        out[mixed] = (am * am + bm * bm) / (2.0 * np.abs(bm - am))
    return out


def _tri_abs_mean(v):
    """Mean of |linear| over a triangle with vertex values v (m, 3), exact:
    decomposes against the zero line when the sign changes."""
    v = np.asarray(v, dtype=float)
    out = np.abs(v.sum(axis=1)) / 3.0
    sign_change = ~((v >= 0).all(axis=1) | (v <= 0).all(axis=1))
    if np.any(sign_change):
        w = np.sort(v[sign_change], axis=1)
        out[sign_change] = np.array(
            [_abs_mean_mixed(*row) for row in w])
    return out


def _abs_mean_mixed(a, b, c):
    # a <= b <= c with a < 0 < c; mean of |u| = mean(u) + 2*mean(u^-)
    mean = (a + b + c) / 3.0
    if b >= 0:
        # negative corner at a: the sublevel {u<0} is a triangle with value
        # fractions a/(a-b), a/(a-c); integral of u^- over it
        neg = -(a ** 3) / (3.0 * (a - b) * (a - c))
    else:
        # positive corner at c
        pos = (c ** 3) / (3.0 * (c - a) * (c - b))
        neg = pos - mean
    return mean + 2.0 * neg


# ---------------------------------------------------------------------------
# Layer functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Profile:
    """A layer profile zeta with zeta(0) = 1, decreasing on (0, 1), zero
    from 1 on."""
    value: Callable
    slope: Callable
    name: str = "profile"


def cubic_profile():
    def val(t):
        t = np.asarray(t, dtype=float)
        core = (1.0 - t) ** 2 * (1.0 + 2.0 * t)
        return np.where(t <= 0.0, 1.0, np.where(t >= 1.0, 0.0, core))

    def slope(t):
        t = np.asarray(t, dtype=float)
        core = -6.0 * t * (1.0 - t)
        return np.where((t <= 0.0) | (t >= 1.0), 0.0, core)

    return Profile(val, slope, "cubic")


def smooth_profile():
    """C-infinity profile 1 - smoothstep(t)."""
    def val(t):
        return 1.0 - np.asarray(geometry.smoothstep(t))

    def slope(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        mid = (t > 0.0) & (t < 1.0)
        if np.any(mid):
            tm = t[mid]
            a = np.exp(-1.0 / tm)
            b = np.exp(-1.0 / (1.0 - tm))
            da = a / tm ** 2
            db = -b / (1.0 - tm) ** 2
            out[mid] = -(da * b - a * db) / (a + b) ** 2
        return out

    return Profile(val, slope, "smooth")


def layer_function(domain, eps, zeta=None):
    """Boundary layer u(x) = zeta(d(x)/eps) with d the distance to the
    boundary; its trace is identically 1 and its gradient rides on the
    eikonal property |grad d| = 1."""
    if zeta is None:
        zeta = cubic_profile()
    reach = domain.reach_exact
    if reach is None:
        reach = geometry.reach_estimate(domain, 2000)
    if not (0 < eps < 0.5 * reach):
        raise EpsilonTooLarge(
            f"eps = {eps:g} not below reach/2 = {0.5 * reach:g}")
    cf = domain.closed_form
    if cf is not None and cf.kind in ("ball", "annulus"):
        b = cf.params["b"]
        a = cf.params.get("a", 0.0)

        def dist_r(r):
            r = np.asarray(r, dtype=float)
            return b - r if a == 0 else np.minimum(r - a, b - r)

        def func(x):
            x = np.atleast_2d(x)
            return zeta.value(dist_r(np.linalg.norm(x, axis=1)) / eps)

        def grad(x):
            x = np.atleast_2d(x)
            r = np.linalg.norm(x, axis=1)
            d = dist_r(r)
            ddr = np.where((a > 0) & (r - a < b - r), 1.0, -1.0)
            mag = zeta.slope(d / eps) / eps * ddr
            return x / np.maximum(r, 1e-300)[:, None] * mag[:, None]

        brk = tuple(p for p in
                    (a + eps, b - eps, 0.5 * (a + b) if a > 0 else None)
                    if p is not None)
        return SmoothSampled(
            func=func, grad=grad,
            radial_profile=lambda r: zeta.value(dist_r(r) / eps),
            radial_slope=lambda r: zeta.slope(dist_r(r) / eps) / eps
            * np.where((a > 0) & (np.asarray(r) - a < b - np.asarray(r)),
                       1.0, -1.0),
            breakpoints=brk, label=f"layer(eps={eps:g})")

    def func(x):
        d = geometry.signed_distance(domain, np.atleast_2d(x))
        return np.where(d > 0, zeta.value(np.maximum(d, 0.0) / eps), 0.0)

    def grad(x):
        x = np.atleast_2d(x)
        proj, d, _ = geometry.boundary_projection(domain, x)
        direction = (proj - x)
        nrm = np.linalg.norm(direction, axis=1, keepdims=True)
        direction = -direction / np.maximum(nrm, 1e-300)
        mag = zeta.slope(d / eps) / eps
        return direction * mag[:, None]

    return SmoothSampled(func=func, grad=grad,
                         label=f"layer(eps={eps:g})")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def report(u, domain=None):
    """Bundle (trace, tv, volume) for one function with method tags."""
    if isinstance(u, CharacteristicRegion):
        methods = {"trace": "closed-form", "tv": "closed-form",
                   "volume": "closed-form"}
        if isinstance(u.region, CuspSlab):
            methods["trace"] = "quadrature"
        errors = {"trace": 1e-12, "tv": 0.0, "volume": 0.0}
    elif isinstance(u, SmoothSampled):
        methods = {"trace": "quadrature", "tv": "quadrature",
                   "volume": "quadrature"}
        errors = {"trace": 1e-10, "tv": 1e-8, "volume": 1e-8}
    else:
        methods = {"trace": "closed-form", "tv": "closed-form",
                   "volume": "closed-form"}
        errors = {"trace": 0.0, "tv": 0.0, "volume": 0.0}
    return TraceReport(
        trace=trace_of(u, domain), tv=total_variation(u, domain),
        volume=volume_integral(u, domain), methods=methods, errors=errors)
