"""Sharp constants, slack evaluation, and the counterexample families.

The inequality under study bounds the boundary integral of |u| by
c1 * (total variation) + c2 * (volume integral).  On balls and annuli the
pair (1, N(a^(N-1)+b^(N-1))/(b^N-a^N)) is optimal and tight at u = 1; at a
corner of wall slope L the trace/variation ratio of shrinking wedge slabs
forces c1 >= sqrt(1+L^2); on a cusp of exponent alpha < 1 no finite c2
rescues c1 = 1, and the scaled indicators break lower semicontinuity of
the variation-minus-trace functional.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import bv_calculus as bv
from . import geometry
from .errors import (BadRadii, DeltaTooLarge, EmptyFamily, EpsilonTooLarge,
                     NonPositiveData, OutOfInterval, WrongDomain)
from .geometry import unit_ball_volume


@dataclass(frozen=True)
class InequalityConstants:
    c1: float
    c2: float

    def __post_init__(self):
        if not (np.isfinite(self.c1) and np.isfinite(self.c2)):
            raise BadRadii("constants must be finite")
        if self.c1 < 0 or self.c2 < 0:
            raise BadRadii("constants must be nonnegative")


def slack(report, constants):
    """c1 * tv + c2 * volume - trace; nonnegative means the inequality
    holds for this function."""
    return constants.c1 * report.tv + constants.c2 * report.volume \
        - report.trace


def implied_c1(report, c2):
    """(trace - c2 * volume) / tv: the lower bound this function forces on
    any valid c1 paired with the given c2."""
    return (report.trace - c2 * report.volume) / report.tv


# ---------------------------------------------------------------------------
# Radial closed forms
# ---------------------------------------------------------------------------

def radial_sharp_c2(a, b, dim):
    """N(a^(N-1) + b^(N-1)) / (b^N - a^N), the sharp volume-term constant
    on the annulus a < |x| < b (a = 0 for the ball).  Equals the
    surface-to-volume ratio |bd Omega| / |Omega|."""
    if not (0 <= a < b) or dim < 2:
        raise BadRadii(f"need 0 <= a < b and dim >= 2, got ({a}, {b}, {dim})")
    n = dim
    return n * (a ** (n - 1) + b ** (n - 1)) / (b ** n - a ** n)


def _kernel_poly_coeffs(a, b, dim):
    """Coefficients (highest degree first) of
    Phi(t) = (b^N - a^N) t^(N-1) - (b^(N-1) - a^(N-1)) t^N
             - a^(N-1) b^(N-1) (b - a)."""
    n = dim
    coeffs = np.zeros(n + 1)
    coeffs[0] = -(b ** (n - 1) - a ** (n - 1))
    coeffs[1] = b ** n - a ** n
    coeffs[-1] = -(a ** (n - 1)) * (b ** (n - 1)) * (b - a)
    return coeffs


def radial_kernel_gap(a, b, dim, t):
    """t^(N-1) minus the two-endpoint interpolation kernel
    (a^(N-1)(b^N - t^N) + b^(N-1)(t^N - a^N)) / (b^N - a^N).

    Vanishing at t = a and t = b, positive in between.  Evaluated in the
    deflated form (t-a)(b-t) S(t) / (b^N - a^N) so the endpoint zeros are
    exact in floating point.
    """
    if not (0 <= a < b) or dim < 2:
        raise BadRadii(f"need 0 <= a < b and dim >= 2")
    t_arr = np.asarray(t, dtype=float)
    if np.any((t_arr < a) | (t_arr > b)):
        raise OutOfInterval(f"t must lie in [{a}, {b}]")
    phi = _kernel_poly_coeffs(a, b, dim)
    # divide out the exact roots a and b
    q1, r1 = np.polydiv(phi, np.array([1.0, -a]))
    q2, r2 = np.polydiv(q1, np.array([1.0, -b]))
    s_of_t = np.polyval(q2, t_arr)
    scale = b ** dim - a ** dim
    out = (t_arr - a) * (b - t_arr) * (-s_of_t) / scale
    return float(out) if np.ndim(t) == 0 else out


def radial_critical_point(a, b, dim):
    """t_c = ((N-1)/N) (b^N - a^N) / (b^(N-1) - a^(N-1)), the unique
    interior critical point of the kernel gap (a > 0 required)."""
    if not (0 < a < b) or dim < 2:
        raise BadRadii("need 0 < a < b (the formula degenerates at a = 0)")
    n = dim
    return (n - 1) / n * (b ** n - a ** n) / (b ** (n - 1) - a ** (n - 1))


def kernel_gap_grid_min(a, b, dim, n_grid=10_000):
    """Brute-force oracle: minimum of the kernel gap over a uniform grid."""
    t = np.linspace(a, b, n_grid)
    return float(np.min(radial_kernel_gap(a, b, dim, t)))


def kernel_gap_scaled_derivative(a, b, dim, t, step=3e-6):
    """Central difference of the gap at t, nondimensionalized: parameter
    mapped to [0, 1] and values divided by the grid maximum, so the check
    |phi'(t_c)| ~ 0 is meaningful at any radii scale."""
    span = b - a
    scale = max(np.max(np.abs(radial_kernel_gap(
        a, b, dim, np.linspace(a, b, 512)))), 1e-300)
    tau = (t - a) / span
    hi = a + np.minimum(tau + step, 1.0) * span
    lo = a + np.maximum(tau - step, 0.0) * span
    return float((radial_kernel_gap(a, b, dim, hi)
                  - radial_kernel_gap(a, b, dim, lo))
                 / (scale * ((hi - lo) / span)))


def radial_inequality_check(u, domain, tol_factor=1e-6):
    """Slack of one function at the sharp radial pair (1, c2*); the domain
    must be a ball or annulus.  Returns (slack value, report)."""
    cf = domain.closed_form
    if cf is None or cf.kind not in ("ball", "annulus"):
        raise WrongDomain("radial check needs a ball or annulus")
    a = cf.params.get("a", 0.0)
    b = cf.params["b"]
    rep = bv.report(u, domain)
    k = InequalityConstants(1.0, radial_sharp_c2(a, b, domain.ambient_dim))
    s = slack(rep, k)
    return s, rep


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

def geometric_radii(r0=0.1, ratio=0.5, count=20):
    """Default strictly decreasing parameter sequence r0 * ratio^k."""
    if not (0 < ratio < 1) or r0 <= 0 or count < 1:
        raise BadRadii("need r0 > 0, 0 < ratio < 1, count >= 1")
    return r0 * ratio ** np.arange(count)


@dataclass(frozen=True)
class FamilySweep:
    """Per-parameter reports of one shrinking family, with the derived
    slack and implied-c1 columns at the constants used."""
    family: str
    radii: np.ndarray
    reports: tuple
    constants: InequalityConstants
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if np.any(r <= 0) or np.any(np.diff(r) >= 0):
            raise BadRadii("parameters must be positive, strictly decreasing")
        object.__setattr__(self, "radii", r)
        if len(self.reports) == 0:
            raise EmptyFamily("family sweep has no members")

    def column(self, name):
        if name == "r":
            return self.radii
        if name in ("trace", "tv", "volume"):
            return np.array([getattr(rp, name) for rp in self.reports])
        if name == "slack":
            return np.array([slack(rp, self.constants)
                             for rp in self.reports])
        if name == "implied_c1":
            return np.array([implied_c1(rp, self.constants.c2)
                             for rp in self.reports])
        if name in self.extra:
            return np.asarray(self.extra[name])
        raise KeyError(name)

    def rows(self):
        cols = [self.column(c) for c in
                ("r", "trace", "tv", "volume", "slack", "implied_c1")]
        return np.stack(cols, axis=1)

    def to_csv(self, path):
        write_csv(path, ["r", "trace", "tv", "volume", "slack",
                         "implied_c1"], self.rows())

    def to_dict(self):
        return {
            "family": self.family,
            "constants": {"c1": self.constants.c1, "c2": self.constants.c2},
            "r": self.radii.tolist(),
            "reports": [rp.to_dict() for rp in self.reports],
            "extra": {k: np.asarray(v).tolist()
                      for k, v in self.extra.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(family=d["family"], radii=np.array(d["r"]),
                   reports=tuple(bv.TraceReport.from_dict(rp)
                                 for rp in d["reports"]),
                   constants=InequalityConstants(**d["constants"]),
                   extra={k: np.array(v) for k, v in d["extra"].items()})


def write_csv(path, header, rows):
    """Versioned CSV writer with reproducible float formatting."""
    lines = ["# tracelab-csv v1", ",".join(header)]
    for row in np.atleast_2d(rows):
        lines.append(",".join(_fmt(x) for x in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def cone_family_report(L, r, dim=2, eta=0.5):
    """Closed-form report of the corner wedge slab at parameter r:
    trace = sqrt(1+L^2) om r^(N-1), tv = om r^(N-1),
    volume = om (L/N) r^N."""
    region = bv.ConeSlab(L=L, r=r, dim=dim, eta=eta)
    return bv.TraceReport(
        trace=region.trace(), tv=region.perimeter(), volume=region.volume(),
        methods={"trace": "closed-form", "tv": "closed-form",
                 "volume": "closed-form"},
        errors={"trace": 0.0, "tv": 0.0, "volume": 0.0})


def cone_sweep(L, radii=None, c2=10.0, dim=2, eta=0.5):
    radii = geometric_radii() if radii is None else np.asarray(radii, float)
    reports = tuple(cone_family_report(L, r, dim, eta) for r in radii)
    return FamilySweep(family="cone", radii=radii, reports=reports,
                       constants=InequalityConstants(1.0, c2),
                       extra={"L": np.full(len(radii), L)})


def cusp_family_report(alpha, dim, r, eta=0.5):
    """Report of the cusp slab: trace by 1d quadrature of the lateral area
    element, tv and volume in closed form.  Returns (report, excess,
    leading_term) with excess = trace - tv computed without cancellation.
    """
    region = bv.CuspSlab(alpha=alpha, r=r, dim=dim, eta=eta)
    excess = region.trace_excess()
    rep = bv.TraceReport(
        trace=region.perimeter() + excess, tv=region.perimeter(),
        volume=region.volume(),
        methods={"trace": "quadrature", "tv": "closed-form",
                 "volume": "closed-form"},
        errors={"trace": 1e-13 * max(r, 1e-30), "tv": 0.0, "volume": 0.0})
    return rep, excess, region.leading_term()


def cusp_sweep(alpha, dim=2, radii=None, c2=100.0, eta=0.5):
    radii = geometric_radii() if radii is None else np.asarray(radii, float)
    reports, excesses, leads = [], [], []
    for r in radii:
        rep, ex, lead = cusp_family_report(alpha, dim, r, eta)
        reports.append(rep)
        excesses.append(ex)
        leads.append(lead)
    return FamilySweep(family="cusp", radii=radii, reports=tuple(reports),
                       constants=InequalityConstants(1.0, c2),
                       extra={"excess": np.array(excesses),
                              "leading_term": np.array(leads)})


def cusp_slack_onset(sweep):
    """Largest parameter in the sweep at which the slack is negative, and
    the negativity mask; None when no member violates."""
    s = sweep.column("slack")
    neg = s < 0
    if not np.any(neg):
        return None, neg
    return float(sweep.radii[neg].max()), neg


def jminus_sequence(alpha, dim, r, eta=0.5):
    """Scaled cusp indicators v = A chi_E with A = r^-(N-1+2alpha).

    Returns a dict with the variation-minus-trace value J- (negative, with
    limit -(N-1) om / (2(N-1+2alpha))), the L1 norm (vanishing like
    r^(1-alpha)), and the variation-plus-trace value J+ (nonnegative).
    """
    rep, excess, lead = cusp_family_report(alpha, dim, r, eta)
    amp = r ** (-(dim - 1 + 2 * alpha))
    jm = amp * (rep.tv - rep.trace)
    jm_exact = -amp * excess
    jp = amp * (rep.tv + rep.trace)
    l1 = amp * rep.volume
    return {"r": r, "amplitude": amp, "jminus": jm_exact, "jplus": jp,
            "l1_norm": l1,
            "limit": -(dim - 1) * unit_ball_volume(dim - 1)
            / (2 * (dim - 1 + 2 * alpha))}


def shell_bound_sweep(domain, deltas, c2):
    """Interior-shell lower bounds (|bd Omega| - c2 |Q_d|) / P(Q_d, Omega)
    forced on c1, one per shell width; tends to 1 as the width vanishes."""
    cf = domain.closed_form
    if cf is None or cf.kind not in ("ball", "annulus"):
        raise WrongDomain("shell sweep needs a ball or annulus")
    deltas = np.asarray(deltas, dtype=float)
    reach = domain.reach_exact
    if np.any(deltas >= 0.5 * reach):
        raise DeltaTooLarge("every delta must be below reach/2")
    rows = []
    for d in deltas:
        region = bv.Shell(domain=domain, delta=float(d),
                          dim=domain.ambient_dim)
        bound = (region.trace() - c2 * region.volume()) / region.perimeter()
        rows.append((d, region.trace(), region.perimeter(),
                     region.volume(), bound))
    return np.array(rows)


def layer_bound_sweep(domain, eps_seq, zeta=None, c2=None):
    """Smooth boundary-layer sweep: per thickness, the triple (trace, tv,
    volume) of u = zeta(d/eps) by quadrature, plus the implied c1 bound."""
    if zeta is None:
        zeta = bv.cubic_profile()
    if c2 is None:
        cf = domain.closed_form
        a = cf.params.get("a", 0.0)
        c2 = radial_sharp_c2(a, cf.params["b"], domain.ambient_dim)
    rows = []
    for eps in np.asarray(eps_seq, dtype=float):
        u = bv.layer_function(domain, float(eps), zeta)
        rep = bv.report(u, domain)
        rows.append((eps, rep.trace, rep.tv, rep.volume,
                     implied_c1(rep, c2)))
    return np.array(rows)


# ---------------------------------------------------------------------------
# Asymptotic fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares power law y ~ prefactor * r^exponent on a log-log
    window (default: the smallest 8 parameters)."""
    exponent: float
    prefactor: float
    residual: float
    window: tuple

    def to_dict(self):
        return {"exponent": self.exponent, "prefactor": self.prefactor,
                "residual": self.residual, "window": list(self.window)}


def fit_exponent(radii, values, window=8):
    """log-log least squares over the smallest ``window`` parameters.

    Requires at least 4 positive pairs; nonpositive values are rejected.
    """
    r = np.asarray(radii, dtype=float)
    y = np.asarray(values, dtype=float)
    ok = (r > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 4:
        raise NonPositiveData(
            f"need at least 4 positive pairs, got {int(ok.sum())}")
    r, y = r[ok], y[ok]
    order = np.argsort(r)
    take = order[:max(4, min(window, len(r)))]
    lx, ly = np.log(r[take]), np.log(y[take])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    return AsymptoticFit(
        exponent=float(slope), prefactor=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid ** 2))),
        window=tuple(int(i) for i in take))


# ---------------------------------------------------------------------------
# Random smooth test functions
# ---------------------------------------------------------------------------

def random_trig_polynomial(rng, degree=3, terms=4, offset=1.5):
    """A positive random trigonometric polynomial with analytic gradient.

    The constant offset exceeds the oscillation budget so |u| = u and the
    only absolute-value kinks left in the integrands are the isolated
    zeros of the gradient.
    """
    amps = rng.uniform(-1.0, 1.0, terms)
    amps *= 1.0 / max(1.0, np.abs(amps).sum())
    freqs = rng.integers(-degree, degree + 1, size=(terms, 2)).astype(float)
    phases = rng.uniform(0, 2 * np.pi, terms)
    const = offset * 1.0

    def func(x):
        x = np.atleast_2d(x)
        out = np.full(x.shape[0], const)
        for a, k, p in zip(amps, freqs, phases):
            out += a * np.cos(x @ k + p)
        return out

    def grad(x):
        x = np.atleast_2d(x)
        out = np.zeros_like(x)
        for a, k, p in zip(amps, freqs, phases):
            out += (-a * np.sin(x @ k + p))[:, None] * k[None, :]
        return out

    return bv.SmoothSampled(func=func, grad=grad, label="trig")
