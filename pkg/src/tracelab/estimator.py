"""Estimation of the optimal trace constant on a triangulated domain.

The continuous problem minimizes (total variation + c2 * volume) over
nonnegative functions with unit boundary integral; the reciprocal of the
minimum is the best constant c1 of the proportional inequality
trace <= c1 * (tv + c2 * volume).  Discretely the minimization runs over
piecewise-linear functions on a mesh, either by projected gradient descent
on a smoothed variation energy with a continuation schedule, or by a
linear program that replaces the Euclidean gradient norm with its
polyhedral underestimate over K directions (exact up to cos(pi/K)).
"""

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import bv_calculus as bv
from . import mesh as meshmod
from .errors import DomainError, EmptyFamily, LPInfeasible, NoConvergence
from .trace_inequality import write_csv


@dataclass(frozen=True)
class SmoothedDescent:
    """Continuation over sqrt(|grad u|^2 + eps^2) smoothing.

    eps runs down the schedule 1e-2 * 10^(-k/2); each stage runs projected
    Armijo descent until the relative objective change drops below ``tol``.
    """
    stages: int = 9
    eps0: float = 1e-2
    max_iters: int = 500
    tol: float = 1e-7

    def schedule(self):
        return self.eps0 * 10.0 ** (-0.5 * np.arange(self.stages))


@dataclass(frozen=True)
class PolyhedralLP:
    """Linear-programming relaxation over K gradient directions."""
    K: int = 32

    def __post_init__(self):
        if self.K < 8:
            raise DomainError("need at least 8 directions")


@dataclass(frozen=True)
class QuotientProblem:
    mesh: meshmod.Mesh
    c2: float
    solver: object = field(default_factory=SmoothedDescent)

    def __post_init__(self):
        if not np.isfinite(self.c2) or self.c2 < 0:
            raise DomainError("c2 must be finite and nonnegative")


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of one quotient minimization.

    ``objective`` is the accepted value of tv + c2 * volume at unit
    boundary integral; ``c1_estimate`` is its reciprocal, the constant the
    mesh certifies for the proportional inequality.
    """
    c1_estimate: float
    objective: float
    minimizer: np.ndarray
    iterations: int
    converged: bool
    h: float
    solver: str
    c2: float
    c2_below_sharp: bool = False
    stats: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.c1_estimate < 0:
            raise DomainError("c1 estimate must be nonnegative")
        if np.min(self.minimizer) < -1e-10:
            raise DomainError("minimizer must be nonnegative")

    def to_dict(self):
        return {"c1_estimate": self.c1_estimate, "objective": self.objective,
                "iterations": self.iterations, "converged": self.converged,
                "h": self.h, "solver": self.solver, "c2": self.c2,
                "c2_below_sharp": self.c2_below_sharp,
                "stats": dict(self.stats),
                "minimizer": np.asarray(self.minimizer).tolist()}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["minimizer"] = np.array(d["minimizer"])
        return cls(**d)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

class Assembly:
    """Sparse operators of the discrete energy on one mesh."""

    def __init__(self, mesh, c2):
        self.mesh = mesh
        self.c2 = float(c2)
        v = mesh.vertices
        t = mesh.triangles
        n = len(v)
        m = len(t)
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        e1, e2 = p1 - p0, p2 - p0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        rows = np.repeat(np.arange(m), 3)
        cols = t.reshape(-1)
        gx = np.stack([(e1[:, 1] - e2[:, 1]) / det, e2[:, 1] / det,
                       -e1[:, 1] / det], axis=1).reshape(-1)
        gy = np.stack([(e2[:, 0] - e1[:, 0]) / det, -e2[:, 0] / det,
                       e1[:, 0] / det], axis=1).reshape(-1)
        self.Gx = sp.csr_matrix((gx, (rows, cols)), shape=(m, n))
        self.Gy = sp.csr_matrix((gy, (rows, cols)), shape=(m, n))
        self.areas = mesh.areas
        vol = np.zeros(n)
        np.add.at(vol, t.reshape(-1), np.repeat(self.areas / 3.0, 3))
        self.vol_weights = vol
        bnd = np.zeros(n)
        e = mesh.boundary_edges
        lens = mesh.boundary_lengths()
        np.add.at(bnd, e[:, 0], 0.5 * lens)
        np.add.at(bnd, e[:, 1], 0.5 * lens)
        self.bnd_weights = bnd
        self.boundary_measure = float(lens.sum())
        self.volume_measure = float(self.areas.sum())

    def tv(self, u):
        wx = self.Gx @ u
        wy = self.Gy @ u
        return float(np.sum(self.areas * np.hypot(wx, wy)))

    def energy(self, u):
        return self.tv(u) + self.c2 * float(self.vol_weights @ np.abs(u))

    def energy_smoothed(self, u, eps):
        wx = self.Gx @ u
        wy = self.Gy @ u
        rho = np.sqrt(wx * wx + wy * wy + eps * eps)
        val = float(np.sum(self.areas * rho)) \
            + self.c2 * float(self.vol_weights @ u)
        gx = self.Gx.T @ (self.areas * wx / rho)
        gy = self.Gy.T @ (self.areas * wy / rho)
        return val, gx + gy + self.c2 * self.vol_weights

    def quotient(self, u):
        """(tv + c2 volume)/trace of arbitrary nonnegative vertex values."""
        tr = float(self.bnd_weights @ np.abs(u))
        if tr <= 0:
            raise DomainError("candidate has zero boundary integral")
        return (self.tv(u) + self.c2
                * float(self.vol_weights @ np.abs(u))) / tr

    def normalize(self, u):
        u = np.maximum(np.asarray(u, dtype=float), 0.0)
        tr = float(self.bnd_weights @ u)
        if tr <= 0:
            raise DomainError("candidate has zero boundary integral")
        return u / tr


def project_feasible(u, b, iters=100):
    """Euclidean projection onto {u >= 0, b . u = 1} with b >= 0.

    The multiplier solves sum_i b_i max(0, u_i + lam b_i) = 1, a monotone
    piecewise-linear equation handled by bisection.
    """
    u = np.asarray(u, dtype=float)
    pos = b > 0

    def total(lam):
        return float(b[pos] @ np.maximum(0.0, u[pos] + lam * b[pos]))

    lo, hi = -1.0, 1.0
    bmax = float(np.max(b[pos]))
    while total(lo) > 1.0:
        lo *= 2.0
        if lo < -1e18:
            break
    while total(hi) < 1.0:
        hi *= 2.0
        if hi > 1e18:
            break
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if total(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    out = np.maximum(0.0, u + lam * b)
    out[~pos] = np.maximum(0.0, u[~pos])
    return out


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------

def minimize_quotient(problem, strict=False):
    """Minimize the discrete quotient; dispatches on the solver tag."""
    asm = Assembly(problem.mesh, problem.c2)
    sharp = asm.boundary_measure / asm.volume_measure
    below = problem.c2 < sharp - 1e-12
    if isinstance(problem.solver, PolyhedralLP):
        return _solve_lp(problem, asm, below)
    return _solve_descent(problem, asm, below, strict=strict)


def _solve_descent(problem, asm, below, strict=False):
    cfg = problem.solver
    b = asm.bnd_weights
    u = asm.normalize(np.ones(asm.mesh.num_vertices))
    total_iters = 0
    converged = True
    alpha = 1.0
    for eps in cfg.schedule():
        f, g = asm.energy_smoothed(u, eps)
        stage_converged = False
        for _ in range(cfg.max_iters):
            total_iters += 1
            # projected Armijo step with backtracking
            accepted = False
            alpha = min(alpha * 2.0, 1e6)
            for _ in range(40):
                cand = project_feasible(u - alpha * g, b)
                fc, gc = asm.energy_smoothed(cand, eps)
                dec = float(np.sum((u - cand) ** 2)) / max(alpha, 1e-300)
                if fc <= f - 1e-4 * dec:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                stage_converged = True
                break
            rel = abs(f - fc) / max(abs(f), 1e-300)
            u, f, g = cand, fc, gc
            if rel < cfg.tol:
                stage_converged = True
                break
        converged = stage_converged
    if strict and not converged:
        raise NoConvergence("descent stalled above the stage tolerance")
    m_val = asm.energy(u)
    return EstimateResult(
        c1_estimate=1.0 / m_val, objective=m_val, minimizer=u,
        iterations=total_iters, converged=converged, h=problem.mesh.h,
        solver="smoothed-descent", c2=problem.c2, c2_below_sharp=below,
        stats={"stages": cfg.stages, "final_eps": float(cfg.schedule()[-1]),
               "quotient_of_ones": asm.quotient(
                   np.ones(asm.mesh.num_vertices))})


def _solve_lp(problem, asm, below):
    from scipy.optimize import linprog
    K = problem.solver.K
    mesh = problem.mesh
    n = mesh.num_vertices
    m = len(mesh.triangles)
    thetas = 2 * np.pi * np.arange(K) / K
    blocks = []
    for th in thetas:
        Dk = np.cos(th) * asm.Gx + np.sin(th) * asm.Gy
        blocks.append(sp.hstack([Dk, -sp.identity(m, format="csr")]))
    A_ub = sp.vstack(blocks, format="csr")
    b_ub = np.zeros(K * m)
    A_eq = sp.csr_matrix(
        np.concatenate([asm.bnd_weights, np.zeros(m)])[None, :])
    c = np.concatenate([problem.c2 * asm.vol_weights, asm.areas])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=(0, None), method="highs")
    if res.status == 2:
        raise LPInfeasible("polyhedral LP infeasible; assembly bug")
    if res.status != 0:
        raise NoConvergence(f"LP solver failed with status {res.status}")
    u = np.maximum(res.x[:n], 0.0)
    m_val = float(res.fun)
    return EstimateResult(
        c1_estimate=1.0 / m_val, objective=m_val, minimizer=u,
        iterations=int(res.nit), converged=True, h=mesh.h,
        solver=f"polyhedral-lp({K})", c2=problem.c2, c2_below_sharp=below,
        stats={"directions": K, "cos_margin": float(np.cos(np.pi / K)),
               "euclidean_tv_at_lp_minimizer": asm.tv(u)})


# ---------------------------------------------------------------------------
# Certificates, candidates, convergence studies
# ---------------------------------------------------------------------------

def certificate_family_bound(family, c2):
    """Best closed-form lower bound max (trace - c2 volume)/tv over the
    family members; rigorous for any valid c1 at this c2, independent of
    meshes and solvers."""
    if len(family.reports) == 0:
        raise EmptyFamily("no family members")
    vals = [(rp.trace - c2 * rp.volume) / rp.tv for rp in family.reports]
    return float(np.max(vals))


def uniform_candidate(mesh):
    asm = Assembly(mesh, 0.0)
    return asm.normalize(np.ones(mesh.num_vertices))


def layer_candidate(mesh, domain, eps, zeta=None):
    """Vertex interpolant of the boundary-layer profile, normalized."""
    u = bv.layer_function(domain, eps, zeta)
    vals = np.asarray(u.func(mesh.vertices), dtype=float)
    asm = Assembly(mesh, 0.0)
    return asm.normalize(vals)


def corner_slab_candidate(mesh, corner, r):
    """Tent profile max(0, 1 - dist_1(x, corner)/r), the wedge-slab
    witness used on square meshes."""
    d = np.abs(mesh.vertices - np.asarray(corner, dtype=float)).sum(axis=1)
    vals = np.maximum(0.0, 1.0 - d / r)
    asm = Assembly(mesh, 0.0)
    return asm.normalize(vals)


def refine_study(domain, c2, h_seq, solver=None, strict=False):
    """Solve the quotient problem across a decreasing mesh-size sequence.

    Returns the EstimateResult list; monotonicity of the estimates is
    recorded by the caller, not assumed here.  Wall times are kept in the
    per-run stats (and the JSON serialization), not in the CSV columns,
    so repeated runs produce identical CSV bytes.
    """
    h_seq = list(h_seq)
    if any(h2 >= h1 for h1, h2 in zip(h_seq, h_seq[1:])):
        raise DomainError("mesh sizes must be strictly decreasing")
    results = []
    for h in h_seq:
        msh = meshmod.build_mesh(domain, h)
        t0 = time.perf_counter()
        res = minimize_quotient(QuotientProblem(
            mesh=msh, c2=c2,
            solver=solver if solver is not None else SmoothedDescent()),
            strict=strict)
        wall = time.perf_counter() - t0
        stats = dict(res.stats)
        stats["wall_time"] = wall
        stats["num_vertices"] = msh.num_vertices
        results.append(EstimateResult(
            c1_estimate=res.c1_estimate, objective=res.objective,
            minimizer=res.minimizer, iterations=res.iterations,
            converged=res.converged, h=res.h, solver=res.solver,
            c2=res.c2, c2_below_sharp=res.c2_below_sharp, stats=stats))
    return results


def refine_study_csv(path, results):
    rows = np.array([[r.h, r.c1_estimate, r.iterations] for r in results])
    write_csv(path, ["h", "c1_estimate", "iterations"], rows)


def refine_study_json(results):
    payload = [r.to_dict() for r in results]
    for entry in payload:
        entry.pop("minimizer")
    return json.dumps(payload, indent=2, sort_keys=True)
