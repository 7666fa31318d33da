"""Triangle meshes for the domain catalog.

Each generator produces a conforming, positively oriented triangulation
with boundary vertices lying exactly on the domain boundary:

* disc: a butterfly layout (square core, four transfinite flank blocks);
* annulus: a polar O-grid;
* square: a uniform right-isosceles grid graded into the corners by
  conforming longest-edge bisection (8 generations, factor 1/2 per ring);
* cusp / corner lens: vertical graph strips with column widths halving
  ring by ring toward the singular point, columns joined by a greedy
  chain triangulation.
"""

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import MeshFailure


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray        # (n, 2)
    triangles: np.ndarray       # (m, 3) int, positively oriented
    boundary_edges: np.ndarray  # (k, 2) int
    h: float
    label: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_edges",
                           np.asarray(self.boundary_edges, dtype=np.int64))
        a = _signed_areas(v, t)
        if np.any(a <= 1e-14):
            raise MeshFailure(
                f"triangle area below threshold: min {a.min():.3e}")
        object.__setattr__(self, "_areas", a)

    @property
    def areas(self):
        return self._areas

    @property
    def num_vertices(self):
        return len(self.vertices)

    def tri_gradients(self, values):
        """Gradient of the piecewise-linear interpolant on each triangle."""
        v = self.vertices
        t = self.triangles
        u = np.asarray(values, dtype=float)
        p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
        e1, e2 = p1 - p0, p2 - p0
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        d1 = u[t[:, 1]] - u[t[:, 0]]
        d2 = u[t[:, 2]] - u[t[:, 0]]
        gx = (e2[:, 1] * d1 - e1[:, 1] * d2) / det
        gy = (-e2[:, 0] * d1 + e1[:, 0] * d2) / det
        return np.stack([gx, gy], axis=1)

    def min_angle(self):
        v = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            a = v[:, (k + 1) % 3] - v[:, k]
            b = v[:, (k + 2) % 3] - v[:, k]
            cosang = np.einsum("mi,mi->m", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cosang, -1, 1))))
        return float(np.min(angles))

    def boundary_loops(self):
        """Boundary edges chained into closed loops (lists of vertex ids)."""
        succ = {}
        for a, b in self.boundary_edges:
            succ.setdefault(int(a), []).append(int(b))
        loops = []
        unused = {(int(a), int(b)) for a, b in self.boundary_edges}
        while unused:
            start = next(iter(unused))
            loop = [start[0]]
            edge = start
            while True:
                unused.discard(edge)
                loop.append(edge[1])
                nxts = [b for b in succ.get(edge[1], ())
                        if (edge[1], b) in unused]
                if not nxts:
                    break
                edge = (edge[1], nxts[0])
            if loop[0] != loop[-1]:
                raise MeshFailure("boundary edges do not close into loops")
            loops.append(loop[:-1])
        return loops

    def boundary_lengths(self):
        e = self.boundary_edges
        return np.linalg.norm(self.vertices[e[:, 1]]
                              - self.vertices[e[:, 0]], axis=1)


def _signed_areas(v, t):
    p0, p1, p2 = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
                  - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0]))


class _Builder:
    """Vertex-deduplicating accumulator for block-structured meshes."""

    def __init__(self):
        self.verts = []
        self.lookup = {}
        self.tris = []

    def vertex(self, p):
        key = (float(p[0]).hex(), float(p[1]).hex())
        idx = self.lookup.get(key)
        if idx is None:
            idx = len(self.verts)
            self.verts.append((float(p[0]), float(p[1])))
            self.lookup[key] = idx
        return idx

    def triangle(self, a, b, c):
        pa, pb, pc = (np.array(self.verts[i]) for i in (a, b, c))
        cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) \
            - (pb[1] - pa[1]) * (pc[0] - pa[0])
        if cross < 0:
            b, c = c, b
        if abs(cross) > 1e-16:
            self.tris.append((a, b, c))

    def quad(self, a, b, c, d):
        # a-b-c-d counterclockwise; split along the shorter diagonal
        pa, pb, pc, pd = (np.array(self.verts[i]) for i in (a, b, c, d))
        if np.linalg.norm(pc - pa) <= np.linalg.norm(pd - pb):
            self.triangle(a, b, c)
            self.triangle(a, c, d)
        else:
            self.triangle(a, b, d)
            self.triangle(b, c, d)

    def finish(self, h, label=""):
        v = np.array(self.verts)
        t = np.array(self.tris, dtype=np.int64)
        be = _boundary_edges(t)
        return Mesh(vertices=v, triangles=t, boundary_edges=be, h=h,
                    label=label)


def _boundary_edges(tris):
    count = {}
    orient = {}
    for tri in tris:
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            key = (min(a, b), max(a, b))
            count[key] = count.get(key, 0) + 1
            orient[key] = (a, b)
    edges = [orient[k] for k, c in count.items() if c == 1]
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


# ---------------------------------------------------------------------------
# Disc: butterfly layout
# ---------------------------------------------------------------------------

def _disc_mesh(b, h):
    c0 = 0.5 * b
    n0 = max(3, int(round(0.5 * np.pi * b / h)))      # intervals per side
    nr = max(2, int(round(1.15 * (b - c0) / h)))      # ring layers
    bld = _Builder()
    xs = np.linspace(-c0, c0, n0 + 1)
    xs = 0.5 * (xs - xs[::-1])                        # exactly symmetric
    # core square
    core = np.empty((n0 + 1, n0 + 1), dtype=np.int64)
    for i in range(n0 + 1):
        for j in range(n0 + 1):
            core[i, j] = bld.vertex((xs[i], xs[j]))
    for i in range(n0):
        for j in range(n0):
            bld.quad(core[i, j], core[i + 1, j],
                     core[i + 1, j + 1], core[i, j + 1])
    # square perimeter nodes counterclockwise from the bottom-left corner
    perim = []
    perim += [core[i, 0] for i in range(n0)]            # bottom
    perim += [core[n0, j] for j in range(n0)]           # right
    perim += [core[n0 - i, n0] for i in range(n0)]      # top
    perim += [core[0, n0 - j] for j in range(n0)]       # left
    n_ring = 4 * n0
    thetas = -0.75 * np.pi + 2 * np.pi * np.arange(n_ring) / n_ring
    ring = np.empty((nr + 1, n_ring), dtype=np.int64)
    ring[0] = perim
    for k in range(n_ring):
        p = np.array(bld.verts[perim[k]])
        q = b * np.array([np.cos(thetas[k]), np.sin(thetas[k])])
        for j in range(1, nr + 1):
            w = j / nr
            pt = q if j == nr else p + w * (q - p)
            ring[j, k] = bld.vertex(tuple(pt))
    for j in range(nr):
        for k in range(n_ring):
            kp = (k + 1) % n_ring
            bld.quad(ring[j, k], ring[j, kp], ring[j + 1, kp], ring[j + 1, k])
    return bld.finish(h, label=f"disc_h{h:g}")


# ---------------------------------------------------------------------------
# Annulus: polar O-grid
# ---------------------------------------------------------------------------

def _annulus_mesh(a, b, h):
    n_theta = max(12, int(round(2 * np.pi * (0.5 * (a + b)) / h)))
    n_r = max(2, int(round((b - a) / h)))
    bld = _Builder()
    thetas = np.linspace(0.0, 2 * np.pi, n_theta + 1)[:-1]
    rs = np.linspace(a, b, n_r + 1)
    grid = np.empty((n_theta, n_r + 1), dtype=np.int64)
    for i, th in enumerate(thetas):
        for j, r in enumerate(rs):
            grid[i, j] = bld.vertex((r * np.cos(th), r * np.sin(th)))
    for i in range(n_theta):
        ip = (i + 1) % n_theta
        for j in range(n_r):
            bld.quad(grid[i, j], grid[ip, j], grid[ip, j + 1], grid[i, j + 1])
    return bld.finish(h, label=f"annulus_h{h:g}")


# ---------------------------------------------------------------------------
# Square: right-isosceles grid + conforming corner bisection
# ---------------------------------------------------------------------------

class _BisectionMesh:
    """Triangles stored as (v0, v1, v2) with refinement edge (v0, v1),
    kept compatible by recursive longest-edge bisection."""

    def __init__(self, verts, tris):
        self.verts = [tuple(map(float, p)) for p in verts]
        self.vlookup = {(_hx(p[0]), _hx(p[1])): i
                        for i, p in enumerate(self.verts)}
        self.tris = [tuple(map(int, t)) for t in tris]
        self.alive = [True] * len(self.tris)
        self.edge_map = {}
        for idx, t in enumerate(self.tris):
            self._register(idx)

    def _register(self, idx):
        t = self.tris[idx]
        for k in range(3):
            key = _ekey(t[k], t[(k + 1) % 3])
            self.edge_map.setdefault(key, set()).add(idx)

    def _unregister(self, idx):
        t = self.tris[idx]
        for k in range(3):
            key = _ekey(t[k], t[(k + 1) % 3])
            self.edge_map.get(key, set()).discard(idx)

    def _midpoint(self, a, b):
        pa, pb = self.verts[a], self.verts[b]
        p = (0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]))
        key = (_hx(p[0]), _hx(p[1]))
        idx = self.vlookup.get(key)
        if idx is None:
            idx = len(self.verts)
            self.verts.append(p)
            self.vlookup[key] = idx
        return idx

    def _neighbor(self, idx, key):
        for j in self.edge_map.get(key, ()):
            if j != idx and self.alive[j]:
                return j
        return None

    def bisect(self, idx, depth=0):
        if not self.alive[idx]:
            return
        if depth > 64:
            raise MeshFailure("bisection recursion ran away")
        v0, v1, v2 = self.tris[idx]
        key = _ekey(v0, v1)
        nb = self._neighbor(idx, key)
        if nb is not None:
            n0, n1, _ = self.tris[nb]
            if _ekey(n0, n1) != key:
                self.bisect(nb, depth + 1)
                nb = self._neighbor(idx, key)
        m = self._midpoint(v0, v1)
        self._split_pair(idx, m)
        if nb is not None and self.alive[nb]:
            self._split_pair(nb, m)

    def _split_pair(self, idx, m):
        v0, v1, v2 = self.tris[idx]
        self.alive[idx] = False
        self._unregister(idx)
        for child in ((v2, v0, m), (v1, v2, m)):
            self.tris.append(child)
            self.alive.append(True)
            self._register(len(self.tris) - 1)

    def to_mesh(self, h, label=""):
        v = np.array(self.verts)
        keep = [t for t, ok in zip(self.tris, self.alive) if ok]
        t = np.array(keep, dtype=np.int64)
        areas = _signed_areas(v, t)
        flip = areas < 0
        t[flip] = t[flip][:, [0, 2, 1]]
        be = _boundary_edges(t)
        return Mesh(vertices=v, triangles=t, boundary_edges=be, h=h,
                    label=label)


def _hx(x):
    return float(x).hex()


def _ekey(a, b):
    return (a, b) if a < b else (b, a)


def _square_mesh(side, h, corner_generations=16):
    # two bisections halve the local length scale, so 16 generations give
    # the 8 rings of factor-1/2 grading at each corner
    n = max(2, int(round(side / h)))
    xs = np.linspace(0.0, side, n + 1)
    verts = []
    vid = {}
    for j in range(n + 1):
        for i in range(n + 1):
            vid[(i, j)] = len(verts)
            verts.append((xs[i], xs[j]))
    tris = []
    for i in range(n):
        for j in range(n):
            a, b_, c, d = (vid[(i, j)], vid[(i + 1, j)],
                           vid[(i + 1, j + 1)], vid[(i, j + 1)])
            # hypotenuse on the cell diagonal a-c for both halves
            tris.append((a, c, b_))
            tris.append((c, a, d))
    bm = _BisectionMesh(verts, tris)
    corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
    for _ in range(corner_generations):
        targets = []
        for idx, t in enumerate(bm.tris):
            if not bm.alive[idx]:
                continue
            for v in t:
                p = bm.verts[v]
                if any(abs(p[0] - cx) < 1e-12 and abs(p[1] - cy) < 1e-12
                       for cx, cy in corners):
                    targets.append(idx)
                    break
        for idx in targets:
            if bm.alive[idx]:
                bm.bisect(idx)
    return bm.to_mesh(h, label=f"square_h{h:g}")


# ---------------------------------------------------------------------------
# Lens domains (cusp, corner): graded vertical strips
# ---------------------------------------------------------------------------

def _lens_ring_width(rho, h2):
    """Band width outside a ring of radius rho: uniform h2 far out, then
    halving with the radius (factor 1/2 per ring) toward the apex."""
    return min(h2, 0.5 * rho)


def _lens_radii(rho_cap, h, generations=8):
    """Ring radii from the cap inward; widths follow _lens_ring_width and
    the descent stops after the grading has halved ``generations`` times."""
    h2 = min(h, rho_cap / 8.0)
    r_min = 2.0 * h2 * 0.5 ** generations
    radii = [rho_cap]
    r = rho_cap
    while r > r_min:
        r = r - _lens_ring_width(r, h2)
        radii.append(r)
    return radii, h2


def _lens_ring_chain(bld, domain, rho, h2):
    """Nodes of one ring: a circular arc clipped to the lens, endpoints on
    the profile (or the exact junctions for the cap ring itself)."""
    c, rho_cap = domain._cap
    R = domain._half_width
    eta = float(domain._lower(R))
    profile = domain._lower
    y_c = c * rho / rho_cap
    if abs(rho - rho_cap) < 1e-14 * rho_cap:
        t_end = R
        y_end = eta
    else:
        # profile point at ring distance: bisection on
        # |(t, psi(t)) - (0, y_c)| = rho, increasing in t
        lo_t, hi_t = 0.0, R
        for _ in range(80):
            mid = 0.5 * (lo_t + hi_t)
            if np.hypot(mid, float(profile(mid)) - y_c) < rho:
                lo_t = mid
            else:
                hi_t = mid
        t_end = 0.5 * (lo_t + hi_t)
        y_end = float(profile(t_end))
    theta_max = np.arctan2(t_end, y_end - y_c)
    arclen = 2.0 * theta_max * rho
    spacing = 0.85 * _lens_ring_width(rho, h2)
    n = max(2, int(np.ceil(arclen / spacing)))
    thetas = np.linspace(-theta_max, theta_max, n + 1)
    nodes = []
    for k, th in enumerate(thetas):
        if k == 0:
            p = (-t_end, y_end)
        elif k == n:
            p = (t_end, y_end)
        else:
            p = (rho * np.sin(th), y_c + rho * np.cos(th))
        nodes.append(bld.vertex(p))
    return nodes


def _lens_mesh(domain, h):
    """Rings around the apex morphing into the closure cap: concentric
    polar bands for the corner domain, sliding-center arcs for the cusp.
    Ring widths halve toward the apex (8 generations); the innermost disc
    is fanned from the apex vertex."""
    radii, h2 = _lens_radii(domain._cap[1], h)
    bld = _Builder()
    chains = [_lens_ring_chain(bld, domain, rho, h2) for rho in radii]
    apex = [bld.vertex((0.0, 0.0))]
    chains.append(apex)
    for inner, outer in zip(chains[1:], chains[:-1]):
        _join_chains(bld, inner, outer)
    return bld.finish(h, label=f"{domain.label}_h{h:g}")


def _join_chains(bld, left, right):
    """Greedy shortest-diagonal triangulation between two vertical vertex
    chains sorted by increasing y."""
    a, b = 0, 0
    na, nb = len(left) - 1, len(right) - 1
    pv = lambda i: np.array(bld.verts[i])
    while a < na or b < nb:
        can_a, can_b = a < na, b < nb
        if can_a and can_b:
            da = np.linalg.norm(pv(left[a + 1]) - pv(right[b]))
            db = np.linalg.norm(pv(right[b + 1]) - pv(left[a]))
            take_a = da <= db
        else:
            take_a = can_a
        if take_a:
            bld.triangle(left[a], right[b], left[a + 1])
            a += 1
        else:
            bld.triangle(left[a], right[b], right[b + 1])
            b += 1


# ---------------------------------------------------------------------------
# Entry point, snapping, refinement
# ---------------------------------------------------------------------------

def build_mesh(domain, h):
    """Structured triangulation of a catalog domain with boundary vertices
    on the true boundary; raises MeshFailure when the target size is too
    coarse or snapping breaks orientation."""
    if h >= domain.diameter / 10.0:
        raise MeshFailure("target length must be below diameter / 10")
    cf = domain.closed_form
    kind = cf.kind if cf is not None else None
    if kind == "ball":
        mesh = _disc_mesh(cf.params["b"], h)
    elif kind == "annulus":
        mesh = _annulus_mesh(cf.params["a"], cf.params["b"], h)
    elif kind == "square":
        mesh = _square_mesh(cf.params["side"], h)
    elif isinstance(domain, geometry.LensDomain):
        if cf is not None and cf.kind == "cone_corner" \
                and cf.params["L"] > 1.2:
            raise MeshFailure("strip meshing supports wall slopes up to 1.2")
        mesh = _lens_mesh(domain, h)
    else:
        raise MeshFailure(f"no mesh generator for domain {domain.label!r}")
    _check_boundary_snap(domain, mesh)
    return mesh


def _check_boundary_snap(domain, mesh):
    bidx = np.unique(mesh.boundary_edges.reshape(-1))
    pts = mesh.vertices[bidx]
    _, dist, _ = geometry.boundary_projection(domain, pts)
    tol = mesh.h ** 2 / 10.0
    if np.max(dist) > tol:
        raise MeshFailure(
            f"boundary vertex off the boundary by {np.max(dist):.3e} "
            f"(tolerance {tol:.3e})")


def refine_uniform(mesh):
    """Red refinement: every triangle split into four via edge midpoints.
    The interpolated piecewise-linear space is preserved exactly."""
    v = [tuple(p) for p in mesh.vertices]
    lookup = {(_hx(p[0]), _hx(p[1])): i for i, p in enumerate(v)}

    def midpoint(a, b):
        p = (0.5 * (v[a][0] + v[b][0]), 0.5 * (v[a][1] + v[b][1]))
        key = (_hx(p[0]), _hx(p[1]))
        if key not in lookup:
            lookup[key] = len(v)
            v.append(p)
        return lookup[key]

    tris = []
    for a, b, c in mesh.triangles:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
    t = np.array(tris, dtype=np.int64)
    varr = np.array(v)
    areas = _signed_areas(varr, t)
    t[areas < 0] = t[areas < 0][:, [0, 2, 1]]
    return Mesh(vertices=varr, triangles=t,
                boundary_edges=_boundary_edges(t), h=mesh.h / 2,
                label=mesh.label + "_refined")


def interpolate_linear(mesh_fine, mesh_coarse, values_coarse):
    """Values of a coarse PL function at the vertices of a refinement
    produced by refine_uniform (midpoint averaging reproduces it exactly)."""
    lookup = {(_hx(p[0]), _hx(p[1])): i
              for i, p in enumerate(mesh_coarse.vertices)}
    out = np.empty(len(mesh_fine.vertices))
    coarse_vals = np.asarray(values_coarse, dtype=float)
    known = {}
    for i, p in enumerate(mesh_coarse.vertices):
        known[(_hx(p[0]), _hx(p[1]))] = coarse_vals[i]
    # midpoints: average of the two parents; find parents by matching
    # against coarse edges
    edge_mid = {}
    for a, b, c in mesh_coarse.triangles:
        for x, y in ((a, b), (b, c), (c, a)):
            px, py = mesh_coarse.vertices[x], mesh_coarse.vertices[y]
            mid = (0.5 * (px[0] + py[0]), 0.5 * (px[1] + py[1]))
            edge_mid[(_hx(mid[0]), _hx(mid[1]))] = 0.5 * (
                coarse_vals[x] + coarse_vals[y])
    for i, p in enumerate(mesh_fine.vertices):
        key = (_hx(p[0]), _hx(p[1]))
        if key in known:
            out[i] = known[key]
        elif key in edge_mid:
            out[i] = edge_mid[key]
        else:
            raise MeshFailure("vertex not traceable to the coarse mesh")
    return out
