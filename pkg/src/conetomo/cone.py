"""Conical Radon and Compton transforms, range checks and reconstruction."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .beam import (BeamData, backward_derivative, directional_derivative,
                   divergent_beam_batch, _check_k)
from .geometry import lattice_directions, sphere_grid
from .report import ConsistencyReport
from .spherical import SectionData, SGrid, check_sst_range, section_points, sst_limit

LIMIT_TAIL = (2.5e-4, 5e-4, 7.5e-4, 1e-3)
DEFAULT_TOL = {"even": 1e-8, "pde": 1e-3, "tail": 1e-3, "outflow": 1e-3,
               "independence": 1e-3, "shell": 1e-3, "lower": 1e-8}
# Seen from a detector plane a bump fills a narrow cone of directions, so the
# section-PDE terms are about 100 x sup|g| and the normalized residual needs
# the looser bound at affordable grids.
COMPTON_TOL = {**DEFAULT_TOL, "pde": 1e-2}


@dataclass
class ConeData:
    """Samples ``g(a, beta, s)`` over vertices x directions x cosines.

    Attributes
    ----------
    geometry : {"convex", "planar"}
    n, k : int
    vertices : ndarray, shape (V, n) for convex, (V, n-1) for planar
    beta_grid : SphereGrid
    sgrid : SGrid
    values : ndarray, shape (V, B, S)
    M : int
        Circle nodes used by the forward rule (n=3).
    layout : dict
        Vertex-layout metadata (lattice spacing, probe groups).
    """

    geometry: str
    n: int
    k: int
    vertices: np.ndarray
    beta_grid: object
    sgrid: SGrid
    values: np.ndarray
    M: int = 64
    layout: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.geometry not in ("convex", "planar"):
            raise ValueError(f"unknown geometry {self.geometry!r}")
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        vdim = self.n if self.geometry == "convex" else self.n - 1
        if self.vertices.ndim != 2 or self.vertices.shape[1] != vdim:
            raise ValueError("vertex array does not match geometry")
        self.values = np.asarray(self.values, dtype=np.float64)
        shape = (len(self.vertices), self.beta_grid.size, self.sgrid.values.size)
        if self.values.shape != shape:
            raise ValueError(f"values have shape {self.values.shape}, expected {shape}")

    def sources(self):
        """Vertices as points of ``R^n``."""
        if self.geometry == "convex":
            return self.vertices
        return np.concatenate([self.vertices, np.zeros((len(self.vertices), 1))], axis=1)

    def section(self, i):
        return SectionData(self.n, self.beta_grid, self.sgrid, self.values[i])

    def with_values(self, values):
        return replace(self, values=np.asarray(values, dtype=np.float64))


def cone_composed(field, a, beta, s, k, M=128):
    """``C^k f(a, beta, s) = S(R^k_a f)(beta, s)``."""
    pts, w = section_points(beta, [s], M)
    dirs = pts[0, 0]
    u = divergent_beam_batch(field, np.broadcast_to(np.asarray(a, float), dirs.shape),
                             dirs, k)
    return float(np.sum(u * w[0]))


def forward_cone(field, vertices, beta_grid, sgrid, k, M=64, geometry="convex",
                 layout=None, threads=None):
    """Cone data of ``field`` on vertices x ``beta_grid`` x ``sgrid``.

    Parameters
    ----------
    vertices : array_like
        Points of ``R^n`` (convex) or detector coordinates ``a_bar`` (planar).
    M : int
        Circle nodes for n=3.
    """
    _check_k(k)
    vertices = np.asarray(vertices, dtype=np.float64)
    data = ConeData(geometry, field.n, k, vertices, beta_grid, sgrid,
                    np.zeros((len(vertices), beta_grid.size, sgrid.values.size)),
                    M, dict(layout or {}))
    pts, w = section_points(beta_grid.nodes, sgrid.values, M)
    dirs = pts.reshape(-1, field.n)
    out = np.empty_like(data.values)
    for i, a in enumerate(data.sources()):
        u = divergent_beam_batch(field, np.broadcast_to(a, dirs.shape), dirs, k,
                                 threads=threads).reshape(pts.shape[:-1])
        out[i] = np.einsum("bsq,sq->bs", u, w)
    data.values = out
    return data


def _oracle_frame(beta):
    """Gram-Schmidt basis of the complement of ``beta``, shape (n-1, n)."""
    beta = np.asarray(beta, dtype=np.float64)
    n = beta.size
    if n == 2:
        return np.array([[-beta[1], beta[0]]])
    e = np.eye(3)[int(np.argmin(np.abs(beta)))]
    e1 = e - (e @ beta) * beta
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(beta, e1)])


def cone_direct_oracle(field, a, beta, s, k, eps=1e-3, n_r=64, n_c=64, n_phi=256,
                       width=10.0, weight=True):
    """Mollified-delta cone integral in polar coordinates about ``a``.

    Evaluates ``sqrt(1 - s^2) int f(x) d_eps((x - a).beta - |x - a| s)
    |x - a|^{k-n+2} dx`` with a Gaussian ``d_eps`` of width ``eps``.
    With ``x = a + r v`` the Gaussian only sees ``|v.beta - s| <~ eps / r``,
    so the angular quadrature is confined to a window of ``width * eps / r``
    around the cone; ``r`` uses composite Gauss-Legendre over the support
    hull.

    Parameters
    ----------
    n_r : int
        Radial panels of 16 Gauss-Legendre nodes.
    n_c : int
        Gauss-Legendre nodes per angular window.
    n_phi : int
        Azimuth nodes (n=3).
    weight : bool
        Include ``|x - a|^{k-n+2}``; disabling it is only meaningful when the
        exponent vanishes.
    """
    a = np.asarray(a, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    n = field.n
    if field.radii.size == 0:
        return 0.0
    dist = np.linalg.norm(field.centers - a, axis=1)
    r_lo = max(0.0, float(np.min(dist - field.radii)))
    r_hi = float(np.max(dist + field.radii))
    gx, gw = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(r_lo, r_hi, n_r + 1)
    half = 0.5 * np.diff(edges)
    r = (edges[:-1, None] + half[:, None] * (gx[None, :] + 1.0)).ravel()
    wr = (half[:, None] * gw[None, :]).ravel()
    cx, cw = np.polynomial.legendre.leggauss(n_c)
    frame = _oracle_frame(beta)
    expo = (k - n + 2) if weight else 0
    total = 0.0
    for ri, wri in zip(r, wr):
        hw = width * eps / ri
        if n == 2:
            psi = math.acos(s)
            dpsi = hw / max(math.sin(psi), 1e-300)
            lo, hi = max(0.0, psi - dpsi), min(math.pi, psi + dpsi)
            th = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cx
            wt = 0.5 * (hi - lo) * cw
            th = np.concatenate([th, -th])
            wt = np.concatenate([wt, wt])
            c = np.cos(th)
            v = np.cos(th)[:, None] * beta + np.sin(th)[:, None] * frame[0]
        else:
            lo, hi = max(-1.0, s - hw), min(1.0, s + hw)
            c1 = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cx
            w1 = 0.5 * (hi - lo) * cw
            phi = 2 * np.pi * np.arange(n_phi) / n_phi
            sn = np.sqrt(1.0 - c1 * c1)
            v = (c1[:, None, None] * beta
                 + sn[:, None, None] * (np.cos(phi)[None, :, None] * frame[0]
                                        + np.sin(phi)[None, :, None] * frame[1]))
            v = v.reshape(-1, 3)
            c = np.repeat(c1, n_phi)
            wt = np.repeat(w1, n_phi) * (2 * np.pi / n_phi)
        fx = field.eval(a + ri * v)
        y = ri * (c - s)
        delta = np.exp(-0.5 * (y / eps) ** 2) / (math.sqrt(2 * math.pi) * eps)
        total += wri * ri ** (n - 1) * ri ** expo * float(np.sum(wt * fx * delta))
    return math.sqrt(1.0 - s * s) * total


# ---------------------------------------------------------------------------
# Convex vertex layout


def lattice_step(v):
    """Length of the shortest lattice vector parallel to unit ``v``."""
    v = np.asarray(v, dtype=np.float64)
    nz = np.abs(v[np.abs(v) > 1e-12])
    m = v / nz.min()
    if not np.allclose(m, np.round(m), atol=1e-9):
        raise ValueError("direction is not a lattice direction")
    return float(np.linalg.norm(np.round(m)))


def crt_layout(A, spacing, n_probe=64, probe_tau=None):
    """Vertex lattice inside ``A`` plus outflow probe stencils.

    Returns
    -------
    vertices : ndarray, shape (V, n)
    layout : dict
        ``spacing``, ``n_lattice`` (leading vertices on the lattice) and
        probe groups: each probe is four consecutive vertices
        ``b - m tau v`` (``m = 0..3``) for a boundary point ``b`` and an
        outflow lattice direction ``v``.
    """
    n = A.n
    h = float(spacing)
    tau = 2 * h if probe_tau is None else float(probe_tau)
    N = np.ceil(A.radii / h).astype(int)
    axes = [A.center[i] + h * np.arange(-N[i], N[i] + 1) for i in range(n)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    lattice = pts[A.contains(pts, closed=False)]
    dirs = lattice_directions(n).nodes
    bnd = A.boundary_points(n_probe)
    normals = A.normal(bnd)
    probes, pdirs = [], []
    for b, nb in zip(bnd, normals):
        for j, v in enumerate(dirs):
            if nb @ v > 0 and A.exit_time(b, -v) >= 3 * tau:
                probes.append(b[None, :] - tau * np.arange(4.0)[:, None] * v[None, :])
                pdirs.append(j)
    probe_pts = np.concatenate(probes) if probes else np.zeros((0, n))
    vertices = np.concatenate([lattice, probe_pts])
    layout = {"spacing": h, "n_lattice": int(len(lattice)), "probe_tau": tau,
              "probe_dirs": pdirs}
    return vertices, layout


def limit_sgrid():
    """Cosine grid holding only the endpoint tails."""
    return SGrid(0, 0.95, LIMIT_TAIL, symmetric=False)


def forward_crt(field, A, k, spacing, n_probe=64, threads=None):
    """Endpoint cone data on the lattice layout, lattice directions only."""
    vertices, layout = crt_layout(A, spacing, n_probe)
    layout["domain"] = A.to_dict()
    return forward_cone(field, vertices, lattice_directions(A.n), limit_sgrid(), k,
                        M=64, layout=layout, threads=threads)


def extract_beam(g, side=1):
    """``u(a, beta)`` at every vertex and grid direction via endpoint limits."""
    out = np.empty(g.values.shape[:2])
    for i in range(len(g.vertices)):
        out[i] = sst_limit(g.section(i), side=side)
    return out


class _LookupEvaluator:
    """Beam data known only at (vertex, grid direction) pairs."""

    def __init__(self, points, dirs, table, scale):
        self.tree = cKDTree(points)
        self.dirs = cKDTree(dirs)
        self.table = table
        self.tol = 1e-7 * scale

    def __call__(self, a, v):
        da, ia = self.tree.query(a)
        dv, iv = self.dirs.query(v)
        if np.any(da > self.tol) or np.any(dv > 1e-9):
            raise ValueError("requested beam sample is not on the data layout")
        return self.table[ia, iv]


def lattice_beam(g, A=None, side=1):
    """BeamData backed by endpoint limits of convex cone data."""
    u = extract_beam(g, side)
    h = g.layout.get("spacing", 1.0)
    ev = _LookupEvaluator(g.sources(), g.beta_grid.nodes, u, h)
    return BeamData(g.n, g.k, ev, "external", A, meta={"table": u})


def _boundary_distance(A, pts):
    if A.kind == "ball":
        return A.radii[0] - np.linalg.norm(pts - A.center, axis=1)
    dirs = sphere_grid(A.n, 8).nodes
    return np.min(np.stack([A.exit_time(pts, v) for v in dirs]), axis=0)


def _stencil_ok(A, pts, v, reach):
    return ((A.exit_time(pts, v) >= reach * (1 + 1e-9))
            & (A.exit_time(pts, -v) >= reach * (1 + 1e-9)))


def _crt_independence_dirs(n):
    if n == 2:
        return lattice_directions(2).nodes
    s = 1 / math.sqrt(2)
    return np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [s, s, 0], [s, -s, 0],
                     [s, 0, s], [0, s, s], [0, s, -s]], dtype=np.float64)


def check_crt_range(g, A, k, g_limit=None, tol=None, margin=None, prefix=""):
    """Range conditions for convex-geometry cone data.

    Per-vertex section conditions run on ``g``. The endpoint-limit beam
    data ``u`` comes from ``g_limit`` (lattice layout from
    :func:`forward_crt`), or from ``g`` itself when it carries a lattice
    layout. On ``u`` the check tests the outflow conditions, directional
    independence of ``(D_v)^{k+1} u``, and its vanishing on the shell of
    width ``margin`` (default ``0.1 diam(A)``) inside the boundary.
    """
    if g.geometry != "convex":
        raise ValueError("check_crt_range needs convex cone data")
    _check_k(k)
    tol = {**DEFAULT_TOL, **(tol or {})}
    rep = ConsistencyReport(meta={"geometry": "convex", "k": k})
    _sst_aggregate(g, tol, rep, prefix)
    gl = g if g_limit is None else g_limit
    if "n_lattice" not in gl.layout:
        raise ValueError("endpoint data carry no lattice layout")
    rep.extend(_beam_conditions(gl, A, k, tol, margin), prefix)
    return rep


def _sst_aggregate(g, tol, rep, prefix=""):
    worst = {}
    for i in range(len(g.vertices)):
        r = check_sst_range(g.section(i), tol["even"], tol["pde"], tol["tail"])
        for e in r.entries:
            if e.name not in worst or not (e.residual <= worst[e.name].residual):
                worst[e.name] = e
    for name, e in worst.items():
        rep.add(prefix + name, e.residual, e.threshold, e.note)


def _beam_conditions(gl, A, k, tol, margin):
    rep = ConsistencyReport()
    u = lattice_beam(gl, A)
    table = u.meta["table"]
    norm = max(1.0, float(np.max(np.abs(table))) if table.size else 0.0)
    h = gl.layout["spacing"]
    nl = gl.layout["n_lattice"]
    lat = gl.vertices[:nl]
    j = k + 1

    # outflow boundary, one-sided probe stencils
    tau_p = gl.layout["probe_tau"]
    pd = gl.layout["probe_dirs"]
    bres = np.zeros(k + 1)
    for p, di in enumerate(pd):
        b = gl.vertices[nl + 4 * p]
        v = gl.beta_grid.nodes[di]
        for jj in range(k + 1):
            bres[jj] = max(bres[jj], float(np.abs(backward_derivative(u, b, v, jj, tau_p))[0]))
    for jj in range(k + 1):
        rep.add(f"outflow_j{jj}", bres[jj] / norm, tol["outflow"])

    # directional independence and shell vanishing on the lattice
    margin = 0.1 * A.diameter if margin is None else margin
    dist = _boundary_distance(A, lat)
    dirs = _crt_independence_dirs(A.n)
    D = np.full((len(dirs), nl), np.nan)
    for i, v in enumerate(dirs):
        tau = 2 * h * lattice_step(v)
        ok = _stencil_ok(A, lat, v, 2 * tau if j == 3 else tau)
        if ok.any():
            D[i, ok] = directional_derivative(u, lat[ok], v, j, tau, check_domain=False)
    full = np.all(np.isfinite(D), axis=0)
    if full.any():
        spread = np.max(D[:, full].max(0) - D[:, full].min(0)) / norm
        rep.add("directional_independence", spread, tol["independence"])
    else:
        rep.add("directional_independence", np.nan, tol["independence"],
                "no vertex admits all stencils")
    shell = (dist < margin) & np.any(np.isfinite(D), axis=0)
    if shell.any():
        rep.add("compact_support_shell", np.nanmax(np.abs(D[:, shell])) / norm,
                tol["shell"])
    else:
        rep.add("compact_support_shell", np.nan, tol["shell"], "no shell vertices")
    return rep


def reconstruct_from_crt(g_limit, A, k, v=None):
    """``f`` at lattice vertices from endpoint cone data.

    Returns
    -------
    points : ndarray, shape (P, n)
        Lattice vertices.
    values : ndarray, shape (P,)
        NaN where the stencil along ``v`` leaves ``A``.
    valid : ndarray of bool
    """
    _check_k(k)
    v = np.eye(A.n)[0] if v is None else np.asarray(v, dtype=np.float64)
    u = lattice_beam(g_limit, A)
    h = g_limit.layout["spacing"]
    lat = g_limit.vertices[:g_limit.layout["n_lattice"]]
    tau = 2 * h * lattice_step(v)
    reach = 2 * tau if k + 1 == 3 else tau
    valid = _stencil_ok(A, lat, v, reach)
    out = np.full(len(lat), np.nan)
    if valid.any():
        d = directional_derivative(u, lat[valid], v, k + 1, tau, check_domain=False)
        out[valid] = (-1) ** (k + 1) / math.factorial(k) * d
    return lat, out, valid


# ---------------------------------------------------------------------------
# Planar geometry


def check_compton_range(g, k, planar=None, tol=None, prefix=""):
    """Range conditions for planar-detector cone data.

    Runs the section conditions per detector point, extracts ``u(a_bar, v)``
    by endpoint limits and requires it to vanish for ``v_n <= 0``. The
    projective-data conditions are delegated to
    :func:`conetomo.planar.check_planar_range` when ``planar`` (keyword
    arguments for it) is given.
    """
    if g.geometry != "planar":
        raise ValueError("check_compton_range needs planar cone data")
    _check_k(k)
    tol = {**COMPTON_TOL, **(tol or {})}
    rep = ConsistencyReport(meta={"geometry": "planar", "k": k})
    _sst_aggregate(g, tol, rep, prefix)
    u = extract_beam(g)
    norm = max(1.0, float(np.max(np.abs(u))) if u.size else 0.0)
    lower = g.beta_grid.nodes[:, -1] <= 0
    res = float(np.max(np.abs(u[:, lower]))) / norm if lower.any() else 0.0
    rep.add(prefix + "lower_hemisphere", res, tol["lower"])
    if planar is not None:
        from .planar import check_planar_range
        rep.extend(check_planar_range(**planar), prefix)
    return rep


# ---------------------------------------------------------------------------
# Corruption injectors


def corrupt_multiplicative(g, eps, freq=1.0):
    """Multiply values by ``1 + eps sin(freq a_1)`` per vertex."""
    fac = 1.0 + eps * np.sin(freq * g.vertices[:, 0])
    return g.with_values(g.values * fac[:, None, None])


def corrupt_noise(g, eps, seed=0):
    """Add white noise of standard deviation ``eps * max|g|``."""
    rng = np.random.default_rng(seed)
    scale = eps * (float(np.max(np.abs(g.values))) if g.values.size else 0.0)
    return g.with_values(g.values + scale * rng.standard_normal(g.values.shape))


def corrupt_s_shift(g, delta):
    """Resample every ``g(a, beta, .)`` at ``s + delta`` by cubic splines."""
    s = g.sgrid.values
    spl = CubicSpline(s, g.values, axis=2, extrapolate=True)
    return g.with_values(spl(s + delta))


def corrupt_beam(u, eps, freq=1.0):
    """Beam data multiplied by ``1 + eps sin(freq a_1)``."""
    base = u.evaluator

    def ev(a, v):
        return base(a, v) * (1.0 + eps * np.sin(freq * a[:, 0]))

    return BeamData(u.n, u.k, ev, "external", u.domain, None, dict(u.meta))
