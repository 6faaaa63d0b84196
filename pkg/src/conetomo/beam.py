"""Divergent beam transform, directional derivatives and transport checks."""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .geometry import sphere_grid
from .report import ConsistencyReport

MAX_K = 2


@dataclass
class BeamData:
    """Evaluator ``u(a, v)`` for beam data of weight order ``k``.

    Attributes
    ----------
    n, k : int
    evaluator : callable
        ``evaluator(a, v)`` with ``a, v`` of shape (N, n), returning (N,).
    provenance : str
        ``"computed-from-field"`` or ``"external"``.
    domain : ConvexVertexSet, optional
        Closed set of admissible sources; ``None`` means unrestricted.
    field : ScalarField, optional
        Source field when computed from one.
    """

    n: int
    k: int
    evaluator: object
    provenance: str = "external"
    domain: object = None
    field: object = None
    meta: dict = dc_field(default_factory=dict)

    def __call__(self, a, v):
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        a, v = np.broadcast_arrays(a, v)
        return np.asarray(self.evaluator(np.ascontiguousarray(a),
                                         np.ascontiguousarray(v)), dtype=np.float64)


def _check_k(k):
    if k not in range(MAX_K + 1):
        raise ValueError(f"weight order k must be in 0..{MAX_K}, got {k}")


def divergent_beam_batch(field, a, v, k, threads=None, backend=None):
    """``R^k f(a, v) = int_0^inf f(a + r v) r^k dr`` for arrays of rays.

    Parameters
    ----------
    field : ScalarField
    a, v : array_like, shape (..., n)
        Sources and unit directions; broadcast against each other.
    k : int
        Weight order in 0..2.
    """
    _check_k(k)
    a = np.asarray(a, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    a, v = np.broadcast_arrays(a, v)
    shape = a.shape[:-1]
    out = kernels.beam_batch(a.reshape(-1, field.n), v.reshape(-1, field.n), k,
                             field.centers, field.radii, field.amps,
                             backend=backend, threads=threads)
    return out.reshape(shape)


def divergent_beam(field, a, v, k):
    """Single weighted ray integral; exactly 0 when the ray misses the support."""
    v = np.asarray(v, dtype=np.float64)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    return float(divergent_beam_batch(field, a, v, k))


def beam_data_from_field(field, k, domain=None, threads=None):
    """BeamData backed by ray quadrature of ``field``."""
    _check_k(k)

    def ev(a, v):
        return divergent_beam_batch(field, a, v, k, threads=threads)

    return BeamData(field.n, k, ev, "computed-from-field", domain, field)


# Central second-order stencils (offset multiples, weights) and the power
# of the step dividing them.
_CENTRAL = {
    0: ((0,), (1.0,), 0),
    1: ((-1, 1), (-0.5, 0.5), 1),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0), 2),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5), 3),
}

# One-sided four-point stencils on offsets 0, -1, -2, -3.
_BACKWARD = {
    0: ((1.0, 0.0, 0.0, 0.0), 0),
    1: ((11 / 6, -3.0, 1.5, -1 / 3), 1),
    2: ((2.0, -5.0, 4.0, -1.0), 2),
}


def stencil_reach(j, tau):
    """Largest offset used by :func:`directional_derivative`."""
    return max([abs(o) for o in _CENTRAL[j][0]]) * tau


def _central(u, a, v, j, tau):
    offs, wts, p = _CENTRAL[j]
    pts = a[None, :, :] + np.array(offs, float)[:, None, None] * tau * v[None, :, :]
    vals = u(pts.reshape(-1, a.shape[1]),
             np.broadcast_to(v, pts.shape).reshape(-1, a.shape[1]))
    vals = vals.reshape(len(offs), -1)
    return np.tensordot(np.array(wts), vals, axes=1) / tau ** p


def directional_derivative(u, a, v, j, tau, check_domain=True):
    """``(D_v)^j u(a, v)`` by central differences with one Richardson level.

    Steps ``tau`` and ``tau/2`` are combined as ``(4 D(tau/2) - D(tau)) / 3``.

    Parameters
    ----------
    u : BeamData or callable
    a, v : array_like, shape (n,) or (N, n)
    j : int
        Derivative order, at most 3.
    tau : float
        Outer step.

    Raises
    ------
    ValueError
        If a stencil point leaves ``u.domain``.
    """
    if j not in _CENTRAL:
        raise ValueError("derivative order must be in 0..3")
    a = np.asarray(a, dtype=np.float64)
    single = a.ndim == 1
    a2 = np.atleast_2d(a)
    v2 = np.broadcast_to(np.atleast_2d(np.asarray(v, dtype=np.float64)), a2.shape)
    domain = getattr(u, "domain", None)
    if check_domain and domain is not None and j > 0:
        reach = stencil_reach(j, tau)
        ok = ((domain.exit_time(a2, v2) >= reach * (1 - 1e-12))
              & (domain.exit_time(a2, -v2) >= reach * (1 - 1e-12)))
        if not np.all(ok):
            raise ValueError("finite-difference stencil exits the domain")
    if j == 0:
        out = u(a2, v2)
    else:
        out = (4.0 * _central(u, a2, v2, j, tau / 2) - _central(u, a2, v2, j, tau)) / 3.0
    return float(out[0]) if single else out


def backward_derivative(u, a, v, j, tau):
    """One-sided derivative from points ``a - i tau v``, ``i = 0..3``."""
    wts, p = _BACKWARD[j]
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    v = np.broadcast_to(np.atleast_2d(v), a.shape)
    pts = a[None] - np.arange(4.0)[:, None, None] * tau * v[None]
    vals = u(pts.reshape(-1, a.shape[1]),
             np.broadcast_to(v, pts.shape).reshape(-1, a.shape[1])).reshape(4, -1)
    return np.tensordot(np.array(wts), vals, axes=1) / tau ** p


def probe_directions(n, seed=0, count=8):
    """Fixed subset of sphere-grid directions used for spread statistics.

    n=2 returns the eight directions ``j pi / 4``; n=3 draws ``count``
    nodes of a degree-8 grid with the given seed.
    """
    if n == 2:
        return sphere_grid(2, count // 2).nodes
    g = sphere_grid(3, 8)
    idx = np.sort(np.random.default_rng(seed).choice(g.size, count, replace=False))
    return g.nodes[idx]


def interior_samples(A, spacing, reach, dirs):
    """Lattice points whose stencils of half-width ``reach`` fit along ``dirs``."""
    axes = [np.arange(c - r, c + r + 0.5 * spacing, spacing)
            for c, r in zip(A.center, A.radii)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, A.n)
    pts = pts[A.contains(pts, closed=False)]
    ok = np.ones(len(pts), dtype=bool)
    for v in dirs:
        ok &= A.exit_time(pts, v) >= reach
        ok &= A.exit_time(pts, -v) >= reach
    return pts[ok]


def check_transport_bvp(u, A, k, f=None, n_interior=200, n_boundary=64,
                        tau=None, tol_interior=1e-4, tol_boundary=1e-4,
                        directions=None, seed=0):
    """Test the transport boundary-value conditions on beam data.

    Interior: ``(D_v)^{k+1} u = (-1)^{k+1} k! f`` when ``f`` is given,
    otherwise independence of ``(D_v)^{k+1} u`` from ``v``. Boundary:
    ``(D_v)^j u = 0`` for ``j = 0..k`` on outflow pairs, with one-sided
    inward stencils. Residuals are divided by ``max(1, sup|u|)``.

    Parameters
    ----------
    u : BeamData
    A : ConvexVertexSet
    k : int
    f : ScalarField, optional
    n_interior : int
        Approximate number of interior lattice samples.
    n_boundary : int
        Number of boundary points.
    tau : float, optional
        FD step, default ``0.005 * diam(A)``.
    """
    _check_k(k)
    tau = 0.005 * A.diameter if tau is None else tau
    dirs = probe_directions(A.n, seed) if directions is None else np.asarray(directions)
    j = k + 1
    reach = stencil_reach(j, tau)
    vol = np.prod(2 * A.radii)
    pts = interior_samples(A, (vol / max(n_interior, 1)) ** (1.0 / A.n), reach, dirs)
    sup = 0.0
    rep = ConsistencyReport(meta={"k": k, "tau": tau, "n_interior": len(pts)})

    D = np.empty((len(dirs), len(pts)))
    for i, v in enumerate(dirs):
        D[i] = directional_derivative(u, pts, v, j, tau, check_domain=False)
        if len(pts):
            sup = max(sup, float(np.max(np.abs(u(pts, v)))))

    bnd = A.boundary_points(n_boundary)
    normals = A.normal(bnd)
    bres = np.zeros(k + 1)
    for v in dirs:
        sel = (normals @ v > 0) & (A.exit_time(bnd, -v) >= 3 * tau)
        if not sel.any():
            continue
        for jj in range(k + 1):
            vals = backward_derivative(u, bnd[sel], v, jj, tau)
            bres[jj] = max(bres[jj], float(np.max(np.abs(vals))))
            if jj == 0:
                sup = max(sup, float(np.max(np.abs(vals))))
    norm = max(1.0, sup)

    if len(pts) == 0:
        rep.add("transport_interior", np.nan, tol_interior, "no interior samples")
    elif f is not None:
        target = (-1) ** j * math.factorial(k) * f.eval(pts)
        rep.add("transport_interior", np.max(np.abs(D - target[None])) / norm,
                tol_interior, "(D_v)^{k+1} u vs (-1)^{k+1} k! f")
    else:
        rep.add("transport_interior", np.max(D.max(0) - D.min(0)) / norm,
                tol_interior, "spread of (D_v)^{k+1} u over directions")
    for jj in range(k + 1):
        rep.add(f"outflow_j{jj}", bres[jj] / norm, tol_boundary,
                "(D_v)^j u on the outflow boundary")
    return rep


def reconstruct_from_beam(u, A, k, v, points, tau=None):
    """``f = ((-1)^{k+1} / k!) (D_v)^{k+1} u`` at grid points.

    Parameters
    ----------
    points : ndarray, shape (..., n)
        Output grid nodes.

    Returns
    -------
    values : ndarray, shape (...)
        NaN at skipped nodes.
    valid : ndarray of bool
        False where the node lies outside ``A`` or too close to its
        boundary for the stencil.
    """
    _check_k(k)
    tau = 0.005 * A.diameter if tau is None else tau
    v = np.asarray(v, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64)
    flat = pts.reshape(-1, A.n)
    reach = stencil_reach(k + 1, tau)
    valid = A.contains(flat, closed=False)
    inside = flat[valid]
    valid[valid] = ((A.exit_time(inside, v) >= reach * (1 - 1e-12))
                    & (A.exit_time(inside, -v) >= reach * (1 - 1e-12)))
    out = np.full(len(flat), np.nan)
    if valid.any():
        d = directional_derivative(u, flat[valid], v, k + 1, tau, check_domain=False)
        out[valid] = (-1) ** (k + 1) / math.factorial(k) * d
    return out.reshape(pts.shape[:-1]), valid.reshape(pts.shape[:-1])
