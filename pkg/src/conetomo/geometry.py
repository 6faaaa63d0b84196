"""Convex vertex sets, sphere quadrature grids and ray geometry."""

from dataclasses import dataclass, field

import numpy as np

BOUNDARY_TOL = 1e-10


@dataclass(frozen=True)
class ConvexVertexSet:
    """Open ball or axis-aligned ellipsoid ``{sum(((x - c) / r)**2) < 1}``."""

    center: np.ndarray
    radii: np.ndarray
    kind: str = "ellipsoid"

    def __post_init__(self):
        c = np.asarray(self.center, dtype=np.float64).ravel()
        r = np.asarray(self.radii, dtype=np.float64).ravel()
        if r.size == 1:
            r = np.full(c.size, r[0])
        if r.size != c.size or c.size not in (2, 3):
            raise ValueError("center and radii must have matching dimension 2 or 3")
        if np.any(r <= 0):
            raise ValueError("radii must be positive")
        if self.kind not in ("ball", "ellipsoid"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "ball" and not np.all(r == r[0]):
            raise ValueError("ball needs equal radii")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radii", r)

    @property
    def n(self):
        return self.center.size

    @property
    def diameter(self):
        return 2.0 * float(self.radii.max())

    def _scaled(self, a):
        return (np.asarray(a, dtype=np.float64) - self.center) / self.radii

    def level(self, a):
        """``sum(y**2) - 1`` in scaled coordinates: negative inside."""
        y = self._scaled(a)
        return np.sum(y * y, axis=-1) - 1.0

    def contains(self, a, closed=True):
        lv = self.level(a)
        return lv <= BOUNDARY_TOL if closed else lv < -BOUNDARY_TOL

    def on_boundary(self, a):
        return np.abs(self.level(a)) <= BOUNDARY_TOL

    def normal(self, a):
        """Outward unit normal at boundary points ``a``."""
        g = self._scaled(a) / self.radii
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def exit_time(self, a, v):
        """Forward exit time ``inf{t > 0 : a + t v not in A}``.

        Broadcasts over leading axes of ``a`` and ``v``.

        Raises
        ------
        ValueError
            If a point lies strictly outside the closed set.
        """
        y = self._scaled(a)
        w = np.asarray(v, dtype=np.float64) / self.radii
        A = np.sum(w * w, axis=-1)
        B = np.sum(y * w, axis=-1)
        C = np.sum(y * y, axis=-1) - 1.0
        if np.any(C > BOUNDARY_TOL):
            raise ValueError("point lies outside the vertex set")
        disc = np.maximum(B * B - A * C, 0.0)
        t = (-B + np.sqrt(disc)) / A
        return np.maximum(t, 0.0)

    def is_outflow(self, a, v):
        """True where ``v . n(a) > 0`` for boundary points ``a``."""
        if not np.all(self.on_boundary(a)):
            raise ValueError("point is not on the boundary")
        return np.sum(self.normal(a) * np.asarray(v, float), axis=-1) > 0

    def boundary_points(self, count):
        """Deterministic, roughly uniform points on the boundary."""
        if self.n == 2:
            th = 2 * np.pi * (np.arange(count) + 0.5) / count
            y = np.stack([np.cos(th), np.sin(th)], axis=1)
        else:
            i = np.arange(count) + 0.5
            z = 1.0 - 2.0 * i / count
            phi = np.pi * (1.0 + 5 ** 0.5) * i
            rr = np.sqrt(1.0 - z * z)
            y = np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=1)
        return self.center + y * self.radii

    def to_dict(self):
        return {"kind": self.kind, "center": self.center.tolist(),
                "radii": self.radii.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["center"], d["radii"], d.get("kind", "ellipsoid"))


def ball(center, radius):
    c = np.asarray(center, dtype=np.float64).ravel()
    return ConvexVertexSet(c, np.full(c.size, float(radius)), "ball")


def exit_time(A, a, v):
    return A.exit_time(a, v)


def is_outflow(A, a, v):
    return A.is_outflow(a, v)


@dataclass(frozen=True)
class SphereGrid:
    """Quadrature grid on the unit sphere.

    ``shape`` is ``(2L,)`` for n=2 (angles) and ``(L, 2L)`` for n=3
    (polar Gauss-Legendre index, azimuth index); ``nodes`` is flattened in
    row-major order over ``shape``.
    """

    n: int
    L: int
    nodes: np.ndarray
    weights: np.ndarray
    shape: tuple = field(default=())

    @property
    def size(self):
        return self.weights.size

    def antipodal_index(self):
        """Index ``j`` with ``nodes[j] == -nodes[i]`` for each ``i``."""
        L = self.L
        if L == 0:
            d = np.linalg.norm(self.nodes[:, None, :] + self.nodes[None, :, :], axis=2)
            idx = np.argmin(d, axis=1)
            if np.any(d[np.arange(len(idx)), idx] > 1e-12):
                raise ValueError("direction set is not antipodally closed")
            return idx
        if self.n == 2:
            return (np.arange(2 * L) + L) % (2 * L)
        iz, ip = np.meshgrid(np.arange(L), np.arange(2 * L), indexing="ij")
        return ((L - 1 - iz) * 2 * L + (ip + L) % (2 * L)).ravel()

    def index_of(self, v, tol=1e-12):
        """Index of node equal to ``v``, or ``None``."""
        d = np.linalg.norm(self.nodes - np.asarray(v, float), axis=1)
        i = int(np.argmin(d))
        return i if d[i] <= tol else None


def sphere_grid(n, L):
    """Product quadrature on ``S^{n-1}``.

    n=2: ``2L`` equispaced angles ``j pi / L`` with weights ``pi / L``.
    n=3: ``L`` Gauss-Legendre nodes in ``cos(theta)`` times ``2L``
    equispaced azimuths. Exact for polynomials of degree ``<= L - 1``
    (n=3) and trigonometric degree ``<= 2L - 1`` (n=2).
    """
    if L < 4:
        raise ValueError("resolution L must be at least 4")
    if n == 2:
        th = np.pi * np.arange(2 * L) / L
        nodes = np.stack([np.cos(th), np.sin(th)], axis=1)
        weights = np.full(2 * L, np.pi / L)
        shape = (2 * L,)
    elif n == 3:
        z, wz = np.polynomial.legendre.leggauss(L)
        phi = np.pi * np.arange(2 * L) / L
        Z, P = np.meshgrid(z, phi, indexing="ij")
        S = np.sqrt(1.0 - Z * Z)
        nodes = np.stack([S * np.cos(P), S * np.sin(P), Z], axis=-1).reshape(-1, 3)
        weights = (wz[:, None] * np.full(2 * L, np.pi / L)[None, :]).ravel()
        shape = (L, 2 * L)
    else:
        raise ValueError("dimension must be 2 or 3")
    return SphereGrid(n, L, nodes, weights, shape)


def direction_set(vectors):
    """Unweighted direction set stored as a :class:`SphereGrid` with ``L = 0``."""
    v = np.asarray(vectors, dtype=np.float64)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return SphereGrid(v.shape[1], 0, v, np.full(len(v), np.nan), (len(v),))


def lattice_directions(n):
    """Unit lattice directions along axes and face diagonals, both signs.

    n=2 gives the eight angles ``j pi / 4`` in grid order; n=3 gives 18
    directions.
    """
    if n == 2:
        return sphere_grid(2, 4)
    vecs = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        vecs += [e, -e]
    for i in range(3):
        for j in range(i + 1, 3):
            for si in (1, -1):
                for sj in (1, -1):
                    e = np.zeros(3)
                    e[i], e[j] = si, sj
                    vecs.append(e)
    return direction_set(vecs)


def householder_frame(beta):
    """Orthonormal basis of ``beta``'s complement, shape (n-1, n).

    Rows are ``H e_i`` for the Householder reflection ``H`` with
    ``H e_n = beta``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    n = beta.size
    u = -beta.copy()
    u[-1] += 1.0
    nu = u @ u
    H = np.eye(n)
    if nu > 1e-30:
        H -= 2.0 * np.outer(u, u) / nu
    return H[:, :-1].T.copy()


def sphere_area(m):
    """Surface measure of the unit sphere ``S^m``."""
    return {0: 2.0, 1: 2 * np.pi, 2: 4 * np.pi}[m]
