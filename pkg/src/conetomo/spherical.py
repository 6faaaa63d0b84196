"""Spherical section transform and its range conditions."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import BarycentricInterpolator
from scipy.special import sph_legendre_p

from .geometry import householder_frame, sphere_area, sphere_grid
from .report import ConsistencyReport


class SphereFunction:
    """Function on ``S^{n-1}`` given by ``evaluator(V)`` for V of shape (N, n)."""

    def __init__(self, n, evaluator):
        self.n = n
        self.evaluator = evaluator

    def __call__(self, V):
        V = np.asarray(V, dtype=np.float64)
        flat = V.reshape(-1, self.n)
        return np.asarray(self.evaluator(flat), dtype=np.float64).reshape(V.shape[:-1])

    @classmethod
    def constant(cls, n, c=1.0):
        return cls(n, lambda V: np.full(len(V), float(c)))

    @classmethod
    def from_grid(cls, grid, values):
        """Interpolant through samples on a :class:`SphereGrid`.

        Trigonometric in the azimuth and polynomial through the polar
        Gauss-Legendre nodes, so every node is reproduced exactly.
        """
        values = np.asarray(values, dtype=np.float64).reshape(grid.shape)
        L = grid.L
        if grid.n == 2:
            coef = np.fft.fft(values) / (2 * L)
            freqs = np.fft.fftfreq(2 * L, 1.0 / (2 * L))

            def ev(V):
                th = np.arctan2(V[:, 1], V[:, 0])
                return _trig_eval(coef, freqs, th)
            return cls(2, ev)
        z = grid.nodes.reshape(L, 2 * L, 3)[:, 0, 2]
        coef = np.fft.fft(values, axis=1) / (2 * L)
        freqs = np.fft.fftfreq(2 * L, 1.0 / (2 * L))
        interp = BarycentricInterpolator(z, coef)

        def ev(V):
            zz = np.clip(V[:, 2], -1.0, 1.0)
            phi = np.arctan2(V[:, 1], V[:, 0])
            c = interp(zz)
            return _trig_eval(c, freqs, phi)
        return cls(3, ev)


def _trig_eval(coef, freqs, th):
    """Real trigonometric interpolant; the Nyquist term uses ``cos``."""
    m = freqs.size
    out = np.zeros(np.shape(th))
    for j, fr in enumerate(freqs):
        c = coef[..., j]
        if m % 2 == 0 and j == m // 2:
            out += np.real(c * np.cos(fr * th))
        else:
            out += np.real(c * np.exp(1j * fr * th))
    return out


@dataclass(frozen=True)
class SGrid:
    """Cosine grid: a uniform symmetric core on ``[-s_max, s_max]``.

    ``tail`` holds offsets ``d`` adding the node pairs ``+-(1 - d)`` used
    by the endpoint limit; with ``symmetric=False`` only ``1 - d`` is kept.
    """

    n_s: int = 96
    s_max: float = 0.95
    tail: tuple = ()
    symmetric: bool = True

    def __post_init__(self):
        if not 0 < self.s_max < 1:
            raise ValueError("s_max must lie in (0, 1)")
        if any(not (0 < d < 1 - self.s_max) for d in self.tail):
            raise ValueError("tail offsets must place nodes in (s_max, 1)")

    @property
    def core(self):
        return np.linspace(-self.s_max, self.s_max, self.n_s)

    @property
    def values(self):
        top = np.sort(1.0 - np.asarray(self.tail, dtype=np.float64))
        bottom = -top[::-1] if self.symmetric else top[:0]
        return np.concatenate([bottom, self.core, top])

    @property
    def core_slice(self):
        nt = len(self.tail) if self.symmetric else 0
        return slice(nt, nt + self.n_s)

    def to_dict(self):
        return {"n_s": self.n_s, "s_max": self.s_max, "tail": list(self.tail),
                "symmetric": self.symmetric}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["n_s"]), float(d["s_max"]), tuple(d.get("tail", ())),
                   bool(d.get("symmetric", True)))


@dataclass
class SectionData:
    """Values ``g(beta, s)`` on a sphere grid times an :class:`SGrid`."""

    n: int
    beta_grid: object
    sgrid: SGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.beta_grid.size, self.sgrid.values.size):
            raise ValueError("value array does not match grid shape")


def canonical_frame(beta):
    """Frame of ``beta``'s complement shared by ``beta`` and ``-beta``.

    The Householder frame is built for whichever of ``+-beta`` has its last
    nonzero coordinate positive, so the circle nodes of ``(beta, s)`` and
    ``(-beta, -s)`` coincide.
    """
    beta = np.asarray(beta, dtype=np.float64)
    nz = np.nonzero(np.abs(beta) > 1e-15)[0]
    sign = 1.0 if beta[nz[-1]] > 0 else -1.0
    return householder_frame(sign * beta)


def circle_rule(n, M):
    """Unit vectors and weights for ``S^{n-2}`` in frame coordinates."""
    if n == 2:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    phi = 2 * np.pi * np.arange(M) / M
    return np.stack([np.cos(phi), np.sin(phi)], axis=1), np.full(M, 2 * np.pi / M)


def section_points(betas, s, M=64):
    """Nodes of the section rule.

    Parameters
    ----------
    betas : ndarray, shape (B, n)
    s : ndarray, shape (S,)
    M : int
        Circle nodes for n=3.

    Returns
    -------
    pts : ndarray, shape (B, S, Q, n)
        Unit vectors ``s beta + sqrt(1 - s^2) omega``.
    weights : ndarray, shape (S, Q)
        Circle weights times ``(1 - s^2)^{(n-2)/2}``.
    """
    betas = np.atleast_2d(np.asarray(betas, dtype=np.float64))
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    if np.any(np.abs(s) >= 1):
        raise ValueError("|s| must be < 1")
    n = betas.shape[1]
    om, w = circle_rule(n, M)
    frames = np.stack([canonical_frame(b) for b in betas])       # (B, n-1, n)
    omega = np.einsum("qi,bin->bqn", om, frames)                # (B, Q, n)
    c = np.sqrt(1.0 - s * s)
    pts = (s[None, :, None, None] * betas[:, None, None, :]
           + c[None, :, None, None] * omega[:, None, :, :])
    weights = (c ** (n - 2))[:, None] * w[None, :]
    return pts, weights


def spherical_section(g, beta, s, M=64):
    """``Sg(beta, s)`` for a single pair.

    Examples
    --------
    >>> float(spherical_section(SphereFunction.constant(2), [1.0, 0.0], 0.3))
    2.0
    """
    pts, w = section_points(beta, [s], M)
    return float(np.sum(g(pts[0, 0]) * w[0]))


def forward_sst(g, beta_grid, sgrid, M=64):
    """Section transform of ``g`` on ``beta_grid`` x ``sgrid``."""
    pts, w = section_points(beta_grid.nodes, sgrid.values, M)
    vals = g(pts)
    return SectionData(beta_grid.n, beta_grid, sgrid, np.einsum("bsq,sq->bs", vals, w))


def fd_weights():
    """Central fourth-order weights for first and second derivatives."""
    d1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
    d2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
    return d1, d2


@lru_cache(maxsize=16)
def _sh_laplacian_blocks(L):
    """Per-order matrices acting on azimuthal Fourier coefficients in z."""
    z, wz = np.polynomial.legendre.leggauss(L)
    theta = np.arccos(z)
    blocks = []
    for m in range(L):
        ls = np.arange(m, L)
        if ls.size == 0:
            blocks.append(np.zeros((L, L)))
            continue
        P = np.array([np.ravel(sph_legendre_p(l, m, theta)) for l in ls])
        lam = -ls * (ls + 1.0)
        blocks.append(2 * np.pi * (P.T * lam) @ (P * wz[None, :]))
    return blocks


def sphere_laplacian(grid, values):
    """Laplace-Beltrami operator on grid samples, applied along axis 0.

    n=2: Fourier differentiation in the angle. n=3: spherical-harmonic
    analysis up to degree ``L - 1`` with eigenvalues ``-l(l+1)``.
    ``values`` has shape ``(grid.size, ...)``.
    """
    values = np.asarray(values, dtype=np.float64)
    rest = values.shape[1:]
    L = grid.L
    if grid.n == 2:
        m = np.fft.fftfreq(2 * L, 1.0 / (2 * L))
        F = np.fft.fft(values, axis=0)
        return np.real(np.fft.ifft(-(m ** 2).reshape((-1,) + (1,) * len(rest)) * F,
                                   axis=0))
    v = values.reshape((L, 2 * L) + rest)
    F = np.fft.fft(v, axis=1)
    out = np.zeros_like(F)
    blocks = _sh_laplacian_blocks(L)
    freqs = np.fft.fftfreq(2 * L, 1.0 / (2 * L)).astype(int)
    for j, m in enumerate(freqs):
        if abs(m) >= L:
            continue
        out[:, j] = np.tensordot(blocks[abs(m)], F[:, j], axes=1)
    return np.real(np.fft.ifft(out, axis=1)).reshape(values.shape)


def sst_pde_residual(gdata, s_abs_max=0.9):
    """Pointwise range-PDE residual at core nodes with ``|s| <= s_abs_max``.

    Uses ``g = w q`` with ``w = (1 - s^2)^{(n-2)/2}``; the operator then
    equals ``w [(1 - s^2) q'' - (n-1) s q' - Lap q]`` with smooth
    coefficients, and ``q`` is differenced instead of ``g``.

    Returns
    -------
    res : ndarray, shape (B, S')
    s : ndarray, shape (S',)
    """
    n = gdata.n
    sc = gdata.sgrid.core
    core = gdata.values[:, gdata.sgrid.core_slice]
    wgt = (1.0 - sc * sc) ** ((n - 2) / 2.0)
    q = core / wgt[None, :]
    ds = sc[1] - sc[0]
    d1, d2 = fd_weights()
    idx = np.nonzero(np.abs(sc) <= s_abs_max + 1e-12)[0]
    idx = idx[(idx >= 2) & (idx <= sc.size - 3)]
    if idx.size == 0:
        raise ValueError("s-grid has no interior nodes for the PDE check")
    win = idx[:, None] + np.arange(-2, 3)[None, :]
    qs = q[:, win]                                   # (B, S', 5)
    q1 = qs @ d1 / ds
    q2 = qs @ d2 / ds ** 2
    lap = sphere_laplacian(gdata.beta_grid, q[:, idx])
    s = sc[idx]
    res = wgt[idx][None, :] * ((1 - s * s)[None, :] * q2 - (n - 1) * s[None, :] * q1 - lap)
    return res, s


def sst_limit(gdata, beta=None, side=1):
    """Normalized endpoint limit ``h(+-beta)``.

    Fits a quadratic in ``1 - s`` through the ratio
    ``g / (|S^{n-2}| (1 - s^2)^{(n-2)/2})`` at the four outermost nodes
    and extrapolates to ``s = +-1``.

    Parameters
    ----------
    beta : array_like, optional
        A grid direction. All grid directions when omitted.
    side : {1, -1}
        Endpoint ``s -> side``.

    Raises
    ------
    ValueError
        If the ratio is not finite.
    """
    s = gdata.sgrid.values
    idx = np.argsort(side * s)[-4:]
    x = 1.0 - side * s[idx]
    n = gdata.n
    ratio = gdata.values[:, idx] / (sphere_area(n - 2) * (1.0 - s[idx] ** 2) ** ((n - 2) / 2.0))
    if not np.all(np.isfinite(ratio)):
        raise ValueError("non-finite endpoint ratio")
    V = np.vander(x, 3)
    coef = np.linalg.lstsq(V, ratio.T, rcond=None)[0]
    lim = coef[-1]
    if beta is None:
        return lim
    i = gdata.beta_grid.index_of(beta)
    if i is None:
        raise ValueError("beta is not a grid direction")
    return float(lim[i])


def spectral_tail(grid, values):
    """Energy fraction of grid samples in the upper half of the band."""
    values = np.asarray(values, dtype=np.float64)
    tot = np.sum(values ** 2)
    if tot == 0:
        return 0.0
    L = grid.L
    if grid.n == 2:
        F = np.fft.fft(values)
        m = np.abs(np.fft.fftfreq(2 * L, 1.0 / (2 * L)))
        return float(np.sum(np.abs(F[m > L / 2]) ** 2) / np.sum(np.abs(F) ** 2))
    z, wz = np.polynomial.legendre.leggauss(L)
    theta = np.arccos(z)
    F = np.fft.fft(values.reshape(L, 2 * L), axis=1) / (2 * L)
    freqs = np.fft.fftfreq(2 * L, 1.0 / (2 * L)).astype(int)
    energy = np.zeros(L)
    for j, m in enumerate(freqs):
        if abs(m) >= L:
            continue
        for l in range(abs(m), L):
            c = 2 * np.pi * np.sum(wz * F[:, j] * np.ravel(sph_legendre_p(l, abs(m), theta)))
            energy[l] += abs(c) ** 2
    tot = energy.sum()
    return float(energy[L // 2:].sum() / tot) if tot > 0 else 0.0


def check_sst_range(gdata, tol_even=1e-8, tol_pde=1e-4, tol_tail=1e-3, prefix=""):
    """Evenness, PDE and endpoint-limit conditions on section data.

    Residuals are divided by ``max(1, sup|g|)``. The smoothness test on the
    limit function is a spectral-tail heuristic.

    Raises
    ------
    ValueError
        If the direction grid is not closed under ``v -> -v``.
    """
    grid = gdata.beta_grid
    anti = grid.antipodal_index()
    if not np.allclose(grid.nodes[anti], -grid.nodes, atol=1e-13):
        raise ValueError("direction grid is not antipodally closed")
    s = gdata.sgrid.values
    if not np.allclose(s[::-1], -s, atol=1e-14):
        raise ValueError("s-grid is not symmetric")
    g = gdata.values
    norm = max(1.0, float(np.max(np.abs(g))) if g.size else 0.0)
    rep = ConsistencyReport()
    rep.add(prefix + "sst_evenness", np.max(np.abs(g[anti][:, ::-1] - g)) / norm, tol_even)
    res, _ = sst_pde_residual(gdata)
    rep.add(prefix + "sst_pde", np.max(np.abs(res)) / norm, tol_pde)
    try:
        lim_p = sst_limit(gdata, side=1)
        lim_m = sst_limit(gdata, side=-1)
        finite = bool(np.all(np.isfinite(lim_p)) and np.all(np.isfinite(lim_m)))
    except ValueError:
        finite = False
    rep.add(prefix + "sst_limit_finite", 0.0 if finite else np.inf, 0.0)
    tail = max(spectral_tail(grid, lim_p), spectral_tail(grid, lim_m)) if finite else np.inf
    rep.add(prefix + "sst_limit_smooth", tail, tol_tail, "heuristic spectral-tail test")
    return rep
