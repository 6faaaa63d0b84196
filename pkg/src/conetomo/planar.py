"""Planar-detector pipeline: projective data, spectra, ``h`` and moments.

Detector points are ``(a_bar, 0)`` and the field lives in ``x_n > 0``.
Fourier conventions: ``W(a, xi) = int exp(-i p.xi) w(a, p) dp`` with no
prefactor; the inverse carries ``(2 pi)^{-n}``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .report import ConsistencyReport

PLANAR_TOL = {"ring": 1e-10, "factorization": 1e-4, "moment": 1e-4,
              "homogeneity": 1e-10, "imag": 1e-10, "h_support": 1e-4}

DEFAULT_GRIDS = {
    2: {"a_max": 2.0, "n_a": 65, "p_max": 4.0, "n_p": 1024},
    3: {"a_max": 1.0, "n_a": 11, "p_max": 2.5, "n_p": 320},
}

DEFAULT_H = {"t_min": -2.5, "t_max": 0.0, "p_max": 2.5, "sigma_max": 64.0,
             "n_theta": 1024, "ds": 0.0025}


def a_axis(a_max, n_a):
    """Closed uniform detector axis ``[-a_max, a_max]``."""
    return np.linspace(-a_max, a_max, int(n_a))


def p_axis(p_max, n_p):
    """Half-open uniform axis ``[-p_max, p_max)``."""
    return -p_max + 2.0 * p_max * np.arange(int(n_p)) / int(n_p)


def _mesh(axis, m):
    """All points of the ``m``-fold product grid, shape (axis.size**m, m)."""
    g = np.meshgrid(*([axis] * m), indexing="ij")
    return np.stack(g, axis=-1).reshape(-1, m)


@dataclass
class ProjectiveData:
    """Scaled projective data ``w(a_bar, p_bar) = v_n^{k+1} u((a_bar, 0), v)``.

    ``values`` has shape ``(N_a,) * (n-1) + (N_p,) * (n-1)``.
    """

    n: int
    k: int
    a_axis: np.ndarray
    p_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.a_axis = np.asarray(self.a_axis, dtype=np.float64)
        self.p_axis = np.asarray(self.p_axis, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        m = self.n - 1
        shape = (self.a_axis.size,) * m + (self.p_axis.size,) * m
        if self.values.shape != shape:
            raise ValueError(f"values have shape {self.values.shape}, expected {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("projective data must be finite")

    @property
    def dp(self):
        return float(self.p_axis[1] - self.p_axis[0])

    @property
    def a_points(self):
        return _mesh(self.a_axis, self.n - 1)

    @property
    def p_points(self):
        return _mesh(self.p_axis, self.n - 1)

    def flat(self):
        """Values reshaped to (a-points, p-points)."""
        m = self.n - 1
        return self.values.reshape(self.a_axis.size ** m, self.p_axis.size ** m)

    def ring_residual(self):
        """``max |w|`` on the outer ring of the p-grid over ``max |w|``."""
        top = float(np.max(np.abs(self.values))) if self.values.size else 0.0
        if top == 0.0:
            return 0.0
        m = self.n - 1
        ring = np.zeros((self.p_axis.size,) * m, dtype=bool)
        for ax in range(m):
            idx = [slice(None)] * m
            idx[ax] = [0, -1]
            ring[tuple(idx)] = True
        return float(np.max(np.abs(self.flat()[:, ring.ravel()]))) / top

    def with_values(self, values):
        return ProjectiveData(self.n, self.k, self.a_axis, self.p_axis, values)


def _rays_from_projective(a_bar, p_bar):
    """Sources ``(a_bar, 0)`` and unit directions ``(p_bar, 1) / |.|``."""
    a_bar = np.atleast_2d(a_bar)
    p_bar = np.atleast_2d(p_bar)
    vn = 1.0 / np.sqrt(1.0 + np.sum(p_bar * p_bar, axis=-1))
    a = np.concatenate([a_bar, np.zeros(a_bar.shape[:-1] + (1,))], axis=-1)
    v = np.concatenate([p_bar * vn[..., None], vn[..., None]], axis=-1)
    return a, v, vn


def w_values(u, a_bar, p_bar, k=None):
    """``v_n^{k+1} u`` at paired arrays of detector points and slopes."""
    k = u.k if k is None else k
    a, v, vn = _rays_from_projective(a_bar, p_bar)
    return vn ** (k + 1) * u(a, v)


def projective_data(u, a_max=None, n_a=None, p_max=None, n_p=None, k=None):
    """Sample ``w`` from a planar beam evaluator on product grids.

    Parameters
    ----------
    u : BeamData
        Evaluable for sources on ``x_n = 0`` and ``v_n > 0``.
    k : int, optional
        Weight order used for the rescaling; defaults to ``u.k``.
    """
    d = DEFAULT_GRIDS[u.n]
    aa = a_axis(d["a_max"] if a_max is None else a_max, d["n_a"] if n_a is None else n_a)
    pa = p_axis(d["p_max"] if p_max is None else p_max, d["n_p"] if n_p is None else n_p)
    m = u.n - 1
    A = _mesh(aa, m)
    P = _mesh(pa, m)
    out = np.empty((len(A), len(P)))
    for i, ab in enumerate(A):
        out[i] = w_values(u, np.broadcast_to(ab, P.shape), P, k)
    k = u.k if k is None else k
    return ProjectiveData(u.n, k, aa, pa, out.reshape((aa.size,) * m + (pa.size,) * m))


@dataclass
class SpectralData:
    """Spectral products of projective data.

    W part: ``W(a_bar, xi_bar)`` on ``a_axis`` x centred ``xi_axis``.
    Slice part: projections ``Rh(theta, s)`` of ``h`` along the lines
    ``t sin(theta) + p cos(theta) = s``, i.e. the samples of ``H`` on
    rays through the origin.
    h part: ``h(t, p_bar)`` on ``t_axis`` x ``hp_axis``.
    """

    n: int
    k: int
    a_axis: np.ndarray = None
    xi_axis: np.ndarray = None
    W: np.ndarray = None
    theta: np.ndarray = None
    s_axis: np.ndarray = None
    slices: np.ndarray = None
    t_axis: np.ndarray = None
    hp_axis: np.ndarray = None
    h: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def dt(self):
        return float(self.t_axis[1] - self.t_axis[0])


def xi_axis(p_ax):
    """Centred frequency axis dual to a half-open p-axis."""
    N = p_ax.size
    dp = p_ax[1] - p_ax[0]
    return 2 * np.pi / (N * dp) * (np.arange(N) - N // 2)


def fourier_w(w):
    """Riemann-sum Fourier transform of ``w`` in ``p_bar``.

    ``W(a, xi_m) = dp^{n-1} sum_j w(a, p_j) exp(-i p_j . xi_m)`` by FFT
    with the phase of the grid origin restored.
    """
    m = w.n - 1
    axes = tuple(range(m, 2 * m))
    xa = xi_axis(w.p_axis)
    F = np.fft.fftshift(np.fft.fftn(w.values, axes=axes), axes=axes)
    phase = np.exp(-1j * w.p_axis[0] * xa)
    for ax in axes:
        shape = [1] * (2 * m)
        shape[ax] = -1
        F = F * phase.reshape(shape)
    return SpectralData(w.n, w.k, a_axis=w.a_axis, xi_axis=xa, W=F * w.dp ** m)


def parseval_residual(w, spec):
    """Relative gap between ``dp sum |w|^2`` and ``(2 pi)^{-m} dxi sum |W|^2``."""
    m = w.n - 1
    dxi = spec.xi_axis[1] - spec.xi_axis[0]
    lhs = w.dp ** m * np.sum(w.values ** 2)
    rhs = (dxi / (2 * np.pi)) ** m * np.sum(np.abs(spec.W) ** 2)
    return float(abs(lhs - rhs) / max(lhs, 1e-300)) if lhs > 0 else float(rhs)


def check_factorization(spec, tol=None, n_xi=8):
    """``W`` constant in ``a_bar`` along hyperplanes orthogonal to ``xi_bar``.

    For n=3 the grid pairs ``(a, a + da (l, -m) / gcd)`` with ``xi`` at
    index offset ``(m, l)`` satisfy ``(a_1 - a_2).xi = 0`` exactly; the
    residual is the largest ``|W(a_1, xi) - W(a_2, xi)|`` over
    ``0 < max(|m|, |l|) <= n_xi``, over ``max(1, max|W|)``. For n=2 the
    condition is vacuous.
    """
    tol = PLANAR_TOL["factorization"] if tol is None else tol
    rep = ConsistencyReport()
    if spec.n == 2:
        rep.add("factorization", 0.0, tol, "vacuous for n=2")
        return rep
    if spec.n != 3:
        raise NotImplementedError("factorization test covers n=3 only")
    W = spec.W
    Na = spec.a_axis.size
    if Na < 2:
        raise ValueError("factorization needs at least two detector points per axis")
    c = spec.xi_axis.size // 2
    norm = max(1.0, float(np.max(np.abs(W))))
    worst = 0.0
    for mi in range(-n_xi, n_xi + 1):
        for li in range(-n_xi, n_xi + 1):
            if mi == 0 and li == 0:
                continue
            g = math.gcd(abs(mi), abs(li))
            d0, d1 = li // g, -mi // g
            Wx = W[:, :, c + mi, c + li]
            i0 = slice(max(0, -d0), Na - max(0, d0))
            j0 = slice(max(0, -d1), Na - max(0, d1))
            i1 = slice(max(0, d0), Na - max(0, -d0))
            j1 = slice(max(0, d1), Na - max(0, -d1))
            diff = Wx[i0, j0] - Wx[i1, j1]
            if diff.size:
                worst = max(worst, float(np.max(np.abs(diff))))
    rep.add("factorization", worst / norm, tol, "W along a.xi = const")
    return rep


# ---------------------------------------------------------------------------
# h by Fourier slices and filtered backprojection (n=2)


def h_axes(t_min=None, t_max=None, p_max=None, sigma_max=None):
    """Output ``(t, p_bar)`` grid with spacing ``pi / sigma_max``."""
    d = DEFAULT_H
    t_min = d["t_min"] if t_min is None else t_min
    t_max = d["t_max"] if t_max is None else t_max
    p_max = d["p_max"] if p_max is None else p_max
    sigma_max = d["sigma_max"] if sigma_max is None else sigma_max
    dt = np.pi / sigma_max
    nt = int(math.floor((t_max - t_min) / dt + 1e-9)) + 1
    npp = int(math.floor(p_max / dt + 1e-9))
    return t_min + dt * np.arange(nt), dt * np.arange(-npp, npp + 1)


def slice_projections(u, t_axis, hp_axis, n_theta=None, ds=None, k=None):
    """Projections of ``h`` read off ``w``.

    Along the view ``theta`` with ``a_bar = tan(theta)``,
    ``Rh(theta, s) = w(tan(theta), s / cos(theta)) / cos(theta)``, because
    ``w(a, p) = int h(t, p - a t) dt``. Views are midpoints of
    ``(-pi/2, pi/2)``; the ``s``-window covers the output grid.
    """
    if u.n != 2:
        raise NotImplementedError("h reconstruction is implemented for n=2")
    n_theta = DEFAULT_H["n_theta"] if n_theta is None else int(n_theta)
    ds = DEFAULT_H["ds"] if ds is None else float(ds)
    theta = -np.pi / 2 + (np.arange(n_theta) + 0.5) * np.pi / n_theta
    tc = 0.5 * (t_axis[0] + t_axis[-1])
    rad = 0.5 * math.hypot(t_axis[-1] - t_axis[0], hp_axis[-1] - hp_axis[0]) + 4 * ds
    ns = 2 * int(math.ceil(rad / ds))
    offs = (np.arange(ns) - ns // 2) * ds
    svals = np.sin(theta)[:, None] * tc + offs[None, :]
    c = np.cos(theta)[:, None]
    ab = np.broadcast_to(np.tan(theta)[:, None], svals.shape)
    vals = w_values(u, ab.reshape(-1, 1), (svals / c).reshape(-1, 1), k)
    proj = vals.reshape(svals.shape) / c
    return theta, offs, proj, tc


def _ramp_filter(npad, ds):
    """Band-limited ramp filter (Ram-Lak kernel) in the DFT domain."""
    nn = np.round(np.fft.fftfreq(npad) * npad).astype(int)
    ker = np.zeros(npad)
    ker[0] = 0.25 / ds ** 2
    odd = nn % 2 != 0
    ker[odd] = -1.0 / (np.pi * nn[odd] * ds) ** 2
    return np.fft.fft(ker).real * ds * 2 * np.pi


def backproject(theta, offs, proj, tc, t_axis, hp_axis, upsample=8):
    """Filtered backprojection onto the ``(t, p)`` grid.

    Returns ``(h, imag_residue)``; the residue is the largest imaginary
    part of the filtered projections relative to their largest real part.
    """
    ns = offs.size
    ds = offs[1] - offs[0]
    npad = 4 * ns
    filt = _ramp_filter(npad, ds)
    half = npad // 2
    su = np.arange(npad * upsample) * ds / upsample
    T, P = np.meshgrid(t_axis, hp_axis, indexing="ij")
    h = np.zeros_like(T)
    top = imag = 0.0
    for c0 in range(0, len(theta), 32):
        G = np.fft.fft(proj[c0:c0 + 32], npad, axis=1) * filt[None, :]
        q = np.fft.ifft(G, axis=1)
        top = max(top, float(np.max(np.abs(q.real))))
        imag = max(imag, float(np.max(np.abs(q.imag))))
        Gu = np.zeros((len(G), npad * upsample), dtype=complex)
        Gu[:, :half] = G[:, :half]
        Gu[:, -half:] = G[:, -half:]
        qu = np.fft.ifft(Gu, axis=1).real * upsample
        for i, th in enumerate(theta[c0:c0 + 32]):
            start = math.sin(th) * tc + offs[0]
            sq = math.sin(th) * T + math.cos(th) * P - start
            h += np.interp(sq, su, qu[i], left=0.0, right=0.0)
    imag = imag / top if top > 0 else 0.0
    h *= 0.5 / len(theta)
    return h, imag


def build_h(u, t_min=None, t_max=None, p_max=None, sigma_max=None, n_theta=None,
            ds=None, k=None):
    """``h(t, p_bar)`` for n=2 from a planar beam evaluator.

    Samples ``H`` on rays through the origin of the ``(sigma, xi)`` plane,
    which is where ``H(sigma, xi) = W(sigma xi / |xi|^2, xi)`` is read off
    the data, and inverts by filtered backprojection.
    """
    t_ax, hp_ax = h_axes(t_min, t_max, p_max, sigma_max)
    theta, offs, proj, tc = slice_projections(u, t_ax, hp_ax, n_theta, ds, k)
    return h_from_slices(u.n, u.k if k is None else k, theta, offs, proj, tc, t_ax, hp_ax)


def h_from_slices(n, k, theta, offs, proj, tc, t_ax, hp_ax):
    h, imag = backproject(theta, offs, proj, tc, t_ax, hp_ax)
    return SpectralData(n, k, theta=theta, s_axis=offs, slices=proj, t_axis=t_ax,
                        hp_axis=hp_ax, h=h,
                        meta={"imag_residue": imag, "t_center": tc})


def H_direct(u, sigma, xi, p_ax, k=None):
    """``H(sigma, xi) = W(sigma xi / xi^2, xi)`` with ``w`` recomputed off-grid (n=2).

    ``sigma``, ``xi`` are paired 1-D arrays with ``xi != 0``.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    if np.any(xi == 0):
        raise ValueError("H at xi = 0 is the a-average of W(a, 0)")
    dp = p_ax[1] - p_ax[0]
    out = np.empty(sigma.size, dtype=complex)
    for i, (sg, x) in enumerate(zip(sigma, xi)):
        wv = w_values(u, np.full((p_ax.size, 1), sg / x), p_ax[:, None], k)
        out[i] = dp * np.sum(wv * np.exp(-1j * p_ax * x))
    return out


def h_closed_form(field, t, p, k):
    """``(-t)^{-k-2} f(-p/t, -1/t)`` for ``t < 0``, else 0 (n=2)."""
    t, p = np.broadcast_arrays(np.asarray(t, float), np.asarray(p, float))
    out = np.zeros(t.shape)
    m = t < 0
    x = np.stack([-p[m] / t[m], -1.0 / t[m]], axis=-1)
    out[m] = (-t[m]) ** (-k - 2) * field.eval(x)
    return out


def estimate_support_cone(spec, threshold=1e-5):
    """``(m0, M0, R)`` of the smallest cone holding ``|h| > threshold max|h|``.

    Returns ``None`` when ``h`` vanishes or the region meets ``t >= 0``.
    """
    h = spec.h
    top = float(np.max(np.abs(h))) if h.size else 0.0
    if top == 0.0:
        return None
    T, P = np.meshgrid(spec.t_axis, spec.hp_axis, indexing="ij")
    sel = np.abs(h) > threshold * top
    t = T[sel]
    if np.any(t >= 0):
        return None
    return float(-t.max()), float(-t.min()), float(np.max(np.abs(P[sel]) / -t))


def check_h_support(spec, m0, M0, R, tol=None):
    """Fraction of ``sum |h|^2`` outside the support cone, dilated by one cell."""
    tol = PLANAR_TOL["h_support"] if tol is None else tol
    rep = ConsistencyReport()
    h = spec.h
    tot = float(np.sum(h * h))
    if tot == 0.0:
        rep.add("pw_h_support", 0.0, tol, "PW (via h-support)")
        return rep
    dt = spec.dt
    T, P = np.meshgrid(spec.t_axis, spec.hp_axis, indexing="ij")
    inside = ((T >= -M0 - dt) & (T <= -m0 + dt) & (T < 0)
              & (np.abs(P) <= R * np.maximum(-T, 0.0) + dt))
    rep.add("pw_h_support", float(np.sum(h[~inside] ** 2)) / tot, tol,
            "PW (via h-support)")
    return rep


def reconstruct_from_h(spec, k, x_axis, xn_axis):
    """``f(x, x_n) = x_n^{-k-2} h(-1/x_n, x/x_n)`` on a grid, 0 for ``x_n < 0``.

    Cubic-spline interpolation of ``h``; zero outside the ``h`` grid.

    Returns
    -------
    ndarray, shape (len(x_axis), len(xn_axis))
    """
    x_axis = np.asarray(x_axis, dtype=np.float64)
    xn_axis = np.asarray(xn_axis, dtype=np.float64)
    if np.any(xn_axis == 0):
        raise ValueError("output grid must avoid x_n = 0")
    X, XN = np.meshgrid(x_axis, xn_axis, indexing="ij")
    out = np.zeros(X.shape)
    pos = XN > 0
    t = -1.0 / XN[pos]
    p = X[pos] / XN[pos]
    dt = spec.dt
    it = (t - spec.t_axis[0]) / dt
    ip = (p - spec.hp_axis[0]) / dt
    vals = map_coordinates(spec.h, [it, ip], order=3, mode="constant", cval=0.0)
    out[pos] = XN[pos] ** (-k - 2.0) * vals
    return out


# ---------------------------------------------------------------------------
# Moments


def default_xi_dirs(n):
    if n == 2:
        return np.array([[1.0]])
    ang = np.arange(4) * np.pi / 4
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def moments(w, xi, m):
    """``J_m(a, xi) = int (p.xi)^m w(a, p) dp`` over the detector grid.

    Returns an array of shape ``(N_a,) * (n-1)``.
    """
    if m > 8:
        raise ValueError("moment order must be at most 8")
    xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
    px = w.p_points @ xi
    J = w.flat() @ (px ** m) * w.dp ** (w.n - 1)
    return J.reshape((w.a_axis.size,) * (w.n - 1))


def _poly_fit_residual(sig, J, m):
    rms = math.sqrt(float(np.mean(J * J)))
    if rms == 0.0:
        return 0.0
    c = np.polynomial.legendre.Legendre.fit(sig, J, m)
    return math.sqrt(float(np.mean((J - c(sig)) ** 2))) / rms


def check_moment_condition(w, m_max=4, xi_dirs=None, tol=None):
    """``J_m(a, xi)`` must be a polynomial of degree ``<= m`` in ``a.xi``.

    One entry per order with the worst fit RMS over data RMS across
    ``xi_dirs``, plus the ``lambda``-scaling sanity entry.
    """
    tol = PLANAR_TOL["moment"] if tol is None else tol
    dirs = default_xi_dirs(w.n) if xi_dirs is None else np.atleast_2d(xi_dirs)
    rep = ConsistencyReport()
    A = w.a_points
    worst = np.zeros(m_max + 1)
    homog = 0.0
    for xi in dirs:
        xi = xi / np.linalg.norm(xi)
        sig = A @ xi
        if np.unique(np.round(sig, 12)).size < 2 * m_max + 2:
            raise ValueError("too few distinct values of a.xi for the moment fit")
        for m in range(m_max + 1):
            J = moments(w, xi, m).ravel()
            worst[m] = max(worst[m], _poly_fit_residual(sig, J, m))
            J2 = moments(w, 2.0 * xi, m).ravel()
            scale = max(float(np.max(np.abs(J2))), 1e-300)
            homog = max(homog, float(np.max(np.abs(J2 - 2.0 ** m * J))) / scale)
    for m in range(m_max + 1):
        rep.add(f"moment_m{m}", worst[m], tol, f"J_{m} vs degree-{m} polynomial in a.xi")
    rep.add("moment_homogeneity", homog, PLANAR_TOL["homogeneity"],
            "J_m(a, 2 xi) = 2^m J_m(a, xi)")
    return rep


def check_planar_range(w, h=None, support=None, m_max=4, xi_dirs=None, tol=None):
    """Planar range conditions on projective data and, optionally, ``h``.

    Parameters
    ----------
    w : ProjectiveData
    h : SpectralData, optional
        Output of :func:`build_h` for the h-support test.
    support : tuple, optional
        ``(m0, M0, R)``; estimated from ``h`` when omitted.
    """
    tol = {**PLANAR_TOL, **(tol or {})}
    rep = ConsistencyReport(meta={"geometry": "planar", "k": w.k})
    rep.add("projective_support_ring", w.ring_residual(), tol["ring"],
            "w on the outer p-ring")
    spec = fourier_w(w)
    rep.extend(check_factorization(spec, tol["factorization"]))
    rep.extend(check_moment_condition(w, m_max, xi_dirs, tol["moment"]))
    if h is not None:
        rep.add("h_imag_residue", h.meta.get("imag_residue", 0.0), tol["imag"])
        cone = support if support is not None else estimate_support_cone(h)
        if cone is None:
            if np.any(h.h != 0):
                rep.add("pw_h_support", np.inf, tol["h_support"],
                        "PW (via h-support): no admissible cone")
            else:
                rep.add("pw_h_support", 0.0, tol["h_support"], "PW (via h-support)")
        else:
            rep.extend(check_h_support(h, *cone, tol=tol["h_support"]))
    return rep
