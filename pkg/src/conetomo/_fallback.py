"""Pure numpy ray quadrature, used when the compiled kernel is unavailable."""

import numpy as np

_CHUNK = 4096


def _bump(pts, centers, radii, amps):
    """Bump-sum values at ``pts`` of shape (..., n)."""
    out = np.zeros(pts.shape[:-1])
    for c, r, amp in zip(centers, radii, amps):
        rho2 = np.sum((pts - c) ** 2, axis=-1) / (r * r)
        m = rho2 < 1.0
        out[m] += amp * np.exp(1.0 - 1.0 / (1.0 - rho2[m]))
    return out


def _chunk(a, v, k, centers, radii, amps, gx, gw, panels):
    diff = a[:, None, :] - centers[None, :, :]
    b = np.sum(v[:, None, :] * diff, axis=-1)
    cc = np.sum(diff * diff, axis=-1) - radii[None, :] ** 2
    disc = b * b - cc
    sq = np.sqrt(np.where(disc > 0.0, disc, 0.0))
    lo = np.maximum(-b - sq, 0.0)
    hi = -b + sq
    hit = (disc > 0.0) & (hi > lo)
    lo = np.where(hit, lo, 0.0)
    hi = np.where(hit, hi, 0.0)
    bp = np.sort(np.concatenate([lo, hi], axis=1), axis=1)
    out = np.zeros(a.shape[0])
    nq = gx.size
    for i in range(bp.shape[1] - 1):
        s0 = bp[:, i]
        seg = bp[:, i + 1] - s0
        mid = s0 + 0.5 * seg
        cover = hit & (lo <= mid[:, None]) & (hi >= mid[:, None])
        dmin = np.min(np.where(cover, 2.0 * radii[None, :], np.inf), axis=1)
        active = (seg > 0.0) & np.isfinite(dmin)
        if not active.any():
            continue
        npan = np.zeros(a.shape[0], dtype=np.int64)
        npan[active] = np.maximum(
            np.ceil(seg[active] * panels / dmin[active]), 1).astype(np.int64)
        for m in np.unique(npan[active]):
            idx = np.nonzero(active & (npan == m))[0]
            L = seg[idx] / m
            offs = (np.arange(m)[:, None] + 0.5 * (gx[None, :] + 1.0)).ravel()
            r = s0[idx, None] + L[:, None] * offs[None, :]
            pts = a[idx, None, :] + r[:, :, None] * v[idx, None, :]
            vals = np.zeros(r.shape)
            for t in range(radii.size):
                sel = cover[idx, t]
                if not sel.any():
                    continue
                vals[sel] += _bump(pts[sel], centers[t:t + 1], radii[t:t + 1],
                                   amps[t:t + 1])
            if k > 0:
                vals *= r ** k
            wq = np.tile(gw, m)
            out[idx] += 0.5 * L * (vals @ wq)
    return out


def beam_batch(a, v, k, centers, radii, amps, gx, gw, panels):
    """Weighted ray integrals for a batch of (source, direction) pairs."""
    out = np.zeros(a.shape[0])
    if radii.size == 0:
        return out
    for s in range(0, a.shape[0], _CHUNK):
        e = min(s + _CHUNK, a.shape[0])
        out[s:e] = _chunk(a[s:e], v[s:e], k, centers, radii, amps, gx, gw,
                          panels)
    return out
