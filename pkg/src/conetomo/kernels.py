"""Backend selection for the hot ray-quadrature kernel.

The compiled extension is used when importable. Setting the environment
variable ``CONETOMO_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _fallback

GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
PANELS_PER_DIAMETER = 32.0

_compiled = None
if os.environ.get("CONETOMO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"


def default_threads():
    """Worker count from ``CONETOMO_THREADS``, defaulting to 1."""
    try:
        return max(1, int(os.environ.get("CONETOMO_THREADS", "1")))
    except ValueError:
        return 1


def beam_batch(a, v, k, centers, radii, amps, backend=None, threads=None):
    """Weighted ray integrals ``int_0^inf f(a + r v) r^k dr`` for many rays.

    Parameters
    ----------
    a, v : ndarray, shape (N, n)
        Ray sources and unit directions.
    k : int
        Weight order.
    centers, radii, amps : ndarray
        Bump terms of the field.
    backend : {"compiled", "python"}, optional
        Override the import-time choice.
    threads : int, optional
        Worker threads. Chunks are written to fixed slots, so the result
        does not depend on the worker count.

    Returns
    -------
    ndarray, shape (N,)
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    v = np.ascontiguousarray(v, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, a.shape[1])
    radii = np.ascontiguousarray(radii, dtype=np.float64).ravel()
    amps = np.ascontiguousarray(amps, dtype=np.float64).ravel()
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled backend is not available")
        fn = _compiled.beam_batch
    else:
        fn = _fallback.beam_batch
    threads = threads or default_threads()
    args = (int(k), centers, radii, amps, GL_NODES, GL_WEIGHTS, PANELS_PER_DIAMETER)
    N = a.shape[0]
    if threads <= 1 or N < 2048:
        return fn(a, v, *args)
    bounds = np.linspace(0, N, threads + 1).astype(int)
    out = np.empty(N)

    def work(i):
        s, e = bounds[i], bounds[i + 1]
        out[s:e] = fn(a[s:e], v[s:e], *args)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return out
