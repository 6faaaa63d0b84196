import os
import subprocess
import sys

import numpy as np
import pytest

from conetomo import kernels
from conetomo.phantom import ScalarField

compiled = pytest.mark.skipif(kernels._compiled is None, reason="extension not built")


def _rays(n, N, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (N, n))
    v = rng.standard_normal((N, n))
    return a, v / np.linalg.norm(v, axis=1, keepdims=True)


def _field(n):
    c = [[0.1, -0.2, 0.0][:n], [-0.3, 0.3, 0.2][:n]]
    return ScalarField(n, c, [0.5, 0.3], [1.0, -0.4])


@compiled
@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_backends_agree(n, k):
    f = _field(n)
    a, v = _rays(n, 500)
    args = (a, v, k, f.centers, f.radii, f.amps)
    c = kernels.beam_batch(*args, backend="compiled")
    p = kernels.beam_batch(*args, backend="python")
    assert np.max(np.abs(c - p)) <= 1e-13 * max(1.0, np.max(np.abs(p)))


def test_threads_do_not_change_results():
    f = _field(2)
    a, v = _rays(2, 6000, seed=3)
    args = (a, v, 1, f.centers, f.radii, f.amps)
    one = kernels.beam_batch(*args, threads=1)
    four = kernels.beam_batch(*args, threads=4)
    assert np.array_equal(one, four)


def test_unknown_compiled_request_raises(monkeypatch):
    monkeypatch.setattr(kernels, "_compiled", None)
    f = _field(2)
    a, v = _rays(2, 3)
    with pytest.raises(RuntimeError):
        kernels.beam_batch(a, v, 0, f.centers, f.radii, f.amps, backend="compiled")


def test_pure_python_switch():
    env = dict(os.environ, CONETOMO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c",
                          "from conetomo import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_threads(monkeypatch):
    monkeypatch.setenv("CONETOMO_THREADS", "3")
    assert kernels.default_threads() == 3
    monkeypatch.setenv("CONETOMO_THREADS", "bogus")
    assert kernels.default_threads() == 1
