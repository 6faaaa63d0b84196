"""Compare the compiled and numpy backends of the ray-quadrature kernel.

Usage: python benchmarks/bench_kernels.py [--rays N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from conetomo import kernels
from conetomo.phantom import ScalarField


def _problem(n, N, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1, 1, (N, n))
    v = rng.standard_normal((N, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = ScalarField(n, rng.uniform(-0.4, 0.4, (3, n)), [0.5, 0.3, 0.2], [1.0, 0.5, -0.3])
    return a, v, f


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rays", type=int, default=20000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = ["python"] + (["compiled"] if kernels._compiled is not None else [])
    print(f"{'n':>2} {'k':>2} " + " ".join(f"{b:>12}" for b in backends) + "   speedup  max|diff|")
    for n in (2, 3):
        a, v, f = _problem(n, args.rays)
        for k in (0, 1, 2):
            times, outs = [], []
            for b in backends:
                def run(b=b):
                    return kernels.beam_batch(a, v, k, f.centers, f.radii, f.amps,
                                              backend=b, threads=1)
                outs.append(run())
                times.append(min(timeit.repeat(run, number=1, repeat=args.repeat)))
            cols = " ".join(f"{t * 1e3:10.1f}ms" for t in times)
            if len(times) == 2:
                extra = f"{times[0] / times[1]:9.1f}x  {np.max(np.abs(outs[0] - outs[1])):.1e}"
            else:
                extra = "   (extension not built)"
            print(f"{n:>2} {k:>2} {cols} {extra}")


if __name__ == "__main__":
    main()
