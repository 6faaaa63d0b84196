"""Compactly supported smooth test densities built from bump functions."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SupportBox:
    """Bounds of a field's support.

    Attributes
    ----------
    R_f : float
        Largest ``|x_bar|`` over the support, where ``x_bar`` drops the last
        coordinate.
    xn_min, xn_max : float
        Range of the last coordinate over the support.
    """

    R_f: float
    xn_min: float
    xn_max: float

    def cone_constants(self):
        """Return ``(m0, M0, R)`` of the support cone of ``h``."""
        return 1.0 / self.xn_max, 1.0 / self.xn_min, self.R_f


class ScalarField:
    """Sum of bump terms ``amp * exp(1 - 1 / (1 - rho**2))``.

    Parameters
    ----------
    n : int
        Ambient dimension, 2 or 3.
    centers : array_like, shape (T, n)
    radii : array_like, shape (T,)
    amps : array_like, shape (T,)
    """

    def __init__(self, n, centers=(), radii=(), amps=()):
        if n not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {n}")
        centers = np.array(centers, dtype=np.float64).reshape(-1, n)
        radii = np.array(radii, dtype=np.float64).ravel()
        amps = np.array(amps, dtype=np.float64).ravel()
        if not (centers.shape[0] == radii.size == amps.size):
            raise ValueError("centers, radii and amps must have equal length")
        if np.any(radii <= 0):
            raise ValueError("bump radius must be positive")
        for arr in (centers, radii, amps):
            arr.setflags(write=False)
        self.n = n
        self.centers = centers
        self.radii = radii
        self.amps = amps

    @property
    def terms(self):
        """List of ``(center, radius, amplitude)`` tuples."""
        return [(c.copy(), float(r), float(a))
                for c, r, a in zip(self.centers, self.radii, self.amps)]

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at points ``x`` of shape (..., n)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n:
            raise ValueError(f"points must have last axis {self.n}")
        out = np.zeros(x.shape[:-1])
        for c, r, amp in zip(self.centers, self.radii, self.amps):
            rho2 = np.sum((x - c) ** 2, axis=-1) / (r * r)
            m = rho2 < 1.0
            out[m] += amp * np.exp(1.0 - 1.0 / (1.0 - rho2[m]))
        return out

    def scaled(self, c):
        """Return ``c * self``."""
        return ScalarField(self.n, self.centers, self.radii, c * self.amps)

    def translated(self, b):
        """Return ``x -> self(x - b)``."""
        return ScalarField(self.n, self.centers + np.asarray(b, float),
                           self.radii, self.amps)

    def to_dict(self):
        return {"n": self.n,
                "terms": [{"center": c.tolist(), "radius": r, "amplitude": a}
                          for c, r, a in self.terms]}

    @classmethod
    def from_dict(cls, d):
        terms = d.get("terms", [])
        return cls(int(d["n"]), [t["center"] for t in terms],
                   [t["radius"] for t in terms],
                   [t["amplitude"] for t in terms])

    def __repr__(self):
        return f"ScalarField(n={self.n}, terms={len(self.radii)})"


def make_bump(center, radius, amplitude=1.0, n=None):
    """Single bump term.

    Examples
    --------
    >>> b = make_bump([0.0, 1.5], 0.5, 2.0)
    >>> float(b.eval([0.0, 1.5]))
    2.0
    """
    center = np.asarray(center, dtype=np.float64).ravel()
    n = center.size if n is None else n
    if center.size != n:
        raise ValueError("center has wrong dimension")
    if not radius > 0:
        raise ValueError("bump radius must be positive")
    return ScalarField(n, [center], [radius], [amplitude])


def make_sum(fields):
    """Pointwise sum of fields of one dimension."""
    fields = list(fields)
    if not fields:
        raise ValueError("need at least one field")
    n = fields[0].n
    if any(f.n != n for f in fields):
        raise ValueError("dimension mismatch")
    return ScalarField(n,
                       np.concatenate([f.centers for f in fields]),
                       np.concatenate([f.radii for f in fields]),
                       np.concatenate([f.amps for f in fields]))


def negate(field):
    return field.scaled(-1.0)


def zero_field(n):
    return ScalarField(n)


def support_box(field, planar=False):
    """Hull of the term balls.

    Parameters
    ----------
    field : ScalarField
    planar : bool
        Require the support to lie in ``x_n > 0``.

    Raises
    ------
    ValueError
        If the field has no terms, or if ``planar`` and a ball meets
        ``x_n <= 0``.
    """
    if field.radii.size == 0:
        raise ValueError("field has no terms")
    c, r = field.centers, field.radii
    lo = c[:, -1] - r
    if planar and np.any(lo <= 0):
        raise ValueError("a support ball meets the half-space x_n <= 0")
    R_f = float(np.max(np.linalg.norm(c[:, :-1], axis=1) + r))
    return SupportBox(R_f, float(lo.min()), float(np.max(c[:, -1] + r)))
