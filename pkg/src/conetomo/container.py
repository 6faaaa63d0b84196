"""Directory containers: ``meta.json`` plus a raw little-endian ``data.bin``.

Real arrays are stored as ``f64le``; complex arrays as ``c64le-interleaved``
(real and imaginary 64-bit parts alternating). Payloads are row-major.
"""

import hashlib
import json
from pathlib import Path

import numpy as np

from .cone import ConeData
from .geometry import direction_set, sphere_grid
from .planar import ProjectiveData, SpectralData
from .spherical import SGrid

SCHEMA_VERSION = 1


class ContainerError(ValueError):
    """Malformed or mismatched container."""


def dumps(obj):
    """Canonical JSON used for every file this package writes."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_array(root, name, array, axes=None, attrs=None):
    """Write ``root/name/{meta.json,data.bin}`` and return the directory."""
    arr = np.ascontiguousarray(array)
    if np.iscomplexobj(arr):
        tag = "c64le-interleaved"
        payload = arr.astype("<c16").view("<f8").tobytes()
    else:
        tag = "f64le"
        payload = arr.astype("<f8").tobytes()
    d = Path(root) / name
    d.mkdir(parents=True, exist_ok=True)
    meta = {"schema_version": SCHEMA_VERSION, "name": name, "shape": list(arr.shape),
            "dtype": tag, "order": "C",
            "axes": {k: np.asarray(v, dtype=np.float64).tolist()
                     for k, v in (axes or {}).items()},
            "attrs": attrs or {}}
    (d / "meta.json").write_text(dumps(meta))
    (d / "data.bin").write_bytes(payload)
    return d


def read_array(path):
    """Return ``(array, meta)`` from a container directory."""
    d = Path(path)
    try:
        meta = json.loads((d / "meta.json").read_text())
        raw = (d / "data.bin").read_bytes()
    except FileNotFoundError as exc:
        raise ContainerError(f"missing container file: {exc.filename}") from None
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ContainerError(f"{d}: unsupported schema version")
    shape = tuple(meta["shape"])
    count = int(np.prod(shape, dtype=np.int64))
    if meta["dtype"] == "f64le":
        size = 8
    elif meta["dtype"] == "c64le-interleaved":
        size = 16
    else:
        raise ContainerError(f"{d}: unknown dtype tag {meta['dtype']!r}")
    if len(raw) != count * size:
        raise ContainerError(f"{d}: payload has {len(raw)} bytes, expected {count * size}")
    arr = np.frombuffer(raw, dtype="<f8")
    if size == 16:
        arr = arr.view("<c16")
    return arr.reshape(shape).astype(arr.dtype.newbyteorder("=")), meta


def digest(path):
    """SHA-256 of a container payload."""
    return hashlib.sha256((Path(path) / "data.bin").read_bytes()).hexdigest()


def _expect(meta, kind):
    got = meta["attrs"].get("kind")
    if got != kind:
        raise ContainerError(f"container holds {got!r}, expected {kind!r}")


def save_cone(root, name, g):
    grid = g.beta_grid
    attrs = {"kind": "cone", "geometry": g.geometry, "n": g.n, "k": g.k, "M": g.M,
             "L": grid.L, "sgrid": g.sgrid.to_dict(), "layout": g.layout}
    axes = {"vertices": g.vertices, "beta": grid.nodes, "s": g.sgrid.values}
    return write_array(root, name, g.values, axes, attrs)


def load_cone(path):
    values, meta = read_array(path)
    _expect(meta, "cone")
    a = meta["attrs"]
    n, L = a["n"], a["L"]
    grid = sphere_grid(n, L) if L > 0 else direction_set(meta["axes"]["beta"])
    return ConeData(a["geometry"], n, a["k"], np.array(meta["axes"]["vertices"]).reshape(
        len(values), -1), grid, SGrid.from_dict(a["sgrid"]), values, a["M"], a["layout"])


def save_projective(root, name, w):
    attrs = {"kind": "projective", "n": w.n, "k": w.k}
    return write_array(root, name, w.values, {"a": w.a_axis, "p": w.p_axis}, attrs)


def load_projective(path):
    values, meta = read_array(path)
    _expect(meta, "projective")
    a = meta["attrs"]
    return ProjectiveData(a["n"], a["k"], meta["axes"]["a"], meta["axes"]["p"], values)


def save_slices(root, name, spec):
    attrs = {"kind": "slices", "n": spec.n, "k": spec.k,
             "t_center": spec.meta["t_center"]}
    axes = {"theta": spec.theta, "s": spec.s_axis, "t": spec.t_axis, "p": spec.hp_axis}
    return write_array(root, name, spec.slices, axes, attrs)


def load_slices(path):
    values, meta = read_array(path)
    _expect(meta, "slices")
    a, ax = meta["attrs"], meta["axes"]
    return SpectralData(a["n"], a["k"], theta=np.array(ax["theta"]), s_axis=np.array(ax["s"]),
                        slices=values, t_axis=np.array(ax["t"]), hp_axis=np.array(ax["p"]),
                        meta={"t_center": a["t_center"]})


def save_spectrum(root, name, spec):
    attrs = {"kind": "spectrum", "n": spec.n, "k": spec.k}
    return write_array(root, name, spec.W, {"a": spec.a_axis, "xi": spec.xi_axis}, attrs)


def save_h(root, name, spec):
    attrs = {"kind": "h", "n": spec.n, "k": spec.k,
             "imag_residue": spec.meta.get("imag_residue", 0.0)}
    return write_array(root, name, spec.h, {"t": spec.t_axis, "p": spec.hp_axis}, attrs)


def save_field(root, name, points, values, attrs=None):
    """Gridded or scattered reconstruction; NaN marks skipped nodes."""
    return write_array(root, name, values, {"points": points},
                       {"kind": "field", **(attrs or {})})
