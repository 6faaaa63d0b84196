"""Project, check and reconstruct runs behind the command-line driver."""

import csv
import io
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import container as ct
from .beam import beam_data_from_field
from .cone import (LIMIT_TAIL, check_compton_range, check_crt_range, forward_cone,
                   forward_crt, reconstruct_from_crt)
from .geometry import ball, sphere_grid
from .phantom import support_box
from .planar import (SpectralData, fourier_w, h_axes, h_from_slices, projective_data,
                     reconstruct_from_h, slice_projections)
from .spherical import SGrid


def _factor(a1, corruption):
    return 1.0 + corruption["amplitude"] * np.sin(corruption["freq"] * np.asarray(a1))


def _noise(values, corruption, seed, stream):
    rng = np.random.default_rng([seed, stream])
    scale = corruption["amplitude"] * (float(np.max(np.abs(values))) if values.size else 0.0)
    return values + scale * rng.standard_normal(values.shape)


def corrupt_products(products, corruption, seed):
    """Apply corruption settings to every data product.

    Multiplicative corruption scales each sample by
    ``1 + eps sin(freq a_1)`` with ``a_1`` the first source coordinate,
    which is the same as corrupting the beam data ``u`` they derive from.
    Noise adds seeded Gaussian samples of deviation ``eps max|data|``.
    """
    if corruption is None or corruption["amplitude"] == 0.0:
        return products
    out = dict(products)
    mult = corruption["kind"] == "multiplicative"
    for stream, name in enumerate(sorted(products)):
        p = products[name]
        if name.startswith("cone"):
            vals = (p.values * _factor(p.sources()[:, 0], corruption)[:, None, None]
                    if mult else _noise(p.values, corruption, seed, stream))
            out[name] = p.with_values(vals)
        elif name == "projective":
            if mult:
                shape = (-1,) + (1,) * (p.values.ndim - 1)
                vals = p.values * _factor(p.a_axis, corruption).reshape(shape)
            else:
                vals = _noise(p.values, corruption, seed, stream)
            out[name] = p.with_values(vals)
        elif name == "slices":
            vals = (p.slices * _factor(np.tan(p.theta), corruption)[:, None]
                    if mult else _noise(p.slices, corruption, seed, stream))
            out[name] = replace(p, slices=vals)
    return out


def forward_products(cfg):
    """Clean data products for a config, keyed by container name."""
    g = cfg.grids
    f = cfg.phantom_field()
    th = cfg.threads
    if cfg.geometry == "convex":
        A = ball(g["domain_center"], g["domain_radius"])
        sst = forward_cone(f, g["sst_vertices"], sphere_grid(cfg.n, g["L"]),
                           SGrid(g["n_s"], g["s_max"]), cfg.k, g["M"], threads=th)
        limit = forward_crt(f, A, cfg.k, g["spacing"], g["n_probe"], threads=th)
        return {"cone_sst": sst, "cone_limit": limit}
    u = beam_data_from_field(f, cfg.k, threads=th)
    cone = forward_cone(f, g["cone_points"], sphere_grid(cfg.n, g["L"]),
                        SGrid(g["n_s"], g["s_max"], LIMIT_TAIL), cfg.k, g["M"],
                        geometry="planar", threads=th)
    out = {"cone": cone,
           "projective": projective_data(u, g["a_max"], g["n_a"], g["p_max"], g["n_p"])}
    if cfg.n == 2:
        t_ax, hp_ax = h_axes(g["t_min"], g["t_max"], g["h_p_max"], g["sigma_max"])
        theta, offs, proj, tc = slice_projections(u, t_ax, hp_ax, g["n_theta"], g["ds"])
        out["slices"] = SpectralData(cfg.n, cfg.k, theta=theta, s_axis=offs, slices=proj,
                                     t_axis=t_ax, hp_axis=hp_ax, meta={"t_center": tc})
    return out


_SAVERS = {"cone": ct.save_cone, "projective": ct.save_projective, "slices": ct.save_slices}
_LOADERS = {"cone": ct.load_cone, "projective": ct.load_projective, "slices": ct.load_slices}


def _kind(name):
    return "cone" if name.startswith("cone") else name


def write_manifest(out, cfg, command, names):
    out = Path(out)
    man = {"command": command, "config_hash": cfg.digest(), "version": __version__,
           "containers": {n: ct.digest(out / n) for n in sorted(names)}}
    (out / "manifest.json").write_text(ct.dumps(man))


def project(cfg, out, products=None):
    """Write data containers, the resolved config and a manifest into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if products is None:
        products = forward_products(cfg)
    products = corrupt_products(products, cfg.corruption, cfg.seed)
    for name, p in products.items():
        _SAVERS[_kind(name)](out, name, p)
    (out / "config.json").write_text(cfg.to_json(portable=True))
    write_manifest(out, cfg, "project", products)
    return products


def load_products(src, cfg):
    src = Path(src)
    names = (["cone_sst", "cone_limit"] if cfg.geometry == "convex"
             else ["cone", "projective"] + (["slices"] if cfg.n == 2 else []))
    prods = {n: _LOADERS[_kind(n)](src / n) for n in names}
    for n in names:
        p = prods[n]
        if p.n != cfg.n or p.k != cfg.k:
            raise ct.ContainerError(f"{n}: container (n={p.n}, k={p.k}) does not "
                                    f"match config (n={cfg.n}, k={cfg.k})")
        if _kind(n) == "cone" and p.geometry != cfg.geometry:
            raise ct.ContainerError(f"{n}: geometry {p.geometry!r} does not match config")
    return prods


def _support(cfg, f):
    if cfg.grids.get("support") == "phantom" and f.radii.size:
        return support_box(f, planar=True).cone_constants()
    return None


def check(cfg, src, out, tol_scale=1.0, products=None):
    """Run the range checks; write report JSON/CSV and derived spectra."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    prods = load_products(src, cfg) if products is None else products
    tol = cfg.scaled_tolerances(tol_scale)
    g = cfg.grids
    derived = []
    if cfg.geometry == "convex":
        A = ball(g["domain_center"], g["domain_radius"])
        rep = check_crt_range(prods["cone_sst"], A, cfg.k, prods["cone_limit"], tol)
    else:
        w = prods["projective"]
        planar = {"w": w, "m_max": g["m_max"], "tol": tol}
        spec = fourier_w(w)
        ct.save_spectrum(out, "spectrum", spec)
        derived.append("spectrum")
        if "slices" in prods:
            s = prods["slices"]
            h = h_from_slices(s.n, s.k, s.theta, s.s_axis, s.slices, s.meta["t_center"],
                              s.t_axis, s.hp_axis)
            ct.save_h(out, "h", h)
            derived.append("h")
            planar.update(h=h, support=_support(cfg, cfg.phantom_field()))
        rep = check_compton_range(prods["cone"], cfg.k, planar=planar, tol=tol)
    rep.meta.update({"config_hash": cfg.digest(), "version": __version__,
                     "tol_scale": tol_scale})
    (out / "report.json").write_text(rep.to_json())
    (out / "report.csv").write_text(rep.to_csv())
    write_manifest(out, cfg, "check", derived)
    return rep


def reconstruct(cfg, src, out, products=None):
    """Reconstruct the field and report error metrics against the phantom."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    prods = load_products(src, cfg) if products is None else products
    g = cfg.grids
    f = cfg.phantom_field()
    if cfg.geometry == "convex":
        A = ball(g["domain_center"], g["domain_radius"])
        pts, vals, valid = reconstruct_from_crt(prods["cone_limit"], A, cfg.k,
                                                g["reconstruct_v"])
    else:
        if "slices" not in prods:
            raise NotImplementedError("planar reconstruction is implemented for n=2")
        s = prods["slices"]
        h = h_from_slices(s.n, s.k, s.theta, s.s_axis, s.slices, s.meta["t_center"],
                          s.t_axis, s.hp_axis)
        xa = np.linspace(*g["x_range"], g["n_out"])
        xn = np.linspace(*g["xn_range"], g["n_out"])
        vals = reconstruct_from_h(h, cfg.k, xa, xn).ravel()
        X, XN = np.meshgrid(xa, xn, indexing="ij")
        pts = np.stack([X.ravel(), XN.ravel()], axis=1)
        valid = np.ones(len(pts), dtype=bool)
    ct.save_field(out, "field", pts, vals, {"geometry": cfg.geometry, "n": cfg.n,
                                             "k": cfg.k})
    ref = f.eval(pts[valid])
    err = vals[valid] - ref
    nref = float(np.linalg.norm(ref))
    metrics = {"rel_l2": float(np.linalg.norm(err)) / nref if nref > 0
               else float(np.linalg.norm(err)),
               "sup": float(np.max(np.abs(err))) if err.size else 0.0,
               "n_valid": int(valid.sum())}
    (out / "metrics.json").write_text(ct.dumps(metrics))
    write_manifest(out, cfg, "reconstruct", ["field"])
    return metrics


# ---------------------------------------------------------------------------
# Demos

SWEEP_EPS = (0.0, 0.01, 0.02, 0.05, 0.1)


def demo_config(name, seed=0, threads=None):
    from .config import RunConfig
    if name == "convex-crt":
        return RunConfig("convex", 2, 0, seed=seed, threads=threads)
    if name in ("planar-compton", "corruption-sweep"):
        return RunConfig("planar", 2, 0, seed=seed, threads=threads)
    raise KeyError(name)


def run_demo(name, out, seed=0, threads=None, tol_scale=1.0):
    """Run a named scenario under ``out``; returns ``(passed, summary)``."""
    cfg = demo_config(name, seed, threads)
    out = Path(out)
    if name != "corruption-sweep":
        project(cfg, out / "data")
        rep = check(cfg, out / "data", out / "check", tol_scale)
        metrics = reconstruct(cfg, out / "data", out / "reconstruct")
        return rep.passed, {"report": rep, "metrics": metrics}
    clean = forward_products(cfg)
    rows = []
    for eps in SWEEP_EPS:
        cfg.corruption = {"kind": "multiplicative", "amplitude": eps, "freq": 3.0}
        d = out / f"eps_{eps:g}"
        project(cfg, d / "data", clean)
        rep = check(cfg, d / "data", d / "check", tol_scale)
        planar = [e for e in rep.entries if e.name.startswith("moment_m")
                  or e.name == "pw_h_support"]
        rows.append({"epsilon": eps, "pass": int(rep.passed),
                     "moment_residual": max(e.residual for e in planar
                                            if e.name.startswith("moment_m")),
                     "h_support_residual": rep["pw_h_support"].residual,
                     "worst_ratio": max(e.residual / e.threshold for e in planar)})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    (out / "sweep.csv").write_text(buf.getvalue())
    return True, {"rows": rows}

