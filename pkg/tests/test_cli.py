import json

import pytest

from conetomo.cli import main

CONVEX = {"geometry": "convex",
          "grids": {"spacing": 0.05, "L": 64, "n_s": 96, "n_probe": 16,
                    "sst_vertices": [[0.0, 0.0]]},
          "tolerances": {"independence": 0.05, "shell": 0.01}}
PLANAR = {"geometry": "planar",
          "grids": {"L": 128, "n_s": 192, "n_p": 256, "n_theta": 128, "sigma_max": 16.0,
                    "ds": 0.01, "n_out": 21},
          "tolerances": {"pde": 5.0, "h_support": 1e-3}}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


@pytest.mark.parametrize("cfg", [CONVEX, PLANAR], ids=["convex", "planar"])
def test_project_check_reconstruct(tmp_path, cfg, capsys):
    c = _write(tmp_path, cfg)
    data, chk, rec = (str(tmp_path / d) for d in ("data", "check", "rec"))
    assert main(["project", "--config", c, "--out", data]) == 0
    assert (tmp_path / "data" / "manifest.json").exists()
    assert main(["check", data, "--config", c, "--out", chk]) == 0
    report = json.loads((tmp_path / "check" / "report.json").read_text())
    assert all(e["pass"] for e in report["entries"])
    assert (tmp_path / "check" / "report.csv").read_text().startswith("name,")
    assert main(["reconstruct", data, "--config", c, "--out", rec]) == 0
    metrics = json.loads((tmp_path / "rec" / "metrics.json").read_text())
    assert metrics["rel_l2"] < 0.5


def test_corruption_flips_exit_code(tmp_path, capsys):
    cfg = dict(PLANAR, corruption={"kind": "multiplicative", "amplitude": 0.05})
    c = _write(tmp_path, cfg)
    assert main(["project", "--config", c, "--out", str(tmp_path / "d")]) == 0
    assert main(["check", str(tmp_path / "d"), "--config", c,
                 "--out", str(tmp_path / "c")]) == 1
    assert "failed: moment_m0" in capsys.readouterr().err


def test_tol_scale_relaxes(tmp_path):
    cfg = dict(PLANAR, corruption={"kind": "multiplicative", "amplitude": 0.05})
    c = _write(tmp_path, cfg)
    main(["project", "--config", c, "--out", str(tmp_path / "d")])
    assert main(["check", str(tmp_path / "d"), "--config", c, "--out", str(tmp_path / "c"),
                 "--tol-scale", "1e6"]) == 0


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["demo", "nope", "--out", str(tmp_path)]) == 2
    assert main(["project", "--config", str(tmp_path / "missing.json")]) == 2
    bad = _write(tmp_path, {"geometry": "convex", "n": 5})
    assert main(["project", "--config", bad, "--out", str(tmp_path / "x")]) == 2
    assert "n:" in capsys.readouterr().err
    assert main(["check", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == 2
    assert main(["project", "--tol-scale", "0"]) == 2


def test_config_mismatch_is_usage_error(tmp_path):
    c = _write(tmp_path, PLANAR)
    main(["project", "--config", c, "--out", str(tmp_path / "d")])
    other = _write(tmp_path, dict(PLANAR, k=1), "k1.json")
    assert main(["check", str(tmp_path / "d"), "--config", other,
                 "--out", str(tmp_path / "c")]) == 2


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("CONETOMO_THREADS", "x")
    c = _write(tmp_path, CONVEX)
    assert main(["project", "--config", c, "--out", str(tmp_path / "d")]) == 2


def test_determinism_and_thread_independence(tmp_path):
    c = _write(tmp_path, PLANAR)
    for d, t in (("a", "1"), ("b", "3")):
        main(["project", "--config", c, "--out", str(tmp_path / d), "--threads", t])
        main(["check", str(tmp_path / d), "--config", c, "--out", str(tmp_path / d / "chk")])
    files = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*")
                   if p.is_file())
    assert files
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes(), f


def test_n3_planar_reconstruct_not_implemented(tmp_path):
    cfg = {"geometry": "planar", "n": 3, "grids": {"n_p": 32, "n_a": 11, "L": 8, "n_s": 24}}
    c = _write(tmp_path, cfg)
    assert main(["project", "--config", c, "--out", str(tmp_path / "d")]) == 0
    assert main(["reconstruct", str(tmp_path / "d"), "--config", c,
                 "--out", str(tmp_path / "r")]) == 2
