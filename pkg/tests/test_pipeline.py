import numpy as np
import pytest

from conetomo.config import RunConfig
from conetomo.pipeline import corrupt_products, demo_config, forward_products

SMALL = {"L": 64, "n_s": 96, "n_p": 128, "n_theta": 64, "sigma_max": 8.0, "ds": 0.02}


@pytest.fixture(scope="module")
def products():
    return forward_products(RunConfig("planar", grids=SMALL))


def test_noise_is_seeded(products):
    c = {"kind": "noise", "amplitude": 0.01, "freq": 3.0}
    a = corrupt_products(products, c, 7)
    b = corrupt_products(products, c, 7)
    d = corrupt_products(products, c, 8)
    assert np.array_equal(a["projective"].values, b["projective"].values)
    assert not np.array_equal(a["projective"].values, d["projective"].values)


def test_multiplicative_scales_by_detector_coordinate(products):
    c = {"kind": "multiplicative", "amplitude": 0.1, "freq": 3.0}
    out = corrupt_products(products, c, 0)
    w0, w1 = products["projective"], out["projective"]
    fac = 1 + 0.1 * np.sin(3 * w0.a_axis)
    assert np.allclose(w1.values, w0.values * fac[:, None])
    s0, s1 = products["slices"], out["slices"]
    assert np.allclose(s1.slices, s0.slices * (1 + 0.1 * np.sin(3 * np.tan(s0.theta)))[:, None])


def test_zero_amplitude_is_identity(products):
    c = {"kind": "multiplicative", "amplitude": 0.0, "freq": 3.0}
    assert corrupt_products(products, c, 0) is products
    assert corrupt_products(products, None, 0) is products


def test_demo_configs():
    assert demo_config("convex-crt").geometry == "convex"
    assert demo_config("planar-compton").geometry == "planar"
    with pytest.raises(KeyError):
        demo_config("nope")
