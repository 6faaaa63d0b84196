import numpy as np
import pytest

from conetomo.phantom import (ScalarField, make_bump, make_sum, negate, support_box,
                              zero_field)


def test_bump_peak_and_support():
    f = make_bump([0.2, -0.1], 0.5, 3.0)
    assert float(f.eval([0.2, -0.1])) == 3.0
    assert float(f.eval([0.2 + 0.5, -0.1])) == 0.0
    assert float(f.eval([0.2 + 0.49, -0.1])) > 0.0


def test_eval_shapes():
    f = make_bump([0.0, 0.0, 0.0], 1.0)
    x = np.zeros((4, 5, 3))
    assert f.eval(x).shape == (4, 5)
    with pytest.raises(ValueError):
        f.eval(np.zeros((4, 2)))


def test_linearity_helpers():
    f = make_bump([0.0, 0.0], 0.7)
    g = make_bump([0.3, 0.1], 0.4, 2.0)
    x = np.random.default_rng(0).uniform(-1, 1, (50, 2))
    assert np.allclose(make_sum([f, g]).eval(x), f.eval(x) + g.eval(x))
    assert np.allclose(negate(f).eval(x), -f.eval(x))
    assert np.allclose(f.scaled(2.5).eval(x), 2.5 * f.eval(x))
    assert np.allclose(f.translated([0.1, 0.2]).eval(x + [0.1, 0.2]), f.eval(x))
    assert np.all(zero_field(2).eval(x) == 0)


def test_dict_roundtrip():
    f = ScalarField(3, [[0, 0, 1], [0.1, 0.2, 1.5]], [0.3, 0.2], [1.0, -0.5])
    g = ScalarField.from_dict(f.to_dict())
    assert np.array_equal(g.centers, f.centers)
    assert np.array_equal(g.amps, f.amps)


def test_invalid_fields():
    with pytest.raises(ValueError):
        ScalarField(4)
    with pytest.raises(ValueError):
        ScalarField(2, [[0, 0]], [0.0], [1.0])
    with pytest.raises(ValueError):
        ScalarField(2, [[0, 0]], [1.0, 2.0], [1.0])


def test_support_box():
    f = ScalarField(2, [[0.0, 1.5], [0.5, 2.0]], [0.5, 0.25], [1.0, 1.0])
    box = support_box(f, planar=True)
    assert box.xn_min == 1.0 and box.xn_max == 2.25
    assert box.R_f == 0.75
    m0, M0, R = box.cone_constants()
    assert (m0, M0, R) == (1 / 2.25, 1.0, 0.75)


def test_support_box_rejects_lower_half_space():
    with pytest.raises(ValueError):
        support_box(make_bump([0.0, 0.4], 0.5), planar=True)
    with pytest.raises(ValueError):
        support_box(zero_field(2))
