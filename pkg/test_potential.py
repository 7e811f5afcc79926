#!/usr/bin/env python3
"""
Tests for the potential models
"""

import numpy as np
import pytest

from errors import ConfigError, CurvatureTooLarge, DegenerateHessian
from geometry import CutoffSpec
from potential import (TRANSITION_PEAK, CallablePotential, ConstantPotential, degree_sign,
                       make_quadratic_model, potential_eval, validate_against_cutoff)

X0_PP = np.zeros(4)


@pytest.fixture
def quadratic():
    return make_quadratic_model(1.0, X0_PP, 1.0 / 10.0, 0.5)


def test_quadratic_normalized_critical_point(quadratic):
    x0 = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    assert quadratic.value(x0) == pytest.approx(1.0)
    np.testing.assert_allclose(quadratic.gradient(x0), 0.0, atol=1e-15)
    np.testing.assert_allclose(quadratic.grad_reduced(1.0, X0_PP), 0.0, atol=1e-15)
    # a = 1/(2(N-1)) gives Delta K = -1
    assert quadratic.laplacian_at_critical() == pytest.approx(-1.0)
    assert quadratic.laplacian(x0) == pytest.approx(-1.0)


def test_quadratic_floor(quadratic):
    far = np.array([5.0, 0.0, 2.0, 0.0, 0.0, 0.0])
    assert quadratic.value(far) == pytest.approx(quadratic.floor)
    assert quadratic.floor == pytest.approx(1.0 - 0.1 * 0.25)


def test_transition_peak_value():
    assert TRANSITION_PEAK == pytest.approx(1.428, abs=1e-3)


def test_curvature_gate():
    with pytest.raises(CurvatureTooLarge):
        make_quadratic_model(1.0, X0_PP, 4.0, 0.5)
    with pytest.raises(ConfigError):
        make_quadratic_model(1.0, X0_PP, -1.0, 0.5)


def test_quadratic_derivatives_in_transition(quadratic):
    x = np.array([1.6, 0.3, 0.2, 0.0, 0.0, 0.0])
    ev = potential_eval(quadratic, x)
    assert quadratic.rho_t < np.linalg.norm([np.hypot(1.6, 0.3) - 1.0, 0.2]) < 2 * quadratic.rho_t

    h = 1e-6
    fd = np.array([(quadratic.value(x + h * e) - quadratic.value(x - h * e)) / (2 * h) for e in np.eye(6)])
    np.testing.assert_allclose(quadratic.gradient(x), fd, rtol=1e-6, atol=1e-9)
    assert ev.grad_r == pytest.approx(quadratic.grad_reduced(np.hypot(1.6, 0.3), [0.2, 0, 0, 0])[0])

    h = 1e-4
    lap = sum(quadratic.value(x + h * e) - 2 * quadratic.value(x) + quadratic.value(x - h * e)
              for e in np.eye(6)) / h ** 2
    assert quadratic.laplacian(x) == pytest.approx(lap, rel=1e-5)


def test_degree_sign(quadratic):
    assert degree_sign(quadratic) == -1
    assert degree_sign(make_quadratic_model(1.0, np.zeros(3), 1.0 / 8.0, 0.5)) == 1


def test_constant_potential():
    K = ConstantPotential(1.0, X0_PP)
    x = np.random.default_rng(0).normal(size=(10, 6))
    np.testing.assert_array_equal(K.value(x), 1.0)
    np.testing.assert_array_equal(K.gradient(x), 0.0)
    assert K.is_constant


def _cap(r, x_pp):
    return 1.0 - 0.1 * ((r - 1.0) ** 2 + np.sum(x_pp ** 2, axis=-1))


def test_callable_matches_quadratic(quadratic):
    K = CallablePotential(_cap, 1.0, X0_PP)
    x = np.array([1.1, 0.2, 0.05, -0.1, 0.0, 0.02])
    assert K.value(x) == pytest.approx(quadratic.value(x), rel=1e-14)
    np.testing.assert_allclose(K.gradient(x), quadratic.gradient(x), rtol=1e-6, atol=1e-10)
    assert K.laplacian(x) == pytest.approx(quadratic.laplacian(x), rel=1e-4)
    np.testing.assert_allclose(K.hessian_reduced(1.0, X0_PP), -0.2 * np.eye(5), atol=1e-6)


def test_callable_assumptions():
    report = CallablePotential(_cap, 1.0, X0_PP).check_assumptions(delta=0.1)
    assert report["holds"]
    assert report["degree_sign"] == -1

    bowl = CallablePotential(lambda r, x_pp: 1.0 + 0.1 * ((r - 1.0) ** 2 + np.sum(x_pp ** 2, axis=-1)),
                             1.0, X0_PP)
    report = bowl.check_assumptions(delta=0.1)
    assert not report["holds"]
    assert not report["checks"]["negative_laplacian"]


def test_degenerate_hessian():
    flat = CallablePotential(lambda r, x_pp: 1.0 - 0.05 * (r - 1.0) ** 2, 1.0, X0_PP)
    with pytest.raises(DegenerateHessian):
        degree_sign(flat)


def test_positivity_on_cutoff_ball(quadratic):
    cutoff = CutoffSpec(r0=1.0, x0_pp=(0.0,) * 4, delta=0.1)
    assert validate_against_cutoff(quadratic, cutoff) > 0
    steep = CallablePotential(lambda r, x_pp: 1.0 - 2.0 * ((r - 1.0) ** 2 + np.sum(x_pp ** 2, axis=-1)),
                              1.0, X0_PP)
    with pytest.raises(CurvatureTooLarge):
        validate_against_cutoff(steep, cutoff)
