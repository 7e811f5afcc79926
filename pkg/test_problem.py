#!/usr/bin/env python3
"""
Tests for problem parameters and the shared configuration types
"""

import pytest

from errors import AlphaOutOfRange, ConfigError, DimensionTooSmall
from problem import AnsatzConfig, QuadratureSpec, alpha_lower_bound, make_problem


def test_derived_exponents_n6():
    p = make_problem(6, 4.0)
    assert p.two_star_alpha == pytest.approx(2.0)
    assert p.tau == pytest.approx(0.5)
    assert p.bubble_exponent == pytest.approx(2.0)
    assert p.scaling_exponent == pytest.approx(2.0)


def test_derived_exponents_n5():
    p = make_problem(5, 3.5)
    assert p.two_star_alpha == pytest.approx(6.5 / 3.0)
    assert p.scaling_exponent == pytest.approx(3.0)


@pytest.mark.parametrize("N", [3, 4])
def test_small_dimension_rejected(N):
    with pytest.raises(DimensionTooSmall, match="N >= 5"):
        make_problem(N, 1.0)


def test_non_integer_dimension_rejected():
    with pytest.raises(DimensionTooSmall):
        make_problem(5.5, 3.5)


@pytest.mark.parametrize("alpha", [3.5, 6.0, 7.0])
def test_alpha_range(alpha):
    assert alpha_lower_bound(6) == pytest.approx(3.5)
    with pytest.raises(AlphaOutOfRange):
        make_problem(6, alpha)


def test_alpha_just_inside_range():
    assert make_problem(6, 3.6).alpha == 3.6


def test_ansatz_config_validation():
    with pytest.raises(ConfigError):
        AnsatzConfig(m=0, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=10.0, delta=0.1)
    with pytest.raises(ConfigError):
        AnsatzConfig(m=2, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=10.0, delta=0.1, window=(2.0, 1.0))
    with pytest.raises(ConfigError):
        AnsatzConfig(m=2, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=10.0, delta=0.1, theta=1.0)


def test_window_scales_with_m():
    p = make_problem(6, 4.0)
    cfg = AnsatzConfig(m=4, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=16.0, delta=0.1, window=(0.5, 2.0))
    lo, hi = cfg.window_bounds(p)
    assert (lo, hi) == pytest.approx((8.0, 32.0))
    assert cfg.in_window(p)


def test_proximity_bound():
    cfg = AnsatzConfig(m=4, r_bar=1.01, x_bar_pp=(0.0,) * 4, lam=100.0, delta=0.1, theta=0.1)
    # 100^{-0.9} ~ 0.0158
    assert cfg.satisfies_proximity(1.0, (0.0,) * 4)
    far = AnsatzConfig(m=4, r_bar=1.05, x_bar_pp=(0.0,) * 4, lam=100.0, delta=0.1, theta=0.1)
    assert not far.satisfies_proximity(1.0, (0.0,) * 4)


def test_quadrature_spec_validation():
    with pytest.raises(ConfigError):
        QuadratureSpec(scheme="montecarlo")
    with pytest.raises(ConfigError):
        QuadratureSpec(shifts=1)
    spec = QuadratureSpec().with_nodes(1024)
    assert spec.nodes == 1024
    assert spec.with_scheme("radial1d").scheme == "radial1d"
