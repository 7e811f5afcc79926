#!/usr/bin/env python3
"""
Tests for the Gamma wrapper and the sharp constants
"""

import math

import pytest

from errors import NonPositiveArgument, SOutOfRange
from special import (ball_volume, bubble_coefficient, bubble_coefficient_closed, gamma_fn, hls_constant,
                     rayleigh_quotient, riesz_identity_constant, shl_constant, sobolev_constant,
                     sobolev_constant_closed, sphere_area)


def test_gamma_values():
    assert gamma_fn(5.0) == pytest.approx(24.0, rel=1e-14)
    assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, -2.5])
def test_gamma_rejects_non_positive(x):
    with pytest.raises(NonPositiveArgument):
        gamma_fn(x)


def test_sphere_and_ball():
    assert sphere_area(3) == pytest.approx(4.0 * math.pi)
    assert sphere_area(2) == pytest.approx(2.0 * math.pi)
    assert ball_volume(3, 2.0) == pytest.approx(32.0 * math.pi / 3.0)


def test_hls_constant_n6(p6):
    expected = math.pi ** 2 / 6.0 * 60.0 ** (1.0 / 3.0)
    assert hls_constant(p6) == pytest.approx(expected, rel=1e-12)
    assert hls_constant(p6) == pytest.approx(6.43936, rel=1e-4)


def test_riesz_identity_constant(p6):
    assert riesz_identity_constant(p6, 2.0) == pytest.approx(math.pi ** 3 / 6.0, rel=1e-14)


@pytest.mark.parametrize("s", [0.0, 3.0, 4.0, -1.0])
def test_riesz_identity_constant_range(p6, s):
    with pytest.raises(SOutOfRange):
        riesz_identity_constant(p6, s)


def test_sobolev_oracle_matches_closed_form(p6, p5):
    for p in (p6, p5):
        assert sobolev_constant(p) == pytest.approx(sobolev_constant_closed(p), rel=1e-8)
    assert sobolev_constant_closed(p6) == pytest.approx(24.0 * math.pi / 60.0 ** (1.0 / 3.0), rel=1e-13)


def test_rayleigh_quotient_is_dilation_invariant(p6, radial_spec):
    base = rayleigh_quotient(p6, radial_spec)
    assert rayleigh_quotient(p6, radial_spec, scale=3.0) == pytest.approx(base, rel=1e-7)


def test_shl_and_bubble_coefficient(p6, p5, consts6):
    assert consts6.shl == pytest.approx(consts6.sobolev_s / consts6.hls_c ** 0.5, rel=1e-14)
    assert consts6.i_half_alpha == pytest.approx(math.pi ** 3 / 6.0)
    for p in (p6, p5):
        s = sobolev_constant_closed(p)
        c = hls_constant(p)
        assert bubble_coefficient(p, s, c) == pytest.approx(bubble_coefficient_closed(p), rel=1e-10)
        assert shl_constant(p, s, c) > 0
