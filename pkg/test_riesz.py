#!/usr/bin/env python3
"""
Tests for the Riesz convolutions: closed forms, numeric oracles and the bubble equation
"""

import numpy as np
import pytest

from bubbles import Bubble, bubble_eval, bubble_laplacian, make_ansatz
from errors import ConfigError
from problem import AnsatzConfig, QuadratureSpec
from riesz import (bubble_equation_residual, riesz_ansatz, riesz_ansatz_closed, riesz_bubble_closed,
                   riesz_coefficient, riesz_identity_closed, riesz_numeric, riesz_numeric_many,
                   riesz_radial_source)
from special import bubble_coefficient_closed

TWO_CENTER = QuadratureSpec(scheme="twocenter2d", rel_tol=1e-9)


@pytest.mark.parametrize("t", [0.0, 1.0, 2.0])
def test_identity_by_two_center_quadrature(p6, t):
    s = 2.0
    x = np.zeros(6)
    x[0] = t
    res = riesz_radial_source(p6, lambda r: (1.0 + r * r) ** -(6.0 - s), np.zeros(6), x, TWO_CENTER,
                              kernel_exponent=2.0 * s)
    assert res.value == pytest.approx(float(riesz_identity_closed(p6, s, x)), rel=1e-6)


def test_bubble_closed_form_against_quadrature(p6, consts6):
    b = Bubble(center=np.array([0.3, 0.0, 0.1, 0.0, 0.0, 0.0]), lam=2.0)
    x = np.array([0.8, 0.4, 0.0, 0.0, -0.2, 0.0])
    T = p6.two_star_alpha

    def source(t):
        offset = np.zeros(np.shape(t) + (6,))
        offset[..., 0] = t
        return bubble_eval(p6, consts6.bubble_coeff, Bubble(np.zeros(6), b.lam), offset) ** T

    res = riesz_radial_source(p6, source, b.center, x, TWO_CENTER, width=1.0 / b.lam)
    assert res.value == pytest.approx(float(riesz_bubble_closed(p6, consts6, b, x)), rel=1e-6)


def test_hls_constant_reading_differs(p6, consts6):
    assert riesz_coefficient(p6, consts6, "hls") != pytest.approx(riesz_coefficient(p6, consts6))
    with pytest.raises(ConfigError):
        riesz_coefficient(p6, consts6, "sharp")


def test_numeric_oracle_matches_closed_form(p6, consts6):
    spec = QuadratureSpec(nodes=2 ** 14, seed=5)
    b = Bubble(center=np.zeros(6), lam=1.0)
    T = p6.two_star_alpha
    f = lambda y: bubble_eval(p6, consts6.bubble_coeff, b, y) ** T
    x = np.array([0.5, 0.0, 0.0, 0.0, 0.0, 0.0])
    res = riesz_numeric(f, p6.alpha, x, spec)
    closed = float(riesz_bubble_closed(p6, consts6, b, x))
    assert res.value == pytest.approx(closed, rel=2e-2)

    many = riesz_numeric_many(f, p6.alpha, [x, 2.0 * x], spec)
    assert many[0].value == pytest.approx(res.value, rel=1e-12)


@pytest.mark.parametrize("make", ["p5", "p6"])
def test_bubble_equation_holds_with_closed_coefficient(request, make):
    p = request.getfixturevalue(make)
    c = bubble_coefficient_closed(p)
    x = np.random.default_rng(1).normal(size=(25, p.N))
    scale = np.abs(bubble_laplacian(p, c, Bubble(np.zeros(p.N), 1.5), x))
    residual = bubble_equation_residual(p, c, x, lam=1.5)
    assert np.max(np.abs(residual) / scale) < 1e-10

    off = bubble_equation_residual(p, 1.1 * c, x, lam=1.5)
    assert np.max(np.abs(off) / scale) > 1e-2


def test_riesz_ansatz_modes(p6, small_spec):
    cfg = AnsatzConfig(m=1, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=5.0, delta=0.1)
    a = make_ansatz(p6, bubble_coefficient_closed(p6), cfg, 1.0, np.zeros(4), use_cutoff=False)
    x = np.array([1.1, 0.0, 0.0, 0.0, 0.0, 0.0])
    closed = riesz_ansatz(a, x, "closed_star", small_spec)
    assert closed.value == pytest.approx(float(riesz_ansatz_closed(a, x)))
    assert closed.est_error == 0.0

    # a single uncut bubble has no excess over the closed form
    numeric = riesz_ansatz(a, x, "numeric_cutoff", small_spec)
    assert numeric.value == pytest.approx(closed.value, rel=1e-12)

    with pytest.raises(ConfigError):
        riesz_ansatz(a, x, "spectral", small_spec)
