#!/usr/bin/env python3
"""
Tests for the Pohozaev residuals, the reduced system, weighted norms and the decay estimates
"""

import math

import numpy as np
import pytest

from bubbles import AnsatzField, make_ansatz
from energy import ExpansionFit
from errors import (ConfigError, EmptySampleSet, ExponentOutOfRange, MTooSmall, NonPositiveCoefficient,
                    RhoOutOfRange, RootOutsideWindow)
from geometry import place_bubbles
from potential import ConstantPotential, make_quadratic_model
from problem import AnsatzConfig
from reduction import (WeightedNormSpec, balance_residual, balance_root, default_rho, lemma_check,
                       make_norm_spec, newton_critical_point, pohozaev_dilation_residual,
                       pohozaev_translation_residual, solve_reduced, tube_samples, weighted_norm_star,
                       weighted_norm_starstar)
from special import ball_volume, bubble_coefficient_closed


def _quadratic(p):
    return make_quadratic_model(1.0, np.zeros(p.N - 2), 1.0 / (2.0 * (p.N - 1)), 0.5)


def _fit(A1, A3):
    return ExpansionFit(A1=A1, A2=1.0, A3=A3, residuals=[], lambda_grid=[])


def _bubble(p, lam=20.0):
    cfg = AnsatzConfig(m=1, r_bar=1.0, x_bar_pp=(0.0,) * (p.N - 2), lam=lam, delta=0.1)
    return make_ansatz(p, bubble_coefficient_closed(p), cfg, 1.0, np.zeros(p.N - 2), use_cutoff=False)


# ================= REDUCED SYSTEM =================

def test_balance_root(p6):
    assert balance_root(1.0, 1.0, p6) == pytest.approx(1.0)
    t = balance_root(2.0, 8.0, p6)
    assert t == pytest.approx(2.0)
    assert balance_residual(2.0, 8.0, t, p6) < 1e-14
    with pytest.raises(NonPositiveCoefficient):
        balance_root(-1.0, 1.0, p6)
    with pytest.raises(NonPositiveCoefficient):
        balance_root(1.0, 0.0, p6)


def test_solve_reduced_with_equal_coefficients(p6):
    K = _quadratic(p6)
    sol = solve_reduced(K, 10, _fit(2.0, 2.0), p6)
    assert sol.t_m == pytest.approx(1.0)
    # lambda_m = t m^{(N-2)/(N-4)} = 10^2
    assert sol.lambda_m == pytest.approx(100.0)
    assert sol.r_bar_m == pytest.approx(1.0)
    assert sol.grad_k_residual <= 1e-12
    assert sol.in_window and sol.proximity_ok
    assert sol.degree_sign == (-1) ** (p6.N - 1)


def test_solve_reduced_rejects_single_bubble(p6):
    K = _quadratic(p6)
    with pytest.raises(MTooSmall):
        solve_reduced(K, 1, _fit(1.0, 1.0), p6)
    with pytest.raises(MTooSmall):
        solve_reduced(K, 4, ExpansionFit(A1=1.0, A2=None, A3=None, residuals=[], lambda_grid=[]), p6)


def test_solve_reduced_window(p6):
    with pytest.raises(RootOutsideWindow):
        solve_reduced(_quadratic(p6), 4, _fit(1.0, 1.0), p6, window=(2.0, 3.0))
    sol = solve_reduced(_quadratic(p6), 4, _fit(1.0, 1.0), p6, window=(2.0, 3.0), require_window=False)
    assert not sol.in_window
    assert sol.lambda_m == pytest.approx(16.0)


@pytest.mark.parametrize("m", [8, 16, 32, 64])
def test_solve_reduced_across_bubble_counts(p6, m):
    sol = solve_reduced(_quadratic(p6), m, _fit(1.5, 1.5), p6)
    assert sol.lambda_m == pytest.approx(m ** 2, rel=1e-12)
    assert sol.in_window and sol.proximity_ok
    offset = math.hypot(sol.r_bar_m - 1.0, np.linalg.norm(sol.x_bar_pp_m))
    assert offset <= sol.lambda_m ** -0.9
    assert sol.balance_residual <= 1e-12


def test_newton_from_offset_start(p6):
    y, norm, iterations = newton_critical_point(_quadratic(p6), start=(1.05, [0.02, -0.01, 0.0, 0.0]))
    np.testing.assert_allclose(y, [1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-10)
    assert norm <= 1e-12
    assert iterations >= 1


# ================= POHOZAEV =================

def test_tube_samples_cover_the_tube(small_spec):
    rho = 0.3
    x, w = tube_samples(6, 1.0, np.zeros(4), rho, small_spec)
    r = np.hypot(x[..., 0], x[..., 1])
    dist = np.sqrt((r - 1.0) ** 2 + np.einsum("...i,...i->...", x[..., 2:], x[..., 2:]))
    assert np.all(dist <= rho + 1e-12)
    # Pappus: the tube volume is 2 pi r0 |B^{N-1}_rho|
    assert np.mean(w) == pytest.approx(2.0 * math.pi * ball_volume(5, rho), rel=1e-2)


def test_exact_bubble_has_zero_residuals(p6, small_spec):
    a = _bubble(p6)
    K = ConstantPotential(1.0, np.zeros(4))
    rho = default_rho(a.cutoff.delta)
    dilation = pohozaev_dilation_residual(AnsatzField(a), K, rho, small_spec, a)
    assert abs(dilation.value) <= 3.0 * dilation.est_error
    translation = pohozaev_translation_residual(AnsatzField(a), K, rho, 3, small_spec, a)
    assert abs(translation.value) <= 3.0 * translation.est_error


@pytest.mark.slow
def test_wrong_coefficient_leaves_a_residual(p6, small_spec):
    a = _bubble(p6)
    K = ConstantPotential(1.0, np.zeros(4))
    wrong = AnsatzField(make_ansatz(p6, 1.2 * a.coeff, AnsatzConfig(1, 1.0, (0.0,) * 4, 20.0, 0.1),
                                    1.0, np.zeros(4), use_cutoff=False))
    res = pohozaev_dilation_residual(wrong, K, 0.35, small_spec.with_nodes(2 ** 10), a)
    assert abs(res.value) > 3.0 * res.est_error


def test_pohozaev_argument_checks(p6, small_spec):
    a = _bubble(p6)
    K = ConstantPotential(1.0, np.zeros(4))
    with pytest.raises(RhoOutOfRange):
        pohozaev_dilation_residual(AnsatzField(a), K, 0.1, small_spec, a)
    with pytest.raises(ConfigError):
        pohozaev_translation_residual(AnsatzField(a), K, 0.35, 2, small_spec, a)


# ================= WEIGHTED NORMS =================

def test_weighted_norms(p6):
    placement = place_bubbles(3, 1.0, np.zeros(4))
    a = make_ansatz(p6, 2.0, AnsatzConfig(3, 1.0, (0.0,) * 4, 30.0, 0.1), 1.0, np.zeros(4), use_cutoff=False)
    spec = make_norm_spec(p6, placement, 30.0, samples=2000, seed=4)
    star = weighted_norm_star(AnsatzField(a), spec)
    assert 0.0 < star.value < math.inf
    assert star.witness is not None and star.samples == len(spec.sample_points)
    doubled = weighted_norm_star(lambda x: 2.0 * AnsatzField(a).value(x), spec)
    assert doubled.value == pytest.approx(2.0 * star.value)
    assert 0.0 <= star.est_error <= star.value
    assert doubled.est_error == pytest.approx(2.0 * star.est_error)

    zero = weighted_norm_starstar(lambda x: np.zeros(len(x)), spec)
    assert zero.value == 0.0 and zero.witness is None

    empty = WeightedNormSpec(tau=spec.tau, sample_points=np.empty((0, 6)), placement=placement, lam=30.0)
    with pytest.raises(EmptySampleSet):
        weighted_norm_star(AnsatzField(a), empty)


# ================= DECAY ESTIMATES =================

def test_two_bubble_product_estimate(p6):
    check = lemma_check("B1", {"a": 2.0, "b": 2.0, "delta": 1.0, "m": 4, "r_bar": 1.0, "seed": 0}, 64, p6, None)
    assert check.holds
    assert np.isfinite(check.worst_ratio)
    assert len(check.witness) == 6


def test_lemma_argument_checks(p5, p6):
    with pytest.raises(ConfigError):
        lemma_check("B2", {}, 16, p6, None)
    with pytest.raises(ExponentOutOfRange):
        lemma_check("B1", {"a": 2.0, "b": 2.0, "delta": 3.0}, 16, p6, None)
    with pytest.raises(ExponentOutOfRange):
        lemma_check("B4", {"eta": 0.5}, 16, p5, None)
