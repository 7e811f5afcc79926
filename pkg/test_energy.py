#!/usr/bin/env python3
"""
Tests for the energy functional, its lambda-derivative and the expansion fit
"""

import numpy as np
import pytest

from bubbles import ansatz_partials, make_ansatz
from energy import (BubbleProfiles, ExpansionFit, coefficient_a1_moment, dj_dlambda, energy_eval, fit_dj_samples,
                    fit_expansion, fit_for_m, pair_interaction, reduced_energy)
from errors import ConfigError, IllConditionedFit, StepTooCoarse, TooClose
from geometry import interaction_sum
from potential import ConstantPotential, make_quadratic_model
from problem import AnsatzConfig, QuadratureSpec
from quadrature import radial_integral
from special import bubble_coefficient_closed

SPEC = QuadratureSpec(scheme="twocenter2d", rel_tol=1e-10)
GRID = [10.0, 20.0, 40.0, 80.0]


def _ansatz(p, m, lam, coeff=None):
    cfg = AnsatzConfig(m=m, r_bar=1.0, x_bar_pp=(0.0,) * (p.N - 2), lam=lam, delta=0.1)
    c = bubble_coefficient_closed(p) if coeff is None else coeff
    return make_ansatz(p, c, cfg, 1.0, np.zeros(p.N - 2), use_cutoff=False)


# ================= EXPANSION FIT =================

def test_fit_recovers_synthetic_coefficients():
    m, N, A1, A2 = 2, 6, 1.5, 0.7
    B = interaction_sum(m, 1.0, N - 2.0)
    assert B == pytest.approx(1.0 / 16.0)
    lam = np.asarray(GRID)
    values = m * (-A1 / lam ** 3 + A2 * B / lam ** (N - 1))
    fit = fit_dj_samples(m, N, GRID, values, B)
    assert fit.A1 == pytest.approx(A1, rel=1e-8)
    assert fit.A2 == pytest.approx(A2, rel=1e-8)
    assert fit.A3 == pytest.approx(A2 * B / m ** (N - 2), rel=1e-8)
    assert fit.relative_residual < 1e-10
    np.testing.assert_allclose(fit.predict(m, N, lam), values, rtol=1e-10)


def test_fit_without_interaction_column():
    lam = np.asarray(GRID)
    fit = fit_dj_samples(1, 6, GRID, -2.0 / lam ** 3, None)
    assert fit.A1 == pytest.approx(2.0)
    assert fit.A2 is None and fit.A3 is None
    with pytest.raises(IllConditionedFit):
        fit_for_m(fit, 8, 1.0, 6)


@pytest.mark.parametrize("grid", [[10.0, 20.0, 40.0], [10.0, 12.0, 14.0, 16.0]])
def test_fit_rejects_poor_grids(grid):
    with pytest.raises(IllConditionedFit):
        fit_dj_samples(2, 6, grid, [1.0] * len(grid), 0.0625)


def test_fit_degenerates_in_dimension_four():
    # both columns scale as lambda^-3 when N = 4
    with pytest.raises(IllConditionedFit):
        fit_dj_samples(2, 4, GRID, [1.0] * 4, 0.25)


def test_fit_for_m_recomputes_a3():
    fit = ExpansionFit(A1=1.0, A2=0.5, A3=0.0, residuals=[], lambda_grid=GRID, interaction_sum=1.0 / 16.0)
    moved = fit_for_m(fit, 10, 1.0, 6)
    B = interaction_sum(10, 1.0, 4.0)
    assert moved.interaction_sum == pytest.approx(B)
    assert moved.A3 == pytest.approx(0.5 * B / 10 ** 4)
    assert moved.A1 == fit.A1


# ================= ENERGY =================

def test_single_bubble_energy_is_scale_invariant(p6, radial_spec):
    K = ConstantPotential(1.0, np.zeros(4))
    reports = [energy_eval(_ansatz(p6, 1, lam), K, radial_spec) for lam in (1.0, 7.0)]
    T = p6.two_star_alpha
    for report in reports:
        # the bubble equation makes both integrals equal
        assert report.nonlocal_term == pytest.approx(report.gradient_term / T, rel=1e-8)
        assert report.total == pytest.approx((1.0 - 1.0 / T) * report.gradient_term, rel=1e-8)
    assert reports[0].total == pytest.approx(reports[1].total, rel=1e-10)

    reduced = reduced_energy(_ansatz(p6, 1, 7.0), K, radial_spec)
    assert reduced.value == pytest.approx(reports[1].total, rel=1e-10)


def test_analytic_derivative_matches_finite_differences(p6):
    K = ConstantPotential(1.0, np.zeros(4))
    a = _ansatz(p6, 2, 5.0)
    analytic = dj_dlambda(a, K, SPEC, "analytic")
    fd = dj_dlambda(a, K, SPEC, "central_fd")
    assert analytic.value == pytest.approx(fd.value, rel=1e-3)


def test_full_energy_derivatives_vanish_for_one_unit_bubble(p6, small_spec):
    K = ConstantPotential(1.0, np.zeros(4))
    a = _ansatz(p6, 1, 3.0)
    for method in ("partials", "energy_fd"):
        result = dj_dlambda(a, K, small_spec, method)
        assert abs(result.value) <= max(1e-8, 3.0 * result.est_error)
        assert result.scheme == method


def test_reduced_derivative_integrand_is_the_ansatz_partial(p6):
    a = _ansatz(p6, 1, 4.0)
    prof = BubbleProfiles(p6, a.coeff)
    x = np.random.default_rng(3).normal(size=(50, 6)) / 4.0 + a.placement.centers[0]
    w = 4.0 * np.linalg.norm(x - a.placement.centers[0], axis=1)
    scaled_u = 4.0 ** (p6.bubble_exponent) * prof.U(w)
    np.testing.assert_allclose(ansatz_partials(a, x)["d_lambda"], scaled_u * prof.log_dU(w) / 4.0, rtol=1e-12)


@pytest.mark.slow
def test_full_energy_derivatives_follow_the_reduced_energy(p6):
    K = make_quadratic_model(1.0, np.zeros(4), 0.1, 0.5)
    spec = QuadratureSpec(nodes=2 ** 13, shifts=8, seed=5, rel_tol=1e-9)
    a = _ansatz(p6, 1, 20.0)
    reduced = dj_dlambda(a, K, spec, "analytic")
    assert reduced.value < 0
    stencil = dj_dlambda(a, K, spec, "energy_fd")
    assert stencil.value == pytest.approx(reduced.value, rel=0.1, abs=10.0 * stencil.est_error)
    partials = dj_dlambda(a, K, spec, "partials")
    assert partials.value == pytest.approx(reduced.value, rel=0.2, abs=10.0 * partials.est_error)
    assert partials.value == pytest.approx(stencil.value, rel=0.2,
                                           abs=max(1e-4, 10.0 * (partials.est_error + stencil.est_error)))


def test_derivative_argument_errors(p6):
    K = ConstantPotential(1.0, np.zeros(4))
    a = _ansatz(p6, 2, 20.0)
    with pytest.raises(StepTooCoarse):
        dj_dlambda(a, K, SPEC, "central_fd", step=10.0)
    with pytest.raises(StepTooCoarse):
        dj_dlambda(a, K, SPEC, "central_fd", step=0.0)
    with pytest.raises(ConfigError):
        dj_dlambda(a, K, SPEC, "spectral")


@pytest.mark.slow
def test_expansion_fit_for_two_unit_bubbles(p6, consts6):
    K = ConstantPotential(1.0, np.zeros(4))
    fit = fit_expansion(p6, consts6, 2, K, 1.0, np.zeros(4), [20.0, 40.0, 80.0, 160.0], SPEC)
    assert fit.A2 > 0
    assert fit.relative_residual < 0.05
    assert abs(fit.A1) < 0.05 * fit.A2


@pytest.mark.slow
def test_expansion_fit_for_quadratic_potential(p6, consts6, radial_spec):
    K = make_quadratic_model(1.0, np.zeros(4), 0.1, 0.5)
    spec = QuadratureSpec(scheme="twocenter2d", nodes=2 ** 16, rel_tol=1e-10)
    grid = [20.0, 40.0, 80.0, 160.0]
    fit = fit_expansion(p6, consts6, 1, K, 1.0, np.zeros(4), grid, spec)
    assert fit.A1 > 0
    assert fit.A1 == pytest.approx(coefficient_a1_moment(p6, consts6, K, radial_spec), rel=0.05)
    scaled = np.asarray(fit.samples) * np.asarray(grid) ** 3
    # lambda^3 dJ/dlambda settles between lambda = 20 and 40
    assert scaled[0] == pytest.approx(scaled[1], rel=0.05)


@pytest.mark.slow
def test_energy_of_cut_off_pair_in_quadratic_potential(p6, small_spec):
    K = make_quadratic_model(1.0, np.zeros(4), 0.1, 0.5)
    cfg = AnsatzConfig(m=2, r_bar=1.0, x_bar_pp=(0.0,) * 4, lam=40.0, delta=0.1)
    a = make_ansatz(p6, bubble_coefficient_closed(p6), cfg, 1.0, np.zeros(4), use_cutoff=True)
    report = energy_eval(a, K, small_spec)
    assert set(report.components) == {"grad_uncut", "double_gg", "grad_cutoff_loss", "double_ge", "double_ee"}
    assert all(np.isfinite(v) for v in report.components.values())
    # two well separated bubbles carry about twice the single-bubble energy
    single = energy_eval(_ansatz(p6, 1, 40.0), ConstantPotential(1.0, np.zeros(4)), small_spec)
    assert report.total == pytest.approx(2.0 * single.total, rel=0.05)
    assert report.est_error < 0.01 * abs(report.total)


def test_a1_moment_for_unit_laplacian(p6, consts6, radial_spec):
    K = make_quadratic_model(1.0, np.zeros(4), 1.0 / (2.0 * (p6.N - 1)), 0.5)
    prof = BubbleProfiles(p6, consts6.bubble_coeff)
    m2 = radial_integral(lambda r: r * r * float(prof.density(r)), p6, radial_spec).value
    A1 = coefficient_a1_moment(p6, consts6, K, radial_spec)
    assert A1 > 0
    assert A1 == pytest.approx(m2 / (p6.N * p6.two_star_alpha), rel=1e-8)


# ================= PAIR INTERACTION =================

def test_pair_interaction_scaling(p6, consts6):
    z1 = np.zeros(6)
    near = pair_interaction(p6, consts6, z1, np.eye(6)[0], 20.0, SPEC)
    far = pair_interaction(p6, consts6, z1, 2.0 * np.eye(6)[0], 10.0, SPEC)
    # same lambda |z1 - z2|, so only the 1/lambda prefactor differs
    assert 20.0 * near.value == pytest.approx(10.0 * far.value, rel=1e-10)
    assert near.value < 0 < near.coefficient


@pytest.mark.slow
def test_pair_interaction_decay_rates(p6, consts6):
    z1 = np.zeros(6)
    distances = np.array([1.0, 2.0, 4.0])
    by_distance = [pair_interaction(p6, consts6, z1, d * np.eye(6)[0], 20.0, SPEC).value for d in distances]
    lambdas = np.array([20.0, 40.0, 80.0])
    by_lambda = [pair_interaction(p6, consts6, z1, np.eye(6)[0], lam, SPEC).value for lam in lambdas]
    assert all(v < 0 for v in by_distance + by_lambda)
    slope_d = np.polyfit(np.log(distances), np.log(-np.asarray(by_distance)), 1)[0]
    slope_l = np.polyfit(np.log(lambdas), np.log(-np.asarray(by_lambda)), 1)[0]
    assert slope_d == pytest.approx(-(p6.N - 2), abs=0.1)
    assert slope_l == pytest.approx(-(p6.N - 1), abs=0.1)


def test_pair_interaction_too_close(p6, consts6):
    with pytest.raises(TooClose):
        pair_interaction(p6, consts6, np.zeros(6), 0.1 * np.eye(6)[0], 20.0, SPEC)
