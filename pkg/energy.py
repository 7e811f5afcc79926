"""
Energy functional and its lambda-expansion
J(u) = 1/2 int |grad u|^2 - 1/(2 2*) int int K|u|^{2*}(x) K|u|^{2*}(y) |x-y|^{-alpha},
its value on the ansatz, the reduced lambda-dependence, fits of A1/A2/A3 and
the two-bubble interaction
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from bubbles import Ansatz, ansatz_eval, ansatz_grad, ansatz_laplacian, ansatz_partials, bubble_terms
from errors import ConfigError, IllConditionedFit, StepTooCoarse, TooClose
from geometry import CutoffSpec, interaction_sum, place_bubbles, sector_index
from potential import PotentialModel
from problem import ProblemParams, QuadratureSpec
from quadrature import (IntegralResult, qmc_points, radial_integral, two_center_integral,
                        replicate_estimates, combine_replicates)
from riesz import riesz_ansatz_closed, riesz_coefficient_for, riesz_numeric_many, ansatz_power
from special import SharpConstants

logger = logging.getLogger(__name__)

# ================= CONFIG =================
FD_STEP_FRACTION = 0.05        # default 5-point step, relative to lambda
FD_MAX_STEP_FRACTION = 0.25
PAIR_MIN_SEPARATION = 10.0     # lambda |z1 - z2| below this is not asymptotic
MAX_CONDITION = 1e12
NESTED_FRACTION = 256          # nested QMC uses nodes // NESTED_FRACTION per level
PARTIALS_INNER_FRACTION = 16   # inner budget of the nested excess potential in dJ/dlambda
FD_WEIGHTS = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}
DJ_METHODS = ("analytic", "central_fd", "partials", "energy_fd")


@dataclass(frozen=True)
class EnergyReport:
    gradient_term: float
    nonlocal_term: float
    total: float
    est_error: float
    components: Dict[str, float] = field(default_factory=dict)

    def as_dict(self):
        return {
            "gradient_term": self.gradient_term,
            "nonlocal_term": self.nonlocal_term,
            "total": self.total,
            "est_error": self.est_error,
            "components": dict(self.components),
        }


@dataclass(frozen=True)
class ExpansionFit:
    A1: float
    A2: Optional[float]
    A3: Optional[float]
    residuals: List[float]
    lambda_grid: List[float]
    samples: List[float] = field(default_factory=list)
    interaction_sum: Optional[float] = None
    relative_residual: float = 0.0
    sample_errors: List[float] = field(default_factory=list)

    def predict(self, m: int, N: int, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        out = -m * self.A1 / lam ** 3
        if self.A2 is not None:
            out = out + m * self.A2 * self.interaction_sum / lam ** (N - 1)
        return out

    def as_dict(self):
        return {
            "A1": self.A1,
            "A2": self.A2,
            "A3": self.A3,
            "residuals": list(self.residuals),
            "lambda_grid": list(self.lambda_grid),
            "relative_residual": self.relative_residual,
        }


@dataclass(frozen=True)
class PairInteraction:
    value: float
    est_error: float
    coefficient: float     # -value * lambda^{N-1} |z1 - z2|^{N-2}


# ================= UNIT-SCALE PROFILES =================

class BubbleProfiles:
    """Radial profiles of U_{0,1}, its Riesz potential and their log-lambda derivatives"""

    def __init__(self, p: ProblemParams, c: float):
        self.p = p
        self.c = float(c)
        self.k = p.bubble_exponent
        self.T = p.two_star_alpha
        self.cr = riesz_coefficient_for(p, c)

    def U(self, r):
        return self.c * (1.0 + np.asarray(r) ** 2) ** (-self.k)

    def R(self, r):
        return self.cr * (1.0 + np.asarray(r) ** 2) ** (-self.p.alpha / 2.0)

    def neg_laplacian(self, r):
        r2 = np.asarray(r) ** 2
        return self.p.N * (self.p.N - 2.0) * self.U(r) / (1.0 + r2) ** 2

    def grad_sq(self, r):
        r = np.asarray(r)
        return ((self.p.N - 2.0) * r * self.U(r) / (1.0 + r * r)) ** 2

    def log_dU(self, r):
        r2 = np.asarray(r) ** 2
        return self.k * (1.0 - r2) / (1.0 + r2)

    def log_dR(self, r):
        r2 = np.asarray(r) ** 2
        return 0.5 * self.p.alpha * (1.0 - r2) / (1.0 + r2)

    def density(self, r):
        """R U^{2*}: the energy density of the double integral"""
        return self.R(r) * self.U(r) ** self.T


def _radial(p, spec, g, label):
    res = radial_integral(lambda r: float(g(r)), p, spec)
    logger.debug(f"{label}: {res.value:.12g} +- {res.est_error:.3g}")
    return res


def _pair(p, spec, F, distance, label):
    """Two-center integral at unit scale with centers distance apart"""
    z1 = np.zeros(p.N)
    z2 = np.zeros(p.N)
    z2[0] = distance
    res = two_center_integral(F, z1, z2, p, spec)
    logger.debug(f"{label}(D={distance:.6g}): {res.value:.6g} +- {res.est_error:.3g}")
    return res


def _unique_distances(a: Ansatz) -> Dict[float, int]:
    """Scaled distances lambda |z1 - z_j|, j >= 2, with multiplicities"""
    out: Dict[float, int] = {}
    for d in a.placement.distances_from_first():
        key = round(float(a.lam * d), 12)
        out[key] = out.get(key, 0) + 1
    return out


# ================= SINGLE-BUBBLE INTEGRALS =================

def self_energy_integrals(p: ProblemParams, c: float, spec: QuadratureSpec) -> Dict[str, IntegralResult]:
    """int |grad U|^2 and int R U^{2*} for U = U_{0,1}"""
    prof = BubbleProfiles(p, c)
    return {
        "grad": _radial(p, spec, prof.grad_sq, "int |grad U|^2"),
        "double": _radial(p, spec, prof.density, "int R U^2*"),
    }


def hls_quotient(p: ProblemParams, consts: SharpConstants, spec: QuadratureSpec) -> IntegralResult:
    """int |grad U|^2 / (int int U^{2*} U^{2*} |x-y|^{-alpha})^{1/2*} at the bubble"""
    ints = self_energy_integrals(p, consts.bubble_coeff, spec)
    T = p.two_star_alpha
    value = ints["grad"].value / ints["double"].value ** (1.0 / T)
    rel = ints["grad"].est_error / ints["grad"].value + ints["double"].est_error / (T * ints["double"].value)
    return IntegralResult(value, abs(value) * rel, ints["grad"].nodes_used + ints["double"].nodes_used,
                          "radial1d", True)


def coefficient_a1_moment(p: ProblemParams, consts: SharpConstants, K: PotentialModel,
                          spec: QuadratureSpec) -> float:
    """
    A1 = -Delta K(x0) M2 / (N 2*) with M2 = int |y|^2 (|x|^{-alpha} * U^{2*}) U^{2*} dy

    Both K weights of the double integral contribute to the lambda^{-2} term
    of the energy, hence 1/(N 2*).
    """
    prof = BubbleProfiles(p, consts.bubble_coeff)
    m2 = _radial(p, spec, lambda r: r * r * prof.density(r), "M2")
    lap = K.laplacian_at_critical()
    return float(-lap * m2.value / (p.N * p.two_star_alpha))


# ================= FULL ENERGY =================

def _sector_replicates(F, a: Ansatz, spec: QuadratureSpec) -> np.ndarray:
    """Per-replicate m * int over the sector of z_1 of F, polar QMC around z_1 at the bubble scale"""
    z1 = a.placement.centers[0]
    pts = qmc_points(a.params.N, spec, 1.0 / a.lam, 0.0)
    m = a.m

    def masked(x):
        values = F(x)
        if m == 1:
            return values
        return np.where(sector_index(x, a.placement) == 1, values, 0.0)

    return m * replicate_estimates(masked, z1, pts, spec)


def _excess_density(a: Ansatz, K: PotentialModel):
    """e = K Z^{2*} - sum_j U_j^{2*}"""
    T = a.params.two_star_alpha

    def e(x):
        _, _, _, U = bubble_terms(a, x)
        return K.value(x) * ansatz_power(a, x) - (U ** T).sum(axis=-1)
    return e


def _needs_excess(a: Ansatz, K: PotentialModel) -> bool:
    return a.use_cutoff or a.m > 1 or not K.is_constant


def _nested_spec(spec: QuadratureSpec, fraction: int = NESTED_FRACTION) -> QuadratureSpec:
    return spec.with_nodes(max(spec.nodes // fraction, 16 * spec.shifts))


def _nested_replicates(a: Ansatz, e, outer_spec: QuadratureSpec, inner_spec: QuadratureSpec,
                       weight) -> np.ndarray:
    """Per-replicate m * int over the sector of z_1 of weight(x, R_e(x)), R_e = |x|^{-alpha} * e"""
    p = a.params
    outer = qmc_points(p.N, outer_spec, 1.0 / a.lam, 0.0)
    z1 = a.placement.centers[0]
    estimates = []
    for offsets, weights in zip(outer.offsets, outer.weights):
        xs = z1 + offsets
        inner = np.array([r.value for r in riesz_numeric_many(e, p.alpha, xs, inner_spec, 1.0 / a.lam)])
        values = weight(xs, inner)
        if a.m > 1:
            values = np.where(sector_index(xs, a.placement) == 1, values, 0.0)
        estimates.append(a.m * np.mean(weights * values))
    return np.asarray(estimates)


def _energy_parts(a: Ansatz, K: PotentialModel, spec: QuadratureSpec):
    """EnergyReport, per-replicate totals of J and the error of the deterministic part"""
    p = a.params
    T = p.two_star_alpha
    m = a.m
    prof = BubbleProfiles(p, a.coeff)
    ints = self_energy_integrals(p, a.coeff, spec)

    grad = m * ints["grad"].value
    double_gg = m * ints["double"].value
    grad_err = m * ints["grad"].est_error
    double_err = m * ints["double"].est_error
    for distance, count in _unique_distances(a).items():
        g_pair = _pair(p, spec, lambda s, t: prof.neg_laplacian(s) * prof.U(t), distance, "grad pair")
        d_pair = _pair(p, spec, lambda s, t: prof.R(s) * prof.U(t) ** T, distance, "double pair")
        grad += m * count * g_pair.value
        double_gg += m * count * d_pair.value
        grad_err += m * count * g_pair.est_error
        double_err += m * count * d_pair.est_error

    zeros = np.zeros(spec.shifts)
    loss, ge, ee = zeros, zeros, zeros
    components = {"grad_uncut": 0.5 * grad, "double_gg": double_gg}
    if a.use_cutoff:
        uncut = a.without_cutoff()

        def lost(x):
            g_star = ansatz_grad(uncut, x)
            g_cut = ansatz_grad(a, x)
            return (np.einsum("...i,...i->...", g_star, g_star)
                    - np.einsum("...i,...i->...", g_cut, g_cut))

        loss = _sector_replicates(lost, a, spec)
        components["grad_cutoff_loss"] = 0.5 * float(np.mean(loss))

    if _needs_excess(a, K):
        e = _excess_density(a, K)
        ge = _sector_replicates(lambda x: riesz_ansatz_closed(a, x) * e(x), a, spec)
        level = _nested_spec(spec)
        ee = _nested_replicates(a, e, level, level, lambda xs, inner: e(xs) * inner)
    components.update({"double_ge": 2.0 * float(np.mean(ge)), "double_ee": float(np.mean(ee))})

    gradient_reps = 0.5 * (grad - loss)
    nonlocal_reps = (double_gg + 2.0 * ge + ee) / (2.0 * T)
    totals = gradient_reps - nonlocal_reps
    stochastic = combine_replicates(totals, 0, spec, "J replicates")
    det_err = 0.5 * grad_err + double_err / (2.0 * T)
    report = EnergyReport(float(np.mean(gradient_reps)), float(np.mean(nonlocal_reps)),
                          stochastic.value, float(det_err + stochastic.est_error), components)
    return report, totals, det_err


def energy_eval(a: Ansatz, K: PotentialModel, spec: QuadratureSpec) -> EnergyReport:
    """
    J on the ansatz

    K Z^{2*} is split as g + e with g = sum_j U_j^{2*}. int int g g and, for
    the uncut ansatz, the gradient term are sums of single-bubble and
    two-center integrals; 2 int R_g e is sector-reduced QMC; int int e e is
    nested QMC. The cutoff enters the gradient term through a QMC correction.
    est_error adds the deterministic error to the spread of J over replicates.
    """
    report, _, _ = _energy_parts(a, K, spec)
    logger.info(f"J(m={a.m}, lambda={a.lam:.6g}) = {report.total:.10g} +- {report.est_error:.3g}")
    return report


# ================= REDUCED ENERGY =================

def _pair_energy_integrand(prof: BubbleProfiles):
    """
    Integrand of the two-bubble interaction J(U1+U2) - J(U1) - J(U2) at unit scale,
    without the second-order overlap term
    """
    T = prof.T

    def F(s, t):
        Us, Ut, Rs, Rt = prof.U(s), prof.U(t), prof.R(s), prof.R(t)
        h = (Us + Ut) ** T - Us ** T - Ut ** T
        return Rs * Us ** (T - 1.0) * Ut - Rs * Ut ** T / T - (Rs + Rt) * h / T
    return F


def _pair_energy_derivative_integrand(prof: BubbleProfiles):
    """lambda-derivative of the pair integrand at lambda = 1"""
    T = prof.T

    def F(s, t):
        Us, Ut, Rs, Rt = prof.U(s), prof.U(t), prof.R(s), prof.R(t)
        ls, lt = prof.log_dU(s), prof.log_dU(t)
        rs, rt = prof.log_dR(s), prof.log_dR(t)
        total = Us + Ut
        h = total ** T - Us ** T - Ut ** T
        dh = (T * total ** (T - 1.0) * (Us * ls + Ut * lt)
              - T * Us ** T * ls - T * Ut ** T * lt)
        first = Rs * Us ** (T - 1.0) * Ut * (rs + (T - 1.0) * ls + lt)
        second = Rs * Ut ** T * (rs + T * lt) / T
        third = ((Rs * rs + Rt * rt) * h + (Rs + Rt) * dh) / T
        return first - second - third
    return F


def _jk_replicates(a: Ansatz, K: PotentialModel, spec: QuadratureSpec, lam: float,
                   derivative: bool = False) -> np.ndarray:
    """
    Per-replicate estimates of J_K(lam) = -(1/2*) int (K(z1 + w/lam) - 1) R U^{2*}(w) dw,
    or of its lambda-derivative
    """
    p = a.params
    if K.is_constant:
        return np.zeros(spec.shifts)
    prof = BubbleProfiles(p, a.coeff)
    z1 = a.placement.centers[0]
    pts = qmc_points(p.N, spec, 1.0, 0.0)
    T = p.two_star_alpha

    def integrand(w):
        density = prof.density(np.linalg.norm(w, axis=-1))
        x = z1 + w / lam
        if derivative:
            return np.einsum("...i,...i->...", K.gradient(x), w) * density / lam ** 2
        return (K.value(x) - 1.0) * density

    zero = np.zeros(p.N)
    sign = 1.0 if derivative else -1.0
    return sign * replicate_estimates(integrand, zero, pts, spec) / T


def reduced_energy(a: Ansatz, K: PotentialModel, spec: QuadratureSpec) -> IntegralResult:
    """
    m (J(U) + J_K(lambda)) + (m/2) sum_{j>=2} I_pair(lambda |z1 - z_j|)

    The lambda-dependent leading part of J on the uncut ansatz.
    """
    p = a.params
    prof = BubbleProfiles(p, a.coeff)
    T = p.two_star_alpha
    m = a.m
    ints = self_energy_integrals(p, a.coeff, spec)
    single = 0.5 * ints["grad"].value - ints["double"].value / (2.0 * T)
    jk = _jk_replicates(a, K, spec, a.lam)
    value = m * (single + float(np.mean(jk)))
    err = m * (ints["grad"].est_error + ints["double"].est_error
               + float(np.std(jk, ddof=1)) / math.sqrt(len(jk)))
    F = _pair_energy_integrand(prof)
    for distance, count in _unique_distances(a).items():
        pair = _pair(p, spec, F, distance, "pair energy")
        value += 0.5 * m * count * pair.value
        err += 0.5 * m * count * pair.est_error
    return IntegralResult(float(value), max(float(err), spec.abs_tol), 0, "reduced", True)


def _dj_analytic(a: Ansatz, K: PotentialModel, spec: QuadratureSpec) -> IntegralResult:
    p = a.params
    prof = BubbleProfiles(p, a.coeff)
    T = p.two_star_alpha
    m = a.m
    lam = a.lam

    # single bubble: int grad U . grad dU - int R U^{2*-1} dU, zero for an exact bubble
    s_grad = _radial(p, spec, lambda r: prof.neg_laplacian(r) * prof.U(r) * prof.log_dU(r), "self grad")
    s_nl = _radial(p, spec, lambda r: prof.density(r) * prof.log_dU(r), "self nonlocal")
    value = m * (s_grad.value - s_nl.value) / lam
    err = m * (s_grad.est_error + s_nl.est_error) / lam

    jk = _jk_replicates(a, K, spec, lam, derivative=True)
    value += m * float(np.mean(jk))
    err += m * float(np.std(jk, ddof=1)) / math.sqrt(len(jk))

    F = _pair_energy_derivative_integrand(prof)
    for distance, count in _unique_distances(a).items():
        pair = _pair(p, spec, F, distance, "pair energy derivative")
        value += 0.5 * m * count * pair.value / lam
        err += 0.5 * m * count * pair.est_error / lam
    return IntegralResult(float(value), max(float(err), spec.abs_tol), 0, "analytic", True)


def _fd_step(lam: float, step: Optional[float]) -> float:
    h = FD_STEP_FRACTION * lam if step is None else float(step)
    if not 0.0 < h <= FD_MAX_STEP_FRACTION * lam:
        raise StepTooCoarse(f"step {h:.3g} must lie in (0, {FD_MAX_STEP_FRACTION} lambda] for lambda={lam:.6g}")
    return h


def _dj_central_fd(a: Ansatz, K: PotentialModel, spec: QuadratureSpec,
                   step: Optional[float]) -> IntegralResult:
    lam = a.lam
    h = _fd_step(lam, step)
    p = a.params
    prof = BubbleProfiles(p, a.coeff)
    F = _pair_energy_integrand(prof)
    jk = np.zeros(spec.shifts)
    value = err = 0.0
    for offset, w in FD_WEIGHTS.items():
        shifted = a.with_lambda(lam + offset * h)
        jk = jk + w * _jk_replicates(shifted, K, spec, shifted.lam)
        for distance, count in _unique_distances(shifted).items():
            pair = _pair(p, spec, F, distance, "pair energy")
            value += w * 0.5 * count * pair.value
            err += abs(w) * 0.5 * count * pair.est_error
    m = a.m
    value = m * (value + float(np.mean(jk))) / (12.0 * h)
    err = m * (err + float(np.std(jk, ddof=1)) / math.sqrt(len(jk))) / (12.0 * h)
    return IntegralResult(float(value), max(float(err), spec.abs_tol), 0, "central_fd", True)


def _dj_energy_fd(a: Ansatz, K: PotentialModel, spec: QuadratureSpec,
                  step: Optional[float]) -> IntegralResult:
    """
    5-point stencil on energy_eval

    Every stencil point reuses the same scrambled replicates, so the
    stencil is applied replicate by replicate and the QMC noise largely
    cancels in the difference.
    """
    lam = a.lam
    h = _fd_step(lam, step)
    stencil = np.zeros(spec.shifts)
    det_err = 0.0
    for offset, w in FD_WEIGHTS.items():
        _, totals, err = _energy_parts(a.with_lambda(lam + offset * h), K, spec)
        stencil = stencil + w * totals
        det_err += abs(w) * err
    result = combine_replicates(stencil / (12.0 * h), 0, spec, "energy stencil")
    return IntegralResult(result.value, result.est_error + det_err / (12.0 * h), 0, "energy_fd", True)


def _dj_partials(a: Ansatz, K: PotentialModel, spec: QuadratureSpec) -> IntegralResult:
    """
    int (-Delta Z - K (|x|^{-alpha} * K Z^{2*}) Z^{2*-1}) dZ/dlambda

    The lambda-derivative of J on the ansatz itself, with dZ/dlambda from
    ansatz_partials; sector-reduced QMC, nested for the excess potential.
    """
    p = a.params
    T = p.two_star_alpha

    def weight(x, excess_potential):
        z = ansatz_eval(a, x)
        potential = riesz_ansatz_closed(a, x) + excess_potential
        residual = -ansatz_laplacian(a, x) - K.value(x) * potential * z ** (T - 1.0)
        return residual * ansatz_partials(a, x)["d_lambda"]

    if _needs_excess(a, K):
        estimates = _nested_replicates(a, _excess_density(a, K), spec,
                                       _nested_spec(spec, PARTIALS_INNER_FRACTION), weight)
        return replace(combine_replicates(estimates, 0, spec, "dJ/dlambda partials"), scheme="partials")
    estimates = _sector_replicates(lambda x: weight(x, 0.0), a, spec)
    return replace(combine_replicates(estimates, 0, spec, "dJ/dlambda partials"), scheme="partials")


def dj_dlambda(a: Ansatz, K: PotentialModel, spec: QuadratureSpec, method: str = "analytic",
               step: Optional[float] = None) -> IntegralResult:
    """
    dJ/dlambda by one of DJ_METHODS

    analytic and central_fd differentiate the reduced energy, by
    differentiated integrands or a 5-point stencil; they are the
    deterministic samples the expansion fit uses. partials integrates the
    derivative of J on the ansatz against ansatz_partials (outer points at the
    full budget, each carrying a nested excess potential) and energy_fd runs
    the 5-point stencil on energy_eval.
    """
    if method == "analytic":
        result = _dj_analytic(a, K, spec)
    elif method == "central_fd":
        result = _dj_central_fd(a, K, spec, step)
    elif method == "partials":
        result = _dj_partials(a, K, spec)
    elif method == "energy_fd":
        result = _dj_energy_fd(a, K, spec, step)
    else:
        raise ConfigError(f"Unknown derivative method '{method}'. Available: {list(DJ_METHODS)}")
    logger.debug(f"dJ/dlambda({method}, lambda={a.lam:.6g}) = {result.value:.6g} +- {result.est_error:.3g}")
    return result


# ================= EXPANSION FIT =================

def fit_dj_samples(m: int, N: int, lambdas: Sequence[float], values: Sequence[float],
                   interaction: Optional[float]) -> ExpansionFit:
    """
    Least-squares fit of dJ/dlambda = m(-A1/lambda^3 + A2 B/lambda^{N-1})

    Rows are scaled by lambda^3/m so every sample weighs alike. interaction
    is B = sum_{j>=2} |z1 - z_j|^{-(N-2)}; None drops the A2 column.
    """
    lam = np.asarray(lambdas, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(lam) < 4:
        raise IllConditionedFit(f"need at least 4 lambda values, got {len(lam)}")
    if lam.max() < 4.0 * lam.min():
        raise IllConditionedFit(f"lambda grid spans only a factor {lam.max() / lam.min():.3g}, need 4")

    columns = [-np.ones_like(lam)]
    if interaction is not None:
        columns.append(interaction * lam ** (-(N - 4.0)))
    design = np.column_stack(columns)
    target = y * lam ** 3 / m

    norms = np.linalg.norm(design, axis=0)
    cond = np.linalg.cond(design / norms)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditionedFit(f"design matrix condition number {cond:.3g} too large")

    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    A1 = float(coef[0])
    A2 = float(coef[1]) if interaction is not None else None
    A3 = A2 * interaction / m ** (N - 2.0) if A2 is not None else None

    fit = ExpansionFit(A1=A1, A2=A2, A3=A3, residuals=[], lambda_grid=lam.tolist(),
                       samples=y.tolist(), interaction_sum=interaction)
    residuals = y - fit.predict(m, N, lam)
    scale = np.linalg.norm(y * lam ** 3)
    relative = float(np.linalg.norm(residuals * lam ** 3) / scale) if scale > 0 else 0.0
    return ExpansionFit(A1=A1, A2=A2, A3=A3, residuals=residuals.tolist(), lambda_grid=lam.tolist(),
                        samples=y.tolist(), interaction_sum=interaction, relative_residual=relative)


def fit_expansion(p: ProblemParams, consts: SharpConstants, m: int, K: PotentialModel,
                  r_bar: float, x_bar_pp, lambda_grid: Sequence[float], spec: QuadratureSpec,
                  method: str = "analytic", delta: float = 0.1) -> ExpansionFit:
    """Sample dJ/dlambda on the grid and fit the expansion coefficients"""
    placement = place_bubbles(m, r_bar, x_bar_pp)
    cutoff = CutoffSpec(r0=K.r0, x0_pp=K.x0_pp, delta=delta)
    samples, errors = [], []
    for lam in lambda_grid:
        a = Ansatz(p, placement, float(lam), cutoff, False, consts.bubble_coeff)
        result = dj_dlambda(a, K, spec, method)
        samples.append(result.value)
        errors.append(result.est_error)
        logger.info(f"dJ/dlambda at lambda={lam:.6g}: {samples[-1]:.6g}")
    interaction = interaction_sum(m, r_bar, p.N - 2.0) if m >= 2 else None
    fit = replace(fit_dj_samples(m, p.N, lambda_grid, samples, interaction), sample_errors=errors)
    logger.info(f"Expansion fit: A1={fit.A1:.6g} A2={fit.A2} A3={fit.A3}")
    return fit


def fit_for_m(fit: ExpansionFit, m: int, r_bar: float, N: int) -> ExpansionFit:
    """
    Carry fitted A1, A2 over to another bubble count

    A1 and A2 do not depend on m; A3 = A2 B_m / m^{N-2} is recomputed for the
    new interaction sum B_m.
    """
    if fit.A2 is None:
        raise IllConditionedFit("the fit has no A2 column; refit with m >= 2")
    B = interaction_sum(m, r_bar, N - 2.0)
    return replace(fit, A3=fit.A2 * B / m ** (N - 2.0), interaction_sum=B)


# ================= PAIR INTERACTION =================

def pair_interaction(p: ProblemParams, consts: SharpConstants, z1, z2, lam: float,
                     spec: QuadratureSpec) -> PairInteraction:
    """
    int (|x|^{-alpha} * U_1^{2*}) U_1^{2*-2} U_2 dU_1/dlambda

    Equals lambda^{-1} times its value at unit scale and separation lambda |z1 - z2|.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    d = float(np.linalg.norm(z1 - z2))
    if lam * d < PAIR_MIN_SEPARATION:
        raise TooClose(f"lambda |z1 - z2| = {lam * d:.6g} is below {PAIR_MIN_SEPARATION}")
    prof = BubbleProfiles(p, consts.bubble_coeff)
    T = p.two_star_alpha

    def F(s, t):
        Us = prof.U(s)
        return prof.R(s) * Us ** (T - 1.0) * prof.log_dU(s) * prof.U(t)

    unit = _pair(p, spec, F, lam * d, "pair interaction")
    value = unit.value / lam
    coefficient = -value * lam ** (p.N - 1.0) * d ** (p.N - 2.0)
    return PairInteraction(value=float(value), est_error=float(unit.est_error / lam),
                           coefficient=float(coefficient))
