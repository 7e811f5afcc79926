"""
Local Pohozaev residual checks
Exact bubble with K = 1 gives zero residuals; a perturbed field matches its finite-difference twin
"""

import logging

import numpy as np

from bubbles import AnsatzField, FDField, PerturbedField, make_ansatz
from config import build_ansatz_config
from potential import ConstantPotential
from reduction import pohozaev_dilation_residual, pohozaev_scan
from special import bubble_coefficient_closed
from suites_manager import check_row

logger = logging.getLogger(__name__)

FD_STEP_FRACTION = 1e-4     # of delta


def exact_bubble(context):
    """
    Single uncut bubble centered on the critical circle at scale pohozaev.lam

    Uses the coefficient solving the bubble equation in closed form, so the
    residual is pure rounding.
    """
    p = context.problem
    cfg = build_ansatz_config(context.config, m=1, lam=context.config["pohozaev"]["lam"])
    pot = context.config["potential"]
    return make_ansatz(p, bubble_coefficient_closed(p), cfg, pot["r0"], pot["x0_pp"], use_cutoff=False)


def perturbed_field(context, a):
    """The bubble plus eps * peak * Gaussian bump, offset half a width from the center"""
    poh = context.config["pohozaev"]
    width = float(poh["perturbation_width"])
    peak = a.coeff * a.lam ** a.params.bubble_exponent
    center = np.array(a.placement.centers[0])
    center[0] += 0.5 * width
    return PerturbedField(AnsatzField(a), float(poh["perturbation_eps"]) * peak, center, width)


def run(context):
    poh = context.config["pohozaev"]
    spec = context.spec.with_nodes(int(context.verify["nodes"]))
    a = exact_bubble(context)
    K = ConstantPotential(context.potential.r0, context.potential.x0_pp)
    rows = []

    for kind, result in pohozaev_scan(AnsatzField(a), K, a, poh["rho_factors"], poh["translation"], spec):
        factor = result.rho / a.cutoff.delta
        rows.append(check_row(f"exact_{kind}_rho{factor:g}delta", 0.0, result.value,
                              3.0 * result.est_error, bound=True))

    if float(poh["perturbation_eps"]) > 0.0:
        u = perturbed_field(context, a)
        fd = FDField(u.value, FD_STEP_FRACTION * a.cutoff.delta)
        rho = float(poh["rho_factors"][0]) * a.cutoff.delta
        analytic = pohozaev_dilation_residual(u, K, rho, spec, a)
        oracle = pohozaev_dilation_residual(fd, K, rho, spec, a)
        tol = 3.0 * (analytic.est_error + oracle.est_error)
        logger.info(f"perturbed residual {analytic.value:.6g} vs FD {oracle.value:.6g} (tol {tol:.3g})")
        rows.append(check_row(f"perturbed_vs_fd_rho{rho / a.cutoff.delta:g}delta", analytic.value,
                              oracle.value, tol, relative=False))
    return rows
