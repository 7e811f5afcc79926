"""
Invariance checks
Scale invariance of J for K = 1, the bubble equation and the symmetry of the ansatz.
verify.coefficient_scale != 1 perturbs the bubble coefficient as a negative control.
"""

import math

import numpy as np

from bubbles import ansatz_eval, make_ansatz
from config import build_ansatz_config
from energy import dj_dlambda, energy_eval
from geometry import reflect_x2, rotate_plane
from potential import ConstantPotential
from quadrature import radial_integral
from riesz import bubble_equation_residual
from suites_manager import check_row

RESIDUAL_TOL = 1e-7


def run(context):
    rows = []
    rows.extend(scale_rows(context))
    rows.extend(equation_rows(context))
    rows.extend(symmetry_rows(context))
    return rows


def _coefficient(context):
    return context.constants.bubble_coeff * float(context.verify["coefficient_scale"])


def _single_bubble(context, lam):
    p = context.problem
    cfg = build_ansatz_config(context.config, m=1, lam=lam)
    pot = context.config["potential"]
    return make_ansatz(p, _coefficient(context), cfg, pot["r0"], pot["x0_pp"], use_cutoff=False)


def scaled_gradient_energy(p, c, lam, spec):
    """int |grad U_{0,lambda}|^2 evaluated at the actual scale"""
    k = p.bubble_exponent

    def grad_sq(r):
        return ((p.N - 2.0) * c * lam ** (k + 2.0) * r * (1.0 + (lam * r) ** 2) ** (-k - 1.0)) ** 2
    return radial_integral(grad_sq, p, spec, scale=1.0 / lam)


def scale_rows(context):
    p = context.problem
    v = context.verify
    K = ConstantPotential(context.potential.r0, context.potential.x0_pp)
    lambdas = [float(lam) for lam in v["lambdas"]]
    rows = []

    reports = {lam: energy_eval(_single_bubble(context, lam), K, context.spec) for lam in lambdas}
    base = reports[lambdas[0]].total
    for lam in lambdas[1:]:
        rows.append(check_row(f"energy_lambda{lam:g}_vs_{lambdas[0]:g}", base, reports[lam].total, v["tol"]))

    grad_base = scaled_gradient_energy(p, _coefficient(context), lambdas[0], context.spec).value
    for lam in lambdas[1:]:
        grad = scaled_gradient_energy(p, _coefficient(context), lam, context.spec).value
        rows.append(check_row(f"gradient_energy_lambda{lam:g}", grad_base, grad, v["tol"]))

    for lam in lambdas:
        dj = dj_dlambda(_single_bubble(context, lam), K, context.spec)
        rows.append(check_row(f"dj_dlambda_zero_lambda{lam:g}", 0.0, dj.value, 3.0 * dj.est_error, bound=True))
    return rows


def equation_rows(context):
    """max |-Delta U - (|x|^{-alpha} * U^{2*}) U^{2*-1}| relative to max |Delta U| on a radial grid"""
    p = context.problem
    c = _coefficient(context)
    radii = np.concatenate([[0.0], np.geomspace(1e-2, 1e2, 64)])
    x = np.zeros((radii.size, p.N))
    x[:, 0] = radii
    rows = []
    for lam in context.verify["lambdas"]:
        residual = bubble_equation_residual(p, c, x / float(lam), lam=float(lam))
        scale = p.N * (p.N - 2.0) * float(lam) ** 2 * c * float(lam) ** p.bubble_exponent
        worst = float(np.max(np.abs(residual))) / scale
        rows.append(check_row(f"bubble_equation_lambda{float(lam):g}", 0.0, worst, RESIDUAL_TOL, bound=True))
    return rows


def symmetry_rows(context):
    """The ansatz is invariant under rotation by 2 pi/m and under x2 -> -x2"""
    p = context.problem
    cfg = build_ansatz_config(context.config)
    pot = context.config["potential"]
    a = make_ansatz(p, context.constants.bubble_coeff, cfg, pot["r0"], pot["x0_pp"],
                    use_cutoff=bool(context.config["ansatz"]["use_cutoff"]))
    rng = np.random.default_rng(context.spec.seed)
    x = cfg.r_bar * rng.uniform(-1.5, 1.5, (256, p.N))
    values = ansatz_eval(a, x)
    scale = float(np.max(np.abs(values)))
    rotated = float(np.max(np.abs(ansatz_eval(a, rotate_plane(x, 2.0 * math.pi / a.m)) - values))) / scale
    reflected = float(np.max(np.abs(ansatz_eval(a, reflect_x2(x)) - values))) / scale
    return [
        check_row(f"rotation_m{a.m}", 0.0, rotated, 1e-12, bound=True),
        check_row("reflection_x2", 0.0, reflected, 1e-12, bound=True),
    ]
