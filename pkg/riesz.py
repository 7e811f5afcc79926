"""
Riesz potentials |x|^{-alpha} * f
Closed forms for bubble powers and numeric convolution oracles
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from bubbles import Ansatz, Bubble, bubble_eval, bubble_laplacian, bubble_terms
from errors import ConfigError
from geometry import cutoff_eval
from problem import ProblemParams, QuadratureSpec
from quadrature import (IntegralResult, qmc_integral, qmc_points, radial_integral,
                        replicate_estimates, combine_replicates, two_center_integral)
from special import SharpConstants, riesz_identity_constant

logger = logging.getLogger(__name__)

RIESZ_CONSTANTS = ("bubble", "hls")
RIESZ_MODES = ("closed_star", "numeric_cutoff")


@dataclass(frozen=True)
class RieszClosedForm:
    """|x|^{-alpha} * U_{z,lambda}^{2*} = coefficient (lambda/(1+lambda^2|x-z|^2))^{alpha/2}"""
    coefficient: float
    bubble: Bubble

    def __call__(self, x, alpha: float) -> np.ndarray:
        diff = np.asarray(x, dtype=float) - np.asarray(self.bubble.center, dtype=float)
        d2 = np.einsum("...i,...i->...", diff, diff)
        lam = self.bubble.lam
        return self.coefficient * (lam / (1.0 + lam ** 2 * d2)) ** (alpha / 2.0)


def riesz_coefficient(p: ProblemParams, consts: SharpConstants, constant: str = "bubble") -> float:
    """I(alpha/2) c^{2*}; constant='hls' uses the HLS constant in place of c"""
    if constant not in RIESZ_CONSTANTS:
        raise ConfigError(f"Unknown Riesz constant '{constant}'. Available: {list(RIESZ_CONSTANTS)}")
    base = consts.bubble_coeff if constant == "bubble" else consts.hls_c
    return riesz_identity_constant(p, p.alpha / 2.0) * base ** p.two_star_alpha


def riesz_coefficient_for(p: ProblemParams, coeff: float) -> float:
    return riesz_identity_constant(p, p.alpha / 2.0) * coeff ** p.two_star_alpha


def riesz_bubble_closed(p: ProblemParams, consts: SharpConstants, b: Bubble, x,
                        constant: str = "bubble") -> np.ndarray:
    form = RieszClosedForm(riesz_coefficient(p, consts, constant), b)
    return form(x, p.alpha)


def riesz_identity_closed(p: ProblemParams, s: float, x) -> np.ndarray:
    """I(s) (1+|x|^2)^{-s}"""
    x = np.asarray(x, dtype=float)
    return riesz_identity_constant(p, s) * (1.0 + np.einsum("...i,...i->...", x, x)) ** (-s)


def bubble_equation_residual(p: ProblemParams, c: float, x, lam: float = 1.0, center=None) -> np.ndarray:
    """
    -Delta U - (|x|^{-alpha} * U^{2*}) U^{2*-1} for U = U_{center,lam} with coefficient c

    Vanishes identically when c is the bubble coefficient.
    """
    center = np.zeros(p.N) if center is None else np.asarray(center, dtype=float)
    b = Bubble(center=center, lam=float(lam))
    U = bubble_eval(p, c, b, x)
    riesz = RieszClosedForm(riesz_coefficient_for(p, c), b)(x, p.alpha)
    return -bubble_laplacian(p, c, b, x) - riesz * U ** (p.two_star_alpha - 1.0)


# ================= NUMERIC ORACLES =================

def riesz_numeric(f: Callable, alpha: float, x, spec: QuadratureSpec, scale: float = 1.0) -> IntegralResult:
    """
    int f(y) |x - y|^{-alpha} dy by polar QMC around the singular point y = x

    f takes an (n, N) array. scale is the length scale of the radial map and
    should match the width of f.
    """
    x = np.asarray(x, dtype=float)
    return qmc_integral(f, x, scale, spec, singular_exponent=alpha)


def riesz_numeric_many(f: Callable, alpha: float, xs, spec: QuadratureSpec, scale: float = 1.0):
    """riesz_numeric at several points sharing one set of sample offsets"""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    pts = qmc_points(xs.shape[1], spec, float(scale), float(alpha))
    return [combine_replicates(replicate_estimates(f, x, pts, spec), pts.weights.size, spec, "riesz_numeric")
            for x in xs]


def riesz_radial_source(p: ProblemParams, profile: Callable, center, x, spec: QuadratureSpec,
                        kernel_exponent: Optional[float] = None, width: float = 1.0) -> IntegralResult:
    """
    int profile(|y - center|) |x - y|^{-kernel} dy for a radial source

    Reduced to two variables around the pair (x, center); kernel defaults to alpha.
    profile must accept numpy arrays.
    """
    kernel = p.alpha if kernel_exponent is None else float(kernel_exponent)
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if np.allclose(x, center, rtol=0.0, atol=1e-14):
        return radial_integral(lambda r: float(profile(np.asarray(r))), p, spec, kernel_exponent=kernel)
    return two_center_integral(lambda s, t: profile(t), x, center, p, spec,
                               kernel_exponent=kernel, width=width)


# ================= ANSATZ CONVOLUTIONS =================

def riesz_ansatz_closed(a: Ansatz, x) -> np.ndarray:
    """Sum over bubbles of the closed-form |x|^{-alpha} * U_{z_j,lambda}^{2*}"""
    p = a.params
    _, _, D, _ = bubble_terms(a, x)
    coefficient = riesz_coefficient_for(p, a.coeff)
    return (coefficient * (a.lam / D) ** (p.alpha / 2.0)).sum(axis=-1)


def ansatz_power(a: Ansatz, x) -> np.ndarray:
    """Z^{2*} (or Z*^{2*} without cutoff)"""
    _, _, _, U = bubble_terms(a, x)
    total = U.sum(axis=-1)
    if a.use_cutoff:
        total = cutoff_eval(a.cutoff, x).value * total
    return total ** a.params.two_star_alpha


def power_excess(a: Ansatz, x) -> np.ndarray:
    """Z^{2*} - sum_j U_j^{2*}: the part with no closed-form convolution"""
    _, _, _, U = bubble_terms(a, x)
    return ansatz_power(a, x) - (U ** a.params.two_star_alpha).sum(axis=-1)


def riesz_ansatz(a: Ansatz, x, mode: str, spec: QuadratureSpec) -> IntegralResult:
    """
    |x|^{-alpha} * (ansatz power) at one point

    closed_star sums the closed forms of sum_j U_j^{2*}. numeric_cutoff
    convolves Z^{2*} numerically, using that same sum as a control variate so
    only the excess is integrated by QMC.
    """
    if mode not in RIESZ_MODES:
        raise ConfigError(f"Unknown Riesz mode '{mode}'. Available: {list(RIESZ_MODES)}")
    x = np.asarray(x, dtype=float)
    closed = float(riesz_ansatz_closed(a, x))
    if mode == "closed_star":
        return IntegralResult(closed, 0.0, 0, "closed", True)

    excess = riesz_numeric(lambda y: power_excess(a, y), a.params.alpha, x, spec, scale=1.0 / a.lam)
    logger.debug(f"riesz_ansatz at {x}: closed={closed:.10g} excess={excess.value:.4g}")
    return IntegralResult(closed + excess.value, excess.est_error, excess.nodes_used,
                          excess.scheme, excess.converged)
