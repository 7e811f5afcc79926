"""
Gamma function and sharp constants
C(N, alpha), S, S_{H,L}, I(s) and the bubble normalization coefficient
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

from scipy import special as sp

from errors import NonPositiveArgument, SOutOfRange, QuadratureFailure
from problem import ProblemParams, QuadratureSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SharpConstants:
    hls_c: float
    sobolev_s: float
    shl: float
    bubble_coeff: float
    i_half_alpha: float

    def as_dict(self):
        return {
            "hls_c": self.hls_c,
            "sobolev_s": self.sobolev_s,
            "shl": self.shl,
            "bubble_coeff": self.bubble_coeff,
            "i_half_alpha": self.i_half_alpha,
        }


def gamma_fn(x: float) -> float:
    """Gamma(x) for x > 0"""
    if not x > 0:
        raise NonPositiveArgument(f"Gamma is only evaluated for x > 0, got {x}")
    return float(sp.gamma(x))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^{n-1} in R^n"""
    return 2.0 * math.pi ** (n / 2.0) / gamma_fn(n / 2.0)


def ball_volume(n: int, radius: float = 1.0) -> float:
    return math.pi ** (n / 2.0) * radius ** n / gamma_fn(n / 2.0 + 1.0)


def hls_constant(p: ProblemParams) -> float:
    """Sharp Hardy-Littlewood-Sobolev constant C(N, alpha)"""
    N, alpha = p.N, p.alpha
    return (math.pi ** (alpha / 2.0)
            * gamma_fn(N / 2.0 - alpha / 2.0) / gamma_fn(N - alpha / 2.0)
            * (gamma_fn(N / 2.0) / gamma_fn(N)) ** (-1.0 + alpha / N))


def riesz_identity_constant(p: ProblemParams, s: float) -> float:
    """
    I(s) = pi^{N/2} Gamma((N-2s)/2) / Gamma(N-s)

    The constant in |x|^{-2s} * (1+|y|^2)^{-(N-s)} = I(s) (1+|x|^2)^{-s}.
    """
    N = p.N
    if not (0.0 < s < N / 2.0):
        raise SOutOfRange(f"s must satisfy 0 < s < N/2 = {N / 2.0}, got s={s}")
    return math.pi ** (N / 2.0) * gamma_fn((N - 2.0 * s) / 2.0) / gamma_fn(N - s)


def sobolev_constant_closed(p: ProblemParams) -> float:
    """Best Sobolev constant pi N (N-2) (Gamma(N/2)/Gamma(N))^{2/N}"""
    N = p.N
    return math.pi * N * (N - 2.0) * (gamma_fn(N / 2.0) / gamma_fn(N)) ** (2.0 / N)


def rayleigh_quotient(p: ProblemParams, spec: QuadratureSpec, scale: float = 1.0) -> float:
    """
    ||grad W||_2^2 / ||W||_{2*}^2 for W_s(x) = s^{(N-2)/2} W(s x)

    W(x) = (1+|x|^2)^{-(N-2)/2}; scale = 1 gives the extremal itself.
    """
    from quadrature import radial_integral

    N = p.N
    two_star = 2.0 * N / (N - 2.0)
    k = (N - 2.0) / 2.0

    def w(r):
        return scale ** k * (1.0 + (scale * r) ** 2) ** (-k)

    def grad_sq(r):
        dw = -(N - 2.0) * scale ** (k + 2.0) * r * (1.0 + (scale * r) ** 2) ** (-k - 1.0)
        return dw * dw

    grad = radial_integral(grad_sq, p, spec)
    power = radial_integral(lambda r: w(r) ** two_star, p, spec)
    return grad.value / power.value ** (2.0 / two_star)


def sobolev_constant(p: ProblemParams, spec: Optional[QuadratureSpec] = None) -> float:
    """S as the Rayleigh quotient at the extremal, by radial quadrature"""
    spec = spec or QuadratureSpec(scheme="radial1d", rel_tol=1e-11)
    value = rayleigh_quotient(p, spec)
    closed = sobolev_constant_closed(p)
    if abs(value - closed) > 1e-8 * closed:
        raise QuadratureFailure(
            f"Rayleigh quotient {value!r} disagrees with the closed form {closed!r}"
        )
    logger.debug(f"Sobolev constant for N={p.N}: {value:.12g}")
    return value


def bubble_coefficient(p: ProblemParams, s: float, c_hls: float) -> float:
    """
    c(N, alpha) = S^{(N-a)(2-N)/(4(N-a+2))} C^{(2-N)/(2(N-a+2))} [N(N-2)]^{(N-2)/4}
    """
    N, alpha = p.N, p.alpha
    denom = N - alpha + 2.0
    return (s ** ((N - alpha) * (2.0 - N) / (4.0 * denom))
            * c_hls ** ((2.0 - N) / (2.0 * denom))
            * (N * (N - 2.0)) ** ((N - 2.0) / 4.0))


def bubble_coefficient_closed(p: ProblemParams) -> float:
    """c with N(N-2) = I(alpha/2) c^{2(2*-1)}, the exact solution of the bubble equation"""
    T = p.two_star_alpha
    i_half = riesz_identity_constant(p, p.alpha / 2.0)
    return (p.N * (p.N - 2.0) / i_half) ** (1.0 / (2.0 * (T - 1.0)))


def shl_constant(p: ProblemParams, s: float, c_hls: float) -> float:
    """S_{H,L} = S / C(N, alpha)^{1/2*_alpha}"""
    return s / c_hls ** (1.0 / p.two_star_alpha)


def sharp_constants(p: ProblemParams, spec: Optional[QuadratureSpec] = None) -> SharpConstants:
    s = sobolev_constant(p, spec)
    c_hls = hls_constant(p)
    return SharpConstants(
        hls_c=c_hls,
        sobolev_s=s,
        shl=shl_constant(p, s, c_hls),
        bubble_coeff=bubble_coefficient(p, s, c_hls),
        i_half_alpha=riesz_identity_constant(p, p.alpha / 2.0),
    )
