"""
Sharp constant checks
The bubble attains S_{H,L}; the Rayleigh quotient reproduces the closed-form S
"""

import numpy as np

from energy import hls_quotient
from problem import QuadratureSpec
from quadrature import radial_integral
from special import rayleigh_quotient, sobolev_constant_closed
from suites_manager import check_row

RADIAL_SPEC = QuadratureSpec(scheme="radial1d", rel_tol=1e-11)


def run(context):
    p = context.problem
    consts = context.constants
    tol = context.verify["tol"]
    rows = []

    quotient = hls_quotient(p, consts, RADIAL_SPEC)
    rows.append(check_row("shl_attained_by_bubble", consts.shl, quotient.value, tol))

    closed = sobolev_constant_closed(p)
    rows.append(check_row("sobolev_rayleigh_vs_closed", closed, consts.sobolev_s, 1e-8))

    # dilations of the extremal stay extremal
    for scale in (0.5, 2.0):
        value = rayleigh_quotient(p, RADIAL_SPEC, scale=scale)
        rows.append(check_row(f"sobolev_dilation_{scale:g}", closed, value, tol))

    # a non-extremal profile is strictly above S
    wide = rayleigh_quotient_gaussian(p)
    rows.append({"check_id": "sobolev_gaussian_above", "expected": float(closed), "actual": float(wide),
                 "tol": 0.0, "pass": bool(wide > closed)})
    return rows


def rayleigh_quotient_gaussian(p):
    """Rayleigh quotient of exp(-|x|^2), which is not an extremal"""
    N = p.N
    two_star = 2.0 * N / (N - 2.0)
    grad = radial_integral(lambda r: 4.0 * r * r * np.exp(-2.0 * r * r), p, RADIAL_SPEC)
    power = radial_integral(lambda r: np.exp(-two_star * r * r), p, RADIAL_SPEC)
    return grad.value / power.value ** (2.0 / two_star)
