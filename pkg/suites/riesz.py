"""
Riesz potential checks
The Riesz identity and the closed form of |x|^{-alpha} * U^{2*} against adaptive quadrature
"""

import logging

import numpy as np

from bubbles import Bubble
from riesz import riesz_bubble_closed, riesz_identity_closed, riesz_radial_source
from suites_manager import check_row

logger = logging.getLogger(__name__)


def run(context):
    """
    Compare numeric convolutions with their closed forms

    Rows identity_* check I(s)(1+|x|^2)^{-s}; rows bubble_* check the bubble
    closed form with the bubble coefficient. The reading with the HLS
    constant in place of the bubble coefficient is logged, not checked.
    """
    rows = []
    rows.extend(identity_rows(context))
    rows.extend(bubble_rows(context))
    return rows


def identity_rows(context):
    p = context.problem
    v = context.verify
    s = float(v["identity_s"])
    rows = []
    for t in v["identity_points"]:
        x = np.zeros(p.N)
        x[0] = float(t)

        def profile(r):
            return (1.0 + np.asarray(r) ** 2) ** (-(p.N - s))

        numeric = riesz_radial_source(p, profile, np.zeros(p.N), x, context.spec,
                                      kernel_exponent=2.0 * s)
        closed = float(riesz_identity_closed(p, s, x))
        rows.append(check_row(f"identity_s{s:g}_x{float(t):g}", closed, numeric.value, v["tol"]))
    return rows


def bubble_rows(context):
    p = context.problem
    consts = context.constants
    v = context.verify
    T = p.two_star_alpha
    c = consts.bubble_coeff
    k = p.bubble_exponent
    b = Bubble(center=np.zeros(p.N), lam=1.0)

    def profile(r):
        return (c * (1.0 + np.asarray(r) ** 2) ** (-k)) ** T

    rows = []
    for radius in v["radii"]:
        x = np.zeros(p.N)
        x[0] = float(radius)
        numeric = riesz_radial_source(p, profile, b.center, x, context.spec)
        closed = float(riesz_bubble_closed(p, consts, b, x))
        hls_reading = float(riesz_bubble_closed(p, consts, b, x, constant="hls"))
        rows.append(check_row(f"bubble_r{float(radius):g}", closed, numeric.value, v["tol"]))
        logger.info(f"r={radius}: numeric={numeric.value:.10g} closed={closed:.10g} "
                    f"HLS-constant reading={hls_reading:.10g} (ratio {hls_reading / numeric.value:.6g})")
    return rows
