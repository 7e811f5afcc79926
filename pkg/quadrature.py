"""
Integration engines
Adaptive radial 1-D, two-center 2-D reduction and randomized quasi-Monte-Carlo N-D
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy import special as sp
from scipy.stats import qmc

from errors import QuadratureFailure, CoincidentCenters
from problem import ProblemParams, QuadratureSpec
from special import sphere_area, ball_volume

logger = logging.getLogger(__name__)

# ================= CONFIG ==================
RADIAL_MAX_PANELS = 2 ** 12
FAILURE_SLACK = 1e4
GAUSS_ORDER = 48          # inner angular rule, compared against 2x order
INNER_MAX_DEPTH = 12      # bisections of an inner angular panel
EVAL_CHUNK = 4096         # rows per task when parallelizing point evaluations


@dataclass(frozen=True)
class IntegralResult:
    value: float
    est_error: float
    nodes_used: int
    scheme: str
    converged: bool = True

    def as_dict(self):
        return {
            "value": self.value,
            "est_error": self.est_error,
            "nodes_used": self.nodes_used,
            "scheme": self.scheme,
            "converged": self.converged,
        }

    def __add__(self, other: "IntegralResult") -> "IntegralResult":
        scheme = self.scheme if self.scheme == other.scheme else f"{self.scheme}+{other.scheme}"
        return IntegralResult(self.value + other.value, self.est_error + other.est_error,
                              self.nodes_used + other.nodes_used, scheme,
                              self.converged and other.converged)

    def scaled(self, factor: float) -> "IntegralResult":
        return IntegralResult(self.value * factor, self.est_error * abs(factor),
                              self.nodes_used, self.scheme, self.converged)


def _finish(value, error, nodes, scheme, spec, label, magnitude=0.0):
    """
    Apply the tolerance policy: warn above tolerance, fail far above it

    magnitude is the integral of |F| when known; the relative tolerance is
    taken against the larger of it and |value|.
    """
    tolerance = max(spec.rel_tol * max(abs(value), magnitude), spec.abs_tol)
    converged = error <= tolerance
    if not converged:
        if error > FAILURE_SLACK * tolerance:
            raise QuadratureFailure(
                f"{label}: error estimate {error:.3g} exceeds tolerance {tolerance:.3g}"
            )
        logger.warning(f"{label}: error estimate {error:.3g} above tolerance {tolerance:.3g}")
    logger.debug(f"{label}: value={value:.12g} err={error:.3g} nodes={nodes}")
    return IntegralResult(float(value), float(error), int(nodes), scheme, converged)


def _quad(func, a, b, spec, **kwargs):
    """scipy quad returning (value, error, evaluations)"""
    out = integrate.quad(func, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=RADIAL_MAX_PANELS, full_output=1, **kwargs)
    value, error, info = out[0], out[1], out[2]
    if len(out) > 3:
        logger.debug(f"quad message on [{a}, {b}]: {out[3]}")
    return value, error, info.get("neval", 0) if isinstance(info, dict) else 0


# ================= RADIAL 1-D =================

def radial_integral(g: Callable, p: ProblemParams, spec: QuadratureSpec,
                    kernel_exponent: float = 0.0, scale: float = 1.0) -> IntegralResult:
    """
    |S^{N-1}| * int_0^inf g(r) r^{N-1-kernel_exponent} dr

    Uses r = scale * tan(theta) on [0, pi/2). A positive kernel_exponent is
    absorbed into an algebraic end-point weight so |x|^{-a} singularities at
    the origin are integrated exactly by the rule.
    """
    N = p.N
    power = N - 1.0 - kernel_exponent
    if power <= -1.0:
        raise QuadratureFailure(f"r^{power} is not integrable at the origin")

    if kernel_exponent:
        def integrand(theta):
            r = scale * math.tan(theta)
            ratio = math.tan(theta) / theta if theta > 0 else 1.0
            return g(r) * ratio ** power * scale ** (power + 1.0) * (1.0 + math.tan(theta) ** 2)

        value, error, nodes = _quad(integrand, 0.0, math.pi / 2.0, spec,
                                    weight="alg", wvar=(power, 0.0))
    else:
        def integrand(theta):
            t = math.tan(theta)
            r = scale * t
            return g(r) * r ** power * scale * (1.0 + t * t)

        value, error, nodes = _quad(integrand, 0.0, math.pi / 2.0, spec)

    area = sphere_area(N)
    return _finish(area * value, area * error, nodes, "radial1d", spec, "radial_integral")


# ================= TWO-CENTER 2-D =================

@lru_cache(maxsize=8)
def _gauss_legendre(order: int):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return nodes, weights


def _panel(f, a, b, order):
    """Gauss-Legendre integrals of f and |f| over [a, b]"""
    x, w = _gauss_legendre(order)
    half = 0.5 * (b - a)
    values = f(a + half * (x + 1.0))
    return half * np.dot(w, values), half * np.dot(w, np.abs(values))


def _adaptive_panel(f, a, b, rel_tol, depth=0):
    """
    Signed integral, absolute mass, error estimate and evaluation count of f on [a, b]

    Bisects until the GAUSS_ORDER and 2 GAUSS_ORDER rules agree to rel_tol of
    the absolute mass, so cancelling integrands are judged against |f|.
    """
    coarse, _ = _panel(f, a, b, GAUSS_ORDER)
    fine, mass = _panel(f, a, b, 2 * GAUSS_ORDER)
    diff = abs(fine - coarse)
    if diff <= rel_tol * mass or depth >= INNER_MAX_DEPTH:
        return fine, mass, diff, 3 * GAUSS_ORDER
    mid = 0.5 * (a + b)
    left = _adaptive_panel(f, a, mid, rel_tol, depth + 1)
    right = _adaptive_panel(f, mid, b, rel_tol, depth + 1)
    return tuple(l + r for l, r in zip(left, right))


def two_center_integral(F: Callable, z1, z2, p: ProblemParams, spec: QuadratureSpec,
                        kernel_exponent: float = 0.0, width: float = 1.0) -> IntegralResult:
    """
    int_{R^N} F(|x-z1|, |x-z2|) |x-z1|^{-kernel_exponent} dx as a 2-D integral

    On the level sets of (s, t) = (|x-z1|, |x-z2|) the measure is
    omega_{N-2} h^{N-3} (s t / d) ds dt, h the distance of x from the axis and
    (s, t) restricted to |s-t| <= d <= s+t. The t-integral is carried in the
    angle theta at z1 (t^2 = s^2 + d^2 - 2 s d cos theta, h = s sin theta),
    which turns the measure into omega_{N-2} s^{N-1} sin^{N-2}(theta) ds dtheta.
    F must accept numpy arrays in t. width is the length scale of the
    integrand's features and places the adaptive breakpoints.

    The s-integral carries int |F| alongside int F; tolerances apply to that
    absolute mass, so integrals that cancel to (near) zero are not failed on
    their relative error.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    d = float(np.linalg.norm(z1 - z2))
    if d == 0.0:
        raise CoincidentCenters("two_center_integral needs distinct centers")

    N = p.N
    omega = sphere_area(N - 1)
    power = N - 1.0 - kernel_exponent
    if power <= -1.0:
        raise QuadratureFailure(f"s^{power} is not integrable at the first center")
    stats = {"evals": 0, "inner_err": 0.0}

    def inner(s):
        def f(theta):
            half = np.sin(0.5 * theta)
            t = np.sqrt((s - d) ** 2 + 4.0 * s * d * half * half)
            return F(s, t) * np.sin(theta) ** (N - 2)

        cut = min(math.pi, 4.0 * (width + abs(s - d)) / max(s, 1e-300))
        edges = sorted({0.0, cut, min(math.pi, 4.0 * cut), math.pi})
        signed = mass = diff = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            v, m, e, n = _adaptive_panel(f, a, b, spec.rel_tol)
            signed += v
            mass += m
            diff += e
            stats["evals"] += n
        if mass > 0.0:
            stats["inner_err"] = max(stats["inner_err"], diff / mass)
        return np.array([signed, mass])

    def outer(a, b, func):
        value, err = integrate.quad_vec(func, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                        norm="max", limit=RADIAL_MAX_PANELS)
        return value, float(err)

    breaks = sorted({0.0, min(2.0 * width, 0.5 * d), 0.5 * d, max(d - 4.0 * width, 0.5 * d),
                     d, d + 4.0 * width, 2.0 * d + 4.0 * width})
    # s = b u^{1/q} absorbs s^{power} on the first panel, q = power + 1
    q = power + 1.0
    first = breaks[1]
    value, error = outer(0.0, 1.0, lambda u: inner(first * u ** (1.0 / q)) * first ** q / q)
    for a, b in zip(breaks[1:-1], breaks[2:]):
        if b <= a:
            continue
        v, e = outer(a, b, lambda s: s ** power * inner(s))
        value = value + v
        error += e
    v, e = outer(breaks[-1], np.inf, lambda s: s ** power * inner(s))
    value = value + v
    error += e

    total, mass = float(value[0]), float(value[1])
    error += stats["inner_err"] * mass
    return _finish(omega * total, omega * error, stats["evals"], "twocenter2d", spec,
                   "two_center_integral", magnitude=omega * mass)


# ================= QUASI-MONTE-CARLO N-D =================

@dataclass(frozen=True)
class QMCPoints:
    """Randomized-shift replicates of sample offsets and their weights"""
    offsets: np.ndarray    # (shifts, n, N)
    weights: np.ndarray    # (shifts, n)


def per_shift_nodes(spec: QuadratureSpec) -> int:
    per = max(spec.nodes // spec.shifts, 16)
    return 2 ** int(math.floor(math.log2(per)))


@lru_cache(maxsize=32)
def sobol_replicates(dim: int, n: int, seed: int, shifts: int):
    children = np.random.SeedSequence(seed).spawn(shifts)
    reps = []
    for child in children:
        engine = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(child))
        reps.append(engine.random_base2(int(math.log2(n))))
    out = np.stack(reps)
    out.setflags(write=False)
    return out


def unit_directions(u):
    g = sp.ndtri(np.clip(u, 1e-15, 1.0 - 1e-15))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


@lru_cache(maxsize=32)
def qmc_points(N: int, spec: QuadratureSpec, scale: float = 1.0,
               singular_exponent: Optional[float] = None) -> QMCPoints:
    """
    Sample offsets around a center

    Without singular_exponent: uniform in the ball of radius scale, each
    weight equal to the ball volume. With it: polar coordinates over all of
    R^N, the radial map rho = scale (u/(1-u))^{1/(N-a)} absorbing
    rho^{N-1-a} so that sum(weights * F) / n estimates int F |y|^{-a} dy.
    """
    n = per_shift_nodes(spec)
    raw = sobol_replicates(N + 1, n, spec.seed, spec.shifts)
    u = np.clip(raw[..., 0], 1e-15, 1.0 - 1e-15)
    direction = unit_directions(raw[..., 1:])

    if singular_exponent is None:
        rho = scale * u ** (1.0 / N)
        weights = np.full(u.shape, ball_volume(N, scale))
    else:
        a = float(singular_exponent)
        q = N - a
        rho = scale * (u / (1.0 - u)) ** (1.0 / q)
        weights = sphere_area(N) * scale ** q / q / (1.0 - u) ** 2

    offsets = rho[..., None] * direction
    offsets.setflags(write=False)
    weights.setflags(write=False)
    return QMCPoints(offsets, weights)


def thread_count(spec: QuadratureSpec) -> int:
    return spec.threads or os.cpu_count() or 1


def evaluate_points(F: Callable, points: np.ndarray, spec: QuadratureSpec) -> np.ndarray:
    """Evaluate F on (n, N) points in fixed chunks; order is schedule independent"""
    chunks = [points[i:i + EVAL_CHUNK] for i in range(0, len(points), EVAL_CHUNK)]
    threads = thread_count(spec)
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(F, chunks))
    else:
        parts = [F(c) for c in chunks]
    return np.concatenate([np.asarray(part, dtype=float).reshape(-1) for part in parts])


def replicate_estimates(F: Callable, center, pts: QMCPoints, spec: QuadratureSpec) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    estimates = []
    for offsets, weights in zip(pts.offsets, pts.weights):
        values = evaluate_points(F, center + offsets, spec)
        estimates.append(np.mean(weights * values))
    return np.asarray(estimates)


def combine_replicates(estimates: np.ndarray, nodes: int, spec: QuadratureSpec,
                       label: str = "qmc_integral") -> IntegralResult:
    """
    Mean and standard error over the randomized replicates

    converged is judged against the same tolerance as the deterministic
    engines. Randomized estimates at the default budgets rarely reach
    rel_tol, so an unconverged result is logged and returned; only a
    non-finite replicate raises QuadratureFailure.
    """
    estimates = np.asarray(estimates, dtype=float)
    if not np.all(np.isfinite(estimates)):
        raise QuadratureFailure(f"{label}: non-finite replicate estimate")
    value = float(np.mean(estimates))
    error = float(np.std(estimates, ddof=1) / math.sqrt(len(estimates)))
    error = max(error, spec.abs_tol)
    tolerance = max(spec.rel_tol * abs(value), spec.abs_tol)
    converged = error <= tolerance
    if not converged:
        logger.debug(f"{label}: standard error {error:.3g} above tolerance {tolerance:.3g}")
    logger.debug(f"{label}: value={value:.12g} err={error:.3g} nodes={nodes}")
    return IntegralResult(value, error, int(nodes), "qmcnd", converged)


def qmc_integral(F: Callable, center, radius: float, spec: QuadratureSpec,
                 singular_exponent: Optional[float] = None) -> IntegralResult:
    """
    Randomized QMC estimate of int F over the ball B(center, radius)

    With singular_exponent = a the estimate is of int_{R^N} F(y) |y-center|^{-a} dy
    and radius sets the length scale of the radial map. est_error is the
    standard error over the scrambled replicates.
    """
    center = np.asarray(center, dtype=float)
    pts = qmc_points(len(center), spec, float(radius), singular_exponent)
    estimates = replicate_estimates(F, center, pts, spec)
    return combine_replicates(estimates, pts.weights.size, spec)
