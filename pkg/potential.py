"""
Potentials K(r, x'')
Quadratic cap with C2 plateau, the constant potential and a wrapper for user callables
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Any, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from errors import CurvatureTooLarge, DegenerateHessian, ConfigError
from geometry import CutoffSpec, tube_coordinates, lift_gradient

logger = logging.getLogger(__name__)

# Transition profile on u = (s - rho_t)/rho_t in [0, 1]: joins s^2 (value, slope
# and curvature) at u = 0 to the flat level rho_t^2 at u = 1.
TRANSITION = Polynomial([1.0, 2.0, 1.0, -15.0, 19.0, -7.0])


def _transition_peak() -> float:
    crit = [c.real for c in TRANSITION.deriv().roots() if abs(c.imag) < 1e-12 and 0.0 <= c.real <= 1.0]
    return float(max([TRANSITION(0.0), TRANSITION(1.0)] + [TRANSITION(c) for c in crit]))


TRANSITION_PEAK = _transition_peak()
POSITIVITY_RADIUS = 10.0   # in units of the cutoff delta


@dataclass(frozen=True)
class PotentialEval:
    value: np.ndarray
    grad_r: np.ndarray
    grad_xpp: np.ndarray
    partial_laplacian: np.ndarray


class PotentialModel:
    """
    Axisymmetric K depending on x only through (r, x'') = (|x'|, x'')

    Subclasses implement tube_derivatives(q, s) returning the value, the
    (r, x'') gradient and the (N-1)-dimensional Laplacian in those variables.
    """
    kind = "abstract"
    is_constant = False

    def __init__(self, r0: float, x0_pp):
        self.r0 = float(r0)
        self.x0_pp = tuple(float(v) for v in np.atleast_1d(np.asarray(x0_pp, dtype=float)))

    @property
    def dim(self) -> int:
        return 2 + len(self.x0_pp)

    @property
    def critical_point(self) -> Tuple[float, Tuple[float, ...]]:
        return self.r0, self.x0_pp

    def tube_derivatives(self, q: np.ndarray, s: np.ndarray):
        raise NotImplementedError

    def hessian_tube(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # ---- evaluation in R^N ----

    def evaluate(self, x) -> PotentialEval:
        tp = tube_coordinates(x, self.r0, self.x0_pp)
        value, grad_q, lap = self.tube_derivatives(tp.q, tp.s)
        return PotentialEval(value=value, grad_r=grad_q[..., 0], grad_xpp=grad_q[..., 1:],
                             partial_laplacian=lap)

    def value(self, x) -> np.ndarray:
        tp = tube_coordinates(x, self.r0, self.x0_pp)
        return self.tube_derivatives(tp.q, tp.s)[0]

    def gradient(self, x) -> np.ndarray:
        tp = tube_coordinates(x, self.r0, self.x0_pp)
        grad_q = self.tube_derivatives(tp.q, tp.s)[1]
        return lift_gradient(x, tp.r, grad_q)

    def laplacian(self, x) -> np.ndarray:
        """Full Laplacian in R^N: K_rr + K_r / r + Delta_x'' K"""
        tp = tube_coordinates(x, self.r0, self.x0_pp)
        _, grad_q, lap = self.tube_derivatives(tp.q, tp.s)
        return lap + grad_q[..., 0] / np.where(tp.r > 0, tp.r, np.inf)

    # ---- reduced variables (r, x'') ----

    def _q_at(self, r, x_pp) -> np.ndarray:
        return np.concatenate([[float(r) - self.r0], np.asarray(x_pp, dtype=float) - np.asarray(self.x0_pp)])

    def grad_reduced(self, r, x_pp) -> np.ndarray:
        q = self._q_at(r, x_pp)
        return self.tube_derivatives(q[None, :], np.array([np.linalg.norm(q)]))[1][0]

    def hessian_reduced(self, r, x_pp) -> np.ndarray:
        return self.hessian_tube(self._q_at(r, x_pp))

    def laplacian_at_critical(self) -> float:
        q = np.zeros((1, self.dim - 1))
        return float(self.tube_derivatives(q, np.zeros(1))[2][0])

    def min_on_ball(self, radius: float, samples: int = 4096, seed: int = 0) -> float:
        """Smallest K over a deterministic sample of the (r, x'') ball of given radius"""
        n = self.dim - 1
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((samples, n))
        rho = radius * rng.random(samples) ** (1.0 / n)
        edge = np.zeros(n)
        edge[0] = radius
        q = np.vstack([np.zeros(n), edge, g / np.linalg.norm(g, axis=1, keepdims=True) * rho[:, None]])
        value = self.tube_derivatives(q, np.linalg.norm(q, axis=1))[0]
        return float(np.min(value))

    def as_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "r0": self.r0, "x0_pp": list(self.x0_pp)}


# ================= QUADRATIC MODEL =================

class QuadraticPotential(PotentialModel):
    """K = 1 - a g(s): g = s^2 up to rho_t, C2 transition, constant rho_t^2 beyond 2 rho_t"""
    kind = "quadratic"

    def __init__(self, r0: float, x0_pp, a: float, rho_t: float):
        super().__init__(r0, x0_pp)
        self.a = float(a)
        self.rho_t = float(rho_t)

    @property
    def floor(self) -> float:
        return 1.0 - self.a * self.rho_t ** 2

    def profile(self, s):
        """g, g' and g'' as functions of the tube distance s"""
        s = np.asarray(s, dtype=float)
        rt = self.rho_t
        u = np.clip((s - rt) / rt, 0.0, 1.0)
        p, p1, p2 = TRANSITION(u), TRANSITION.deriv(1)(u), TRANSITION.deriv(2)(u)

        inner = s <= rt
        outer = s >= 2.0 * rt
        g = np.where(inner, s * s, np.where(outer, rt * rt, rt * rt * p))
        g1 = np.where(inner, 2.0 * s, np.where(outer, 0.0, rt * p1))
        g2 = np.where(inner, 2.0, np.where(outer, 0.0, p2))
        return g, g1, g2

    def tube_derivatives(self, q, s):
        q = np.asarray(q, dtype=float)
        s = np.asarray(s, dtype=float)
        n = q.shape[-1]
        g, g1, g2 = self.profile(s)
        # g'/s is 2 on the inner branch, including s = 0
        g1_over_s = np.where(s <= self.rho_t, 2.0, g1 / np.where(s > 0, s, 1.0))
        value = 1.0 - self.a * g
        grad_q = -self.a * g1_over_s[..., None] * q
        lap = -self.a * (g2 + (n - 1.0) * g1_over_s)
        return value, grad_q, lap

    def hessian_tube(self, q):
        q = np.asarray(q, dtype=float)
        n = q.shape[-1]
        s = float(np.linalg.norm(q))
        g, g1, g2 = (float(v) for v in self.profile(s))
        if s <= self.rho_t:
            return -2.0 * self.a * np.eye(n)
        qh = q / s
        proj = np.outer(qh, qh)
        return -self.a * (g2 * proj + (g1 / s) * (np.eye(n) - proj))

    def as_dict(self):
        out = super().as_dict()
        out.update({"a": self.a, "rho_t": self.rho_t, "floor": self.floor})
        return out


def make_quadratic_model(r0: float, x0_pp, a: float, rho_t: float) -> QuadraticPotential:
    """
    Build the quadratic cap model

    Raises:
        CurvatureTooLarge: a * rho_t^2 times the transition peak reaches 1, so K
        would touch zero inside the transition
    """
    if a <= 0 or rho_t <= 0:
        raise ConfigError(f"curvature a and rho_t must be positive, got a={a}, rho_t={rho_t}")
    if a * rho_t ** 2 * TRANSITION_PEAK >= 1.0:
        raise CurvatureTooLarge(
            f"a * rho_t^2 = {a * rho_t ** 2:.6g} must stay below {1.0 / TRANSITION_PEAK:.6g}"
        )
    model = QuadraticPotential(r0, x0_pp, a, rho_t)
    logger.debug(f"Quadratic potential: a={a}, rho_t={rho_t}, floor={model.floor:.6g}")
    return model


# ================= CONSTANT AND CALLABLE MODELS =================

class ConstantPotential(PotentialModel):
    """K = 1 everywhere"""
    kind = "constant"
    is_constant = True

    def tube_derivatives(self, q, s):
        q = np.asarray(q, dtype=float)
        s = np.asarray(s, dtype=float)
        return np.ones_like(s), np.zeros_like(q), np.zeros_like(s)

    def hessian_tube(self, q):
        n = np.asarray(q).shape[-1]
        return np.zeros((n, n))


class CallablePotential(PotentialModel):
    """
    K supplied as func(r, x_pp) with finite-difference derivatives

    func must accept arrays r of shape (n,) and x_pp of shape (n, N-2).
    """
    kind = "callable"

    def __init__(self, func: Callable, r0: float, x0_pp, step: float = 1e-4):
        super().__init__(r0, x0_pp)
        self.func = func
        self.step = float(step)

    def _k(self, q):
        q = np.atleast_2d(q)
        return np.asarray(self.func(self.r0 + q[:, 0], np.asarray(self.x0_pp) + q[:, 1:]), dtype=float)

    def tube_derivatives(self, q, s):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1]
        flat = q.reshape(-1, q.shape[-1])
        n, h = flat.shape[1], self.step
        value = self._k(flat)
        grad = np.empty_like(flat)
        lap = np.zeros(len(flat))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            plus, minus = self._k(flat + e), self._k(flat - e)
            grad[:, i] = (plus - minus) / (2.0 * h)
            lap += (plus - 2.0 * value + minus) / (h * h)
        return value.reshape(shape), grad.reshape(q.shape), lap.reshape(shape)

    def hessian_tube(self, q):
        q = np.asarray(q, dtype=float)
        n, h = len(q), self.step
        hess = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h
                ej[j] = h
                corners = self._k(np.array([q + ei + ej, q + ei - ej, q - ei + ej, q - ei - ej]))
                hess[i, j] = (corners[0] - corners[1] - corners[2] + corners[3]) / (4.0 * h * h)
        return 0.5 * (hess + hess.T)

    def check_assumptions(self, delta: float, tol: float = 1e-6) -> Dict[str, Any]:
        """Check the critical-point, normalization, curvature, degree and positivity assumptions"""
        n = self.dim - 1
        zero = np.zeros(n)
        value = float(self._k(zero)[0])
        grad = self.grad_reduced(self.r0, self.x0_pp)
        lap = self.laplacian_at_critical()
        try:
            sign = degree_sign(self)
        except DegenerateHessian:
            sign = 0
        positivity = self.min_on_ball(POSITIVITY_RADIUS * delta)
        checks = {
            "normalized": abs(value - 1.0) <= tol,
            "critical_point": float(np.linalg.norm(grad)) <= max(tol, 10.0 * self.step ** 2),
            "negative_laplacian": lap < 0.0,
            "degree_nonzero": sign != 0,
            "positive_on_ball": positivity > 0.0,
        }
        logger.info(f"Potential assumption checks: {checks}")
        return {"holds": all(checks.values()), "checks": checks, "value": value,
                "laplacian": lap, "degree_sign": sign, "min_on_ball": positivity}


# ================= CHECKS =================

def degree_sign(model: PotentialModel) -> int:
    """Sign of det of the (r, x'') Hessian of K at (r0, x0'')"""
    hess = model.hessian_reduced(model.r0, model.x0_pp)
    sign, logdet = np.linalg.slogdet(hess)
    if sign == 0 or not np.isfinite(logdet):
        raise DegenerateHessian(f"Hessian of K at the critical point is singular:\n{hess}")
    return int(sign)


def potential_eval(model: PotentialModel, x) -> PotentialEval:
    return model.evaluate(x)


def validate_against_cutoff(model: PotentialModel, cutoff: CutoffSpec) -> float:
    """K must stay positive on the 10 delta ball around the critical point"""
    lowest = model.min_on_ball(POSITIVITY_RADIUS * cutoff.delta)
    if lowest <= 0.0:
        raise CurvatureTooLarge(
            f"K reaches {lowest:.6g} within {POSITIVITY_RADIUS} delta of (r0, x0'')"
        )
    return lowest
