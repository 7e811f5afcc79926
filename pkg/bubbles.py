"""
Bubble profiles and the m-bubble ansatz
U_{z,lambda}(x) = c (lambda / (1 + lambda^2 |x-z|^2))^{(N-2)/2}, its derivatives,
the cut and uncut ansatz, and the field interface used by the residual evaluators
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from errors import ConfigError
from geometry import CutoffSpec, Placement, cutoff_eval, place_bubbles
from problem import AnsatzConfig, ProblemParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Bubble:
    center: np.ndarray
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"bubble scale must be positive, got {self.lam}")


@dataclass(frozen=True)
class BubblePartials:
    d_lambda: np.ndarray
    d_center: np.ndarray


# ================= SINGLE BUBBLE =================

def _offsets(b: Bubble, x):
    diff = np.asarray(x, dtype=float) - np.asarray(b.center, dtype=float)
    return diff, np.einsum("...i,...i->...", diff, diff)


def bubble_eval(p: ProblemParams, c: float, b: Bubble, x) -> np.ndarray:
    _, d2 = _offsets(b, x)
    return c * (b.lam / (1.0 + b.lam ** 2 * d2)) ** p.bubble_exponent


def bubble_partials(p: ProblemParams, c: float, b: Bubble, x) -> BubblePartials:
    """dU/dlambda and dU/dz in closed form"""
    k = p.bubble_exponent
    lam = b.lam
    diff, d2 = _offsets(b, x)
    D = 1.0 + lam ** 2 * d2
    U = c * (lam / D) ** k
    d_lambda = k * U * (1.0 - lam ** 2 * d2) / (lam * D)
    d_center = (2.0 * k * lam ** 2 * U / D)[..., None] * diff
    return BubblePartials(d_lambda=d_lambda, d_center=d_center)


def bubble_gradient(p: ProblemParams, c: float, b: Bubble, x) -> np.ndarray:
    return -bubble_partials(p, c, b, x).d_center


def bubble_laplacian(p: ProblemParams, c: float, b: Bubble, x) -> np.ndarray:
    """Delta U = -N(N-2) lambda^2 U / (1 + lambda^2 |x-z|^2)^2"""
    _, d2 = _offsets(b, x)
    D = 1.0 + b.lam ** 2 * d2
    U = c * (b.lam / D) ** p.bubble_exponent
    return -p.N * (p.N - 2.0) * b.lam ** 2 * U / D ** 2


# ================= ANSATZ =================

@dataclass(frozen=True)
class Ansatz:
    """Z = xi * sum_j U_{z_j,lambda} (use_cutoff) or Z* = sum_j U_{z_j,lambda}"""
    params: ProblemParams
    placement: Placement
    lam: float
    cutoff: CutoffSpec
    use_cutoff: bool
    coeff: float

    @property
    def m(self) -> int:
        return self.placement.m

    def bubbles(self):
        return [Bubble(center=z, lam=self.lam) for z in self.placement.centers]

    def with_lambda(self, lam: float) -> "Ansatz":
        return Ansatz(self.params, self.placement, float(lam), self.cutoff, self.use_cutoff, self.coeff)

    def without_cutoff(self) -> "Ansatz":
        return Ansatz(self.params, self.placement, self.lam, self.cutoff, False, self.coeff)


def make_ansatz(p: ProblemParams, coeff: float, config: AnsatzConfig, r0: float, x0_pp,
                use_cutoff: bool = True) -> Ansatz:
    placement = place_bubbles(config.m, config.r_bar, config.x_bar_pp)
    if placement.dim != p.N:
        raise ConfigError(f"x_bar_pp must have N-2 = {p.N - 2} components, got {placement.dim - 2}")
    cutoff = CutoffSpec(r0=float(r0), x0_pp=tuple(np.atleast_1d(x0_pp).astype(float)), delta=config.delta)
    return Ansatz(p, placement, float(config.lam), cutoff, use_cutoff, float(coeff))


def bubble_terms(a: Ansatz, x):
    """Per-bubble D, U and x - z_j, with the bubble axis second to last"""
    x = np.asarray(x, dtype=float)
    diff = x[..., None, :] - a.placement.centers
    d2 = np.einsum("...ji,...ji->...j", diff, diff)
    D = 1.0 + a.lam ** 2 * d2
    U = a.coeff * (a.lam / D) ** a.params.bubble_exponent
    return diff, d2, D, U


def bubble_sum(a: Ansatz, x) -> np.ndarray:
    """Sum of the m bubbles, no cutoff"""
    return bubble_terms(a, x)[3].sum(axis=-1)


def ansatz_eval(a: Ansatz, x) -> np.ndarray:
    total = bubble_sum(a, x)
    if a.use_cutoff:
        total = cutoff_eval(a.cutoff, x).value * total
    return total


def ansatz_grad(a: Ansatz, x) -> np.ndarray:
    k = a.params.bubble_exponent
    diff, _, D, U = bubble_terms(a, x)
    grad = -np.einsum("...j,...ji->...i", 2.0 * k * a.lam ** 2 * U / D, diff)
    if not a.use_cutoff:
        return grad
    xi = cutoff_eval(a.cutoff, x)
    return xi.value[..., None] * grad + xi.grad * U.sum(axis=-1)[..., None]


def ansatz_laplacian(a: Ansatz, x) -> np.ndarray:
    N = a.params.N
    diff, _, D, U = bubble_terms(a, x)
    lap = (-N * (N - 2.0) * a.lam ** 2 * U / D ** 2).sum(axis=-1)
    if not a.use_cutoff:
        return lap
    k = a.params.bubble_exponent
    grad = -np.einsum("...j,...ji->...i", 2.0 * k * a.lam ** 2 * U / D, diff)
    xi = cutoff_eval(a.cutoff, x)
    return (xi.value * lap + 2.0 * np.einsum("...i,...i->...", xi.grad, grad)
            + xi.laplacian * U.sum(axis=-1))


def ansatz_partials(a: Ansatz, x) -> Dict[str, np.ndarray]:
    """
    Derivatives in the reduced variables lambda, r_bar and x_bar''

    r_bar and x_bar'' move all m centers together through the placement formula.
    """
    k = a.params.bubble_exponent
    lam = a.lam
    diff, d2, D, U = bubble_terms(a, x)
    d_lambda = (k * U * (1.0 - lam ** 2 * d2) / (lam * D)).sum(axis=-1)
    d_center = (2.0 * k * lam ** 2 * U / D)[..., None] * diff
    d_rbar = np.einsum("...ji,ji->...", d_center, a.placement.d_centers_d_rbar())
    d_xpp = d_center[..., 2:].sum(axis=-2)
    if a.use_cutoff:
        xi = cutoff_eval(a.cutoff, x).value
        d_lambda, d_rbar, d_xpp = xi * d_lambda, xi * d_rbar, xi[..., None] * d_xpp
    return {"d_lambda": d_lambda, "d_rbar": d_rbar, "d_xpp": d_xpp}


def ansatz_upper_bound(a: Ansatz, x) -> np.ndarray:
    """c 2^{(N-2)/2} sum_j lambda^{(N-2)/2} (1 + lambda |x - z_j|)^{-(N-2)}"""
    k = a.params.bubble_exponent
    _, d2, _, _ = bubble_terms(a, x)
    const = a.coeff * 2.0 ** k
    return const * (a.lam ** k * (1.0 + a.lam * np.sqrt(d2)) ** (-2.0 * k)).sum(axis=-1)


# ================= FIELDS =================

class Field:
    """A function on R^N with value, gradient and Laplacian"""

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        raise NotImplementedError

    def laplacian(self, x) -> np.ndarray:
        raise NotImplementedError

    def scaled(self, factor: float) -> "Field":
        return ScaledField(self, factor)


class AnsatzField(Field):
    """Closed-form derivatives of an ansatz"""

    def __init__(self, ansatz: Ansatz):
        self.ansatz = ansatz

    def value(self, x):
        return ansatz_eval(self.ansatz, x)

    def gradient(self, x):
        return ansatz_grad(self.ansatz, x)

    def laplacian(self, x):
        return ansatz_laplacian(self.ansatz, x)


class ScaledField(Field):
    def __init__(self, base: Field, factor: float):
        self.base = base
        self.factor = float(factor)

    def value(self, x):
        return self.factor * self.base.value(x)

    def gradient(self, x):
        return self.factor * self.base.gradient(x)

    def laplacian(self, x):
        return self.factor * self.base.laplacian(x)


class PerturbedField(Field):
    """base + eps * exp(-|x - c|^2 / w^2)"""

    def __init__(self, base: Field, eps: float, center, width: float):
        self.base = base
        self.eps = float(eps)
        self.center = np.asarray(center, dtype=float)
        self.width = float(width)

    def _bump(self, x):
        diff = np.asarray(x, dtype=float) - self.center
        d2 = np.einsum("...i,...i->...", diff, diff)
        return diff, d2, self.eps * np.exp(-d2 / self.width ** 2)

    def value(self, x):
        return self.base.value(x) + self._bump(x)[2]

    def gradient(self, x):
        diff, _, psi = self._bump(x)
        return self.base.gradient(x) - (2.0 * psi / self.width ** 2)[..., None] * diff

    def laplacian(self, x):
        _, d2, psi = self._bump(x)
        N = self.center.shape[-1]
        w2 = self.width ** 2
        return self.base.laplacian(x) + (4.0 * d2 / w2 ** 2 - 2.0 * N / w2) * psi


class FDField(Field):
    """
    Arbitrary vectorized function with finite-difference derivatives

    Central differences for the gradient, the (2N+1)-point star for the Laplacian.
    """

    def __init__(self, func: Callable, step: float):
        self.func = func
        self.step = float(step)

    def value(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    def _shifts(self, x):
        x = np.asarray(x, dtype=float)
        N = x.shape[-1]
        for i in range(N):
            e = np.zeros(N)
            e[i] = self.step
            yield i, self.func(x + e), self.func(x - e)

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        grad = np.empty(x.shape)
        for i, plus, minus in self._shifts(x):
            grad[..., i] = (plus - minus) / (2.0 * self.step)
        return grad

    def laplacian(self, x):
        center = self.value(x)
        lap = np.zeros_like(center)
        for _, plus, minus in self._shifts(x):
            lap = lap + (plus - 2.0 * center + minus)
        return lap / self.step ** 2


def field_from_ansatz(a: Ansatz, mode: str = "analytic", step: Optional[float] = None) -> Field:
    if mode == "analytic":
        return AnsatzField(a)
    if mode == "fd":
        return FDField(lambda x: ansatz_eval(a, x), step or 1e-4 * a.cutoff.delta)
    raise ConfigError(f"Unknown field mode '{mode}'")
