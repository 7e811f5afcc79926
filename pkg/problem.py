"""
Problem parameters and shared configuration types
Every other module receives a ProblemParams built by make_problem
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from errors import AlphaOutOfRange, DimensionTooSmall, ConfigError

logger = logging.getLogger(__name__)

QUADRATURE_SCHEMES = ("radial1d", "twocenter2d", "qmcnd")


@dataclass(frozen=True)
class ProblemParams:
    """Dimension N and Riesz order alpha with the derived exponents"""
    N: int
    alpha: float

    @property
    def two_star_alpha(self) -> float:
        return (2.0 * self.N - self.alpha) / (self.N - 2.0)

    @property
    def tau(self) -> float:
        return (self.N - 4.0) / (self.N - 2.0)

    @property
    def bubble_exponent(self) -> float:
        """(N-2)/2, the power of lambda/(1+lambda^2 d^2) in a bubble"""
        return (self.N - 2.0) / 2.0

    @property
    def scaling_exponent(self) -> float:
        """(N-2)/(N-4): lambda grows like m to this power"""
        return (self.N - 2.0) / (self.N - 4.0)

    def as_dict(self):
        return {
            "N": self.N,
            "alpha": self.alpha,
            "two_star_alpha": self.two_star_alpha,
            "tau": self.tau,
        }


def alpha_lower_bound(N: int) -> float:
    return 5.0 - 6.0 / (N - 2.0)


def make_problem(N: int, alpha: float) -> ProblemParams:
    """
    Validate (N, alpha) and build the problem parameters

    Raises:
        DimensionTooSmall: N < 5 (the construction fails for N = 3, 4)
        AlphaOutOfRange: alpha <= 5 - 6/(N-2) or alpha >= N
    """
    if int(N) != N:
        raise DimensionTooSmall(f"N must be an integer >= 5, got {N}")
    N = int(N)
    if N < 5:
        raise DimensionTooSmall(f"N must satisfy N >= 5, got N={N}")

    alpha = float(alpha)
    lower = alpha_lower_bound(N)
    if not (lower < alpha < N):
        raise AlphaOutOfRange(
            f"alpha must satisfy {lower:.6g} < alpha < {N}, got alpha={alpha}"
        )

    return ProblemParams(N=N, alpha=alpha)


@dataclass(frozen=True)
class AnsatzConfig:
    """
    The m-bubble symmetric configuration

    window is (L0, L1); theta is the proximity exponent of the
    |(r_bar, x_bar'') - (r0, x0'')| <= lambda^-(1-theta) constraint.
    """
    m: int
    r_bar: float
    x_bar_pp: Tuple[float, ...]
    lam: float
    delta: float
    window: Tuple[float, float] = (1e-3, 1e3)
    theta: float = 0.1

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.r_bar <= 0 or self.lam <= 0 or self.delta <= 0:
            raise ConfigError("r_bar, lambda and delta must be positive")
        L0, L1 = self.window
        if not (L1 > L0 > 0):
            raise ConfigError(f"window must satisfy L1 > L0 > 0, got {self.window}")
        if not (0.0 < self.theta < 1.0):
            raise ConfigError(f"theta must lie in (0, 1), got {self.theta}")

    def window_bounds(self, p: ProblemParams) -> Tuple[float, float]:
        scale = self.m ** p.scaling_exponent
        return self.window[0] * scale, self.window[1] * scale

    def in_window(self, p: ProblemParams) -> bool:
        lo, hi = self.window_bounds(p)
        return lo <= self.lam <= hi

    def satisfies_proximity(self, r0: float, x0_pp) -> bool:
        offset = np.hypot(self.r_bar - r0,
                          np.linalg.norm(np.asarray(self.x_bar_pp) - np.asarray(x0_pp)))
        return offset <= self.lam ** (-(1.0 - self.theta))


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration scheme, budgets and tolerances shared by the engines"""
    scheme: str = "qmcnd"
    nodes: int = 2 ** 18
    seed: int = 20240101
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    domain_radius: float = 50.0
    shifts: int = 8
    threads: Optional[int] = None

    def __post_init__(self):
        if self.scheme not in QUADRATURE_SCHEMES:
            raise ConfigError(f"Unknown quadrature scheme '{self.scheme}'. Available: {list(QUADRATURE_SCHEMES)}")
        if self.nodes <= 0:
            raise ConfigError(f"nodes must be positive, got {self.nodes}")
        if self.rel_tol <= 0:
            raise ConfigError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.domain_radius <= 0:
            raise ConfigError(f"domain_radius must be positive, got {self.domain_radius}")
        if self.shifts < 2:
            raise ConfigError(f"at least two randomized shifts are needed, got {self.shifts}")

    def with_nodes(self, nodes: int) -> "QuadratureSpec":
        return replace(self, nodes=int(nodes))

    def with_scheme(self, scheme: str) -> "QuadratureSpec":
        return replace(self, scheme=scheme)
