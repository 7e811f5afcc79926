"""
Bubble placement and tube geometry
Polygonal centers, chord sums, angular sectors and the smooth cutoff xi
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import MTooSmall, ConfigError

logger = logging.getLogger(__name__)

CUTOFF_PROFILES = ("smoothstep_quintic",)


# ================= PLACEMENT =================

@dataclass(frozen=True)
class Placement:
    """Centers z_j = (r cos(2(j-1)pi/m), r sin(2(j-1)pi/m), x'') for j = 1..m"""
    centers: np.ndarray
    r_bar: float
    x_bar_pp: Tuple[float, ...]

    @property
    def m(self) -> int:
        return len(self.centers)

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def angles(self) -> np.ndarray:
        return 2.0 * math.pi * np.arange(self.m) / self.m

    def d_centers_d_rbar(self) -> np.ndarray:
        """dz_j / dr_bar: the unit vectors (cos, sin, 0, ..., 0)"""
        out = np.zeros_like(self.centers)
        out[:, 0] = np.cos(self.angles())
        out[:, 1] = np.sin(self.angles())
        return out

    def distances_from_first(self) -> np.ndarray:
        return np.linalg.norm(self.centers[1:] - self.centers[0], axis=1)


def place_bubbles(m: int, r_bar: float, x_bar_pp) -> Placement:
    if m < 1:
        raise MTooSmall(f"at least one bubble is needed, got m={m}")
    if r_bar <= 0:
        raise ConfigError(f"r_bar must be positive, got {r_bar}")
    x_bar_pp = tuple(float(v) for v in np.atleast_1d(np.asarray(x_bar_pp, dtype=float)))
    angles = 2.0 * math.pi * np.arange(m) / m
    centers = np.empty((m, 2 + len(x_bar_pp)))
    centers[:, 0] = r_bar * np.cos(angles)
    centers[:, 1] = r_bar * np.sin(angles)
    centers[:, 2:] = x_bar_pp
    centers.setflags(write=False)
    return Placement(centers=centers, r_bar=float(r_bar), x_bar_pp=x_bar_pp)


def interaction_sum(m: int, r_bar: float, exponent: float) -> float:
    """B = sum_{j=2}^m |z_1 - z_j|^{-exponent} through the chord lengths 2 r sin((j-1)pi/m)"""
    if m < 2:
        raise MTooSmall(f"an interaction needs m >= 2 bubbles, got m={m}")
    j = np.arange(1, m)
    chords = np.sin(j * math.pi / m)
    return float((2.0 * r_bar) ** (-exponent) * np.sum(chords ** (-exponent)))


def rotate_plane(x, angle: float) -> np.ndarray:
    """Rotate points by angle in the (x1, x2)-plane"""
    x = np.array(x, dtype=float)
    c, s = math.cos(angle), math.sin(angle)
    x1, x2 = x[..., 0].copy(), x[..., 1].copy()
    x[..., 0] = c * x1 - s * x2
    x[..., 1] = s * x1 + c * x2
    return x


def reflect_x2(x) -> np.ndarray:
    x = np.array(x, dtype=float)
    x[..., 1] = -x[..., 1]
    return x


def sector_index(x, placement: Placement):
    """
    Index j (1-based) of the sector Omega_j containing x

    Omega_j collects points whose angle in the (x1, x2)-plane is within
    pi/m of z_j. Ties go to the smaller j and points on the axis x' = 0
    belong to Omega_1. Accepts a single point or an (n, N) array.
    """
    x = np.asarray(x, dtype=float)
    m = placement.m
    phi = np.mod(np.arctan2(x[..., 1], x[..., 0]), 2.0 * math.pi)
    k = phi * m / (2.0 * math.pi)
    lo = np.floor(k)
    frac = k - lo
    tie = np.isclose(frac, 0.5, rtol=0.0, atol=1e-12)
    idx = np.where(frac > 0.5, lo + 1, lo)
    idx = np.where(tie, np.where(lo + 1 >= m, 0, lo), idx)
    idx = np.mod(idx, m).astype(int)
    on_axis = np.hypot(x[..., 0], x[..., 1]) == 0.0
    idx = np.where(on_axis, 0, idx) + 1
    return int(idx) if idx.ndim == 0 else idx


# ================= TUBE COORDINATES =================

@dataclass(frozen=True)
class TubePoint:
    """(r, x'') coordinates of points relative to the concentration set (r0, x0'')"""
    r: np.ndarray        # |x'|
    q: np.ndarray        # (r - r0, x'' - x0''), shape (..., N-1)
    s: np.ndarray        # |q|


def tube_coordinates(x, r0: float, x0_pp) -> TubePoint:
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    q = np.concatenate([(r - r0)[..., None], x[..., 2:] - np.asarray(x0_pp, dtype=float)], axis=-1)
    return TubePoint(r=r, q=q, s=np.linalg.norm(q, axis=-1))


def lift_gradient(x, r, grad_q) -> np.ndarray:
    """Map a gradient in (r, x'') to R^N for an axisymmetric function"""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape)
    safe = np.where(r > 0, r, 1.0)
    out[..., 0] = grad_q[..., 0] * np.where(r > 0, x[..., 0] / safe, 0.0)
    out[..., 1] = grad_q[..., 0] * np.where(r > 0, x[..., 1] / safe, 0.0)
    out[..., 2:] = grad_q[..., 1:]
    return out


# ================= CUTOFF =================

@dataclass(frozen=True)
class CutoffSpec:
    """xi = 1 within delta of (r0, x0''), 0 beyond 2 delta"""
    r0: float
    x0_pp: Tuple[float, ...]
    delta: float
    profile: str = "smoothstep_quintic"

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError(f"cutoff delta must be positive, got {self.delta}")
        if self.profile not in CUTOFF_PROFILES:
            raise ConfigError(f"Unknown cutoff profile '{self.profile}'. Available: {list(CUTOFF_PROFILES)}")


@dataclass(frozen=True)
class CutoffValue:
    value: np.ndarray
    d1: np.ndarray          # d xi / ds
    d2: np.ndarray          # d^2 xi / ds^2
    grad: np.ndarray
    laplacian: np.ndarray


def smoothstep_quintic(t):
    """6t^5 - 15t^4 + 10t^3 on [0, 1] and its first two derivatives"""
    t = np.clip(t, 0.0, 1.0)
    value = t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)
    d1 = 30.0 * t * t * (t - 1.0) ** 2
    d2 = 60.0 * t * (t - 1.0) * (2.0 * t - 1.0)
    return value, d1, d2


def cutoff_profile(spec: CutoffSpec, s):
    """xi, xi', xi'' as functions of the tube distance s"""
    delta = spec.delta
    S, S1, S2 = smoothstep_quintic((np.asarray(s, dtype=float) - delta) / delta)
    return 1.0 - S, -S1 / delta, -S2 / delta ** 2


def cutoff_eval(spec: CutoffSpec, x) -> CutoffValue:
    """
    Value, s-derivatives, gradient and Laplacian of xi at x

    Uses |grad s| = 1 and Delta s = (N-2)/s + (r - r0)/(r s).
    """
    x = np.asarray(x, dtype=float)
    N = x.shape[-1]
    tp = tube_coordinates(x, spec.r0, spec.x0_pp)
    value, d1, d2 = cutoff_profile(spec, tp.s)

    # xi' vanishes for s <= delta, so the guards below only avoid 0/0
    s_safe = np.where(tp.s > 0, tp.s, 1.0)
    r_safe = np.where(tp.r > 0, tp.r, 1.0)
    unit_q = tp.q / s_safe[..., None]
    grad = lift_gradient(x, tp.r, d1[..., None] * unit_q)
    lap_s = (N - 2.0) / s_safe + tp.q[..., 0] / (r_safe * s_safe)
    laplacian = d2 + d1 * lap_s
    return CutoffValue(value=value, d1=d1, d2=d2, grad=grad, laplacian=laplacian)
