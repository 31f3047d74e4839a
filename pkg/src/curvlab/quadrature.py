"""Product Gauss rules on balls and tubes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

DEFAULT_DEGREE = 20


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Nodes and positive weights on a ball ``|x| <= radius`` or a tube around the x1-axis.

    Weights sum to the Euclidean volume of the domain. ``length`` is ``None`` for balls.
    """

    dim: int
    radius: float
    nodes: np.ndarray
    weights: np.ndarray
    degree: int
    length: float | None = None

    @property
    def kind(self) -> str:
        return "ball" if self.length is None else "tube"

    def lengths(self) -> np.ndarray:
        """Characteristic half-extent of the domain along each coordinate."""
        out = np.full(self.dim, self.radius)
        if self.length is not None:
            out[0] = self.length / 2
        return out

    def integrate(self, values) -> float:
        return float(np.tensordot(self.weights, values, axes=(0, 0)))

    def average(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0)) / self.weights.sum()


@lru_cache(maxsize=None)
def _sphere_rule(k: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Rule on the unit sphere S^k in R^(k+1), exact for polynomials of the given degree."""
    if k == 0:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if k == 1:
        m = degree + 1
        th = 2 * np.pi * np.arange(m) / m
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 2 * np.pi / m)
    # x1 = t, rest = sqrt(1 - t^2) * (point on S^(k-1)), measure (1 - t^2)^((k-2)/2) dt
    m = degree // 2 + 1
    a = (k - 2) / 2
    t, wt = roots_jacobi(m, a, a)
    sub_x, sub_w = _sphere_rule(k - 1, degree)
    s = np.sqrt(1 - t**2)
    nodes = np.concatenate(
        [np.column_stack([np.full(len(sub_w), ti), si * sub_x]) for ti, si in zip(t, s)]
    )
    weights = np.concatenate([wi * sub_w for wi in wt])
    return nodes, weights


@lru_cache(maxsize=None)
def _unit_ball_rule(n: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    m = degree // 2 + 1
    s, ws = roots_jacobi(m, 0.0, n - 1.0)  # weight (1 + s)^(n-1) on [-1, 1]
    r = (1 + s) / 2
    wr = ws / 2**n
    omega, wo = _sphere_rule(n - 1, degree)
    nodes = (r[:, None, None] * omega[None, :, :]).reshape(-1, n)
    weights = (wr[:, None] * wo[None, :]).ravel()
    return nodes, weights


def ball_quadrature(n: int, h: float, degree: int = DEFAULT_DEGREE) -> Quadrature:
    """Radial Gauss-Jacobi times spherical product rule on ``B_h(0)``."""
    if n < 1 or h <= 0:
        raise ValueError("need n >= 1 and h > 0")
    x, w = _unit_ball_rule(n, degree)
    return Quadrature(n, float(h), h * x, h**n * w, degree)


def tube_quadrature(
    n: int, length: float, h: float, degree: int = DEFAULT_DEGREE, axial_points: int | None = None
) -> Quadrature:
    """Gauss-Legendre along ``|x1| <= length/2`` times a ball rule of radius ``h`` across."""
    if n < 2 or h <= 0 or length <= 0:
        raise ValueError("need n >= 2, h > 0 and length > 0")
    m = axial_points or (degree // 2 + 1)
    t, wt = roots_legendre(m)
    xc, wc = _unit_ball_rule(n - 1, degree)
    ax = 0.5 * length * t
    nodes = np.concatenate([np.column_stack([np.full(len(wc), a), h * xc]) for a in ax])
    weights = np.concatenate([0.5 * length * wa * h ** (n - 1) * wc for wa in wt])
    return Quadrature(n, float(h), nodes, weights, degree, float(length))


def ball_volume(n: int, h: float = 1.0) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * h**n
