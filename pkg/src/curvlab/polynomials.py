"""Monomials, exact ball moments and polynomial vector-field bases."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np


@lru_cache(maxsize=None)
def monomials(n: int, max_degree: int, min_degree: int = 0) -> tuple[tuple[int, ...], ...]:
    """Exponent tuples of all monomials in ``n`` variables, graded by total degree."""
    out = []
    for d in range(min_degree, max_degree + 1):
        # reverse-lex inside each degree, so x1^d comes first
        block = [a for a in itertools.product(range(d + 1), repeat=n) if sum(a) == d]
        block.sort(reverse=True)
        out.extend(block)
    return tuple(out)


@lru_cache(maxsize=None)
def ball_average(exponents: tuple[int, ...]) -> float:
    """Volume-normalized integral of ``x**exponents`` over the unit ball.

    Uses the Gamma-function formula for sphere moments,
    ``int_S x^a = 2 prod G((a_i+1)/2) / G(sum (a_i+1)/2)``, integrated radially.
    """
    if any(a % 2 for a in exponents):
        return 0.0
    n = len(exponents)
    deg = sum(exponents)
    b = [(a + 1) / 2 for a in exponents]
    log_sphere = math.log(2.0) + sum(math.lgamma(x) for x in b) - math.lgamma(sum(b))
    log_vol = 0.5 * n * math.log(math.pi) - math.lgamma(n / 2 + 1)
    return math.exp(log_sphere - log_vol) / (deg + n)


def moment_matrix(monos: tuple[tuple[int, ...], ...]) -> np.ndarray:
    """Gram matrix ``G[a, b] = avg_B x^(monos[a] + monos[b])``."""
    k = len(monos)
    G = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            G[a, b] = G[b, a] = ball_average(tuple(p + q for p, q in zip(monos[a], monos[b])))
    return G


def monomial_values(monos, x: np.ndarray) -> np.ndarray:
    """Evaluate monomials at points ``x`` of shape (N, n); returns (N, K)."""
    x = np.atleast_2d(x)
    E = np.asarray(monos, dtype=int)  # (K, n)
    return np.prod(x[:, None, :] ** E[None, :, :], axis=-1)


def monomial_gradients(monos, x: np.ndarray) -> np.ndarray:
    """Gradients of monomials at points ``x``; returns (N, K, n)."""
    x = np.atleast_2d(x)
    N, n = x.shape
    E = np.asarray(monos, dtype=int)
    out = np.zeros((N, len(monos), n))
    for j in range(n):
        Ej = E.copy()
        Ej[:, j] -= 1
        mask = E[:, j] > 0
        Ej[~mask, j] = 0
        vals = np.prod(x[:, None, :] ** Ej[None, :, :], axis=-1)
        out[:, :, j] = vals * (E[:, j] * mask)[None, :]
    return out


@dataclass(frozen=True)
class PolyVectorBasis:
    """Vector fields ``x**alpha * e_i`` with ``1 <= |alpha| <= degree``.

    Elements are ordered component-major: index ``i * K + m`` is monomial ``m``
    in direction ``i``, so a coefficient vector reshapes to an (n, K) matrix.
    """

    dim: int
    degree: int

    def __post_init__(self):
        if self.dim < 1 or self.degree < 1:
            raise ValueError("basis needs dim >= 1 and degree >= 1")

    @cached_property
    def monos(self) -> tuple[tuple[int, ...], ...]:
        return monomials(self.dim, self.degree, 1)

    @property
    def elements(self) -> list[tuple[tuple[int, ...], int]]:
        return [(alpha, i) for i in range(self.dim) for alpha in self.monos]

    def __len__(self) -> int:
        return self.dim * len(self.monos)

    def index(self, alpha: tuple[int, ...], i: int) -> int:
        return i * len(self.monos) + self.monos.index(tuple(alpha))

    def coefficient_matrix(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (len(self),):
            raise ValueError(f"expected {len(self)} coefficients, got shape {c.shape}")
        return c.reshape(self.dim, len(self.monos))

    def linear_coefficients(self, W) -> np.ndarray:
        """Coefficients of the linear field ``x -> W x``."""
        W = np.asarray(W, dtype=float)
        c = np.zeros(len(self))
        for i in range(self.dim):
            for j in range(self.dim):
                alpha = tuple(int(k == j) for k in range(self.dim))
                c[self.index(alpha, i)] = W[i, j]
        return c

    def embed(self, other: "PolyVectorBasis", coeffs) -> np.ndarray:
        """Re-express coefficients over ``other`` (a basis of lower degree) in this basis."""
        if other.dim != self.dim or other.degree > self.degree:
            raise ValueError("can only embed a lower-degree basis of the same dimension")
        C = other.coefficient_matrix(coeffs)
        out = np.zeros((self.dim, len(self.monos)))
        out[:, : len(other.monos)] = C  # graded order makes lower degrees a prefix
        return out.ravel()

    def evaluate(self, coeffs, x) -> np.ndarray:
        return monomial_values(self.monos, x) @ self.coefficient_matrix(coeffs).T

    def gradient(self, coeffs, x) -> np.ndarray:
        """Jacobians ``d f(x)[i, j] = d f_i / d x_j`` at each point; shape (N, n, n)."""
        G = monomial_gradients(self.monos, x)
        return np.einsum("im,qmj->qij", self.coefficient_matrix(coeffs), G)


def monomial_hessians(monos, x: np.ndarray) -> np.ndarray:
    """Second derivatives of monomials at points ``x``; returns (N, K, n, n)."""
    x = np.atleast_2d(x)
    N, n = x.shape
    E = np.asarray(monos, dtype=int)
    out = np.zeros((N, len(monos), n, n))
    for a in range(n):
        for b in range(a, n):
            Eab = E.copy()
            Eab[:, a] -= 1
            Eab[:, b] -= 1
            factor = E[:, a] * (E[:, b] - (a == b))
            mask = factor != 0
            Eab[~mask] = 0
            vals = np.prod(x[:, None, :] ** Eab[None, :, :], axis=-1) * (factor * mask)[None, :]
            out[:, :, a, b] = vals
            out[:, :, b, a] = vals
    return out
