"""The curvature norm ``|R| = sqrt(min I_R)`` via exact least squares on the unit ball.

``I_R[f] = avg_B |Sym df - e|^2`` with ``e = strain_field(R)`` and
``Sym df = (df + df^T) / 2``. Every integrand is polynomial, so the functional is
assembled exactly from ball moments and minimized over polynomial vector fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .curvature import (
    RiemannTensor,
    recover_from_hessian,
    strain_field,
    validate_symmetries,
)
from .polynomials import (
    PolyVectorBasis,
    ball_average,
    monomial_hessians,
    monomial_values,
    moment_matrix,
    monomials,
)

DEFAULT_DEGREE = 3
RCOND = 1e-10


class AssemblyError(RuntimeError):
    """The assembled normal-equation matrix is not symmetric positive semidefinite."""


@dataclass(frozen=True)
class _System:
    """Least-squares system in the moment-orthonormalized coordinates.

    Columns of ``A`` are the symmetric gradients of the basis fields; for any
    strain polynomial ``s`` with coordinates ``v``, ``|v|^2 = avg_B |s|^2``.
    """

    basis: PolyVectorBasis
    out_monos: tuple
    A: np.ndarray
    L: np.ndarray  # lower Cholesky factor of the moment matrix
    pinv: np.ndarray  # spectral pseudo-inverse of A, cutoff RCOND relative to the largest singular value

    def strain_coordinates(self, S: np.ndarray) -> np.ndarray:
        """Map strain coefficients ``S[i, j, m]`` over ``out_monos`` to system coordinates."""
        return np.einsum("mk,ijm->ijk", self.L, S).ravel()


def _sym_grad_coeffs(basis: PolyVectorBasis, out_monos) -> np.ndarray:
    """``S[a, i, j, m]``: coefficient of monomial ``m`` in ``(Sym d phi_a)_ij``."""
    n = basis.dim
    lookup = {mono: k for k, mono in enumerate(out_monos)}
    S = np.zeros((len(basis), n, n, len(out_monos)))
    for a, (alpha, i) in enumerate(basis.elements):
        for j in range(n):
            if alpha[j] == 0:
                continue
            beta = list(alpha)
            beta[j] -= 1
            m = lookup[tuple(beta)]
            # (d phi)_{ij} = alpha_j x^(alpha - e_j); half goes to (i,j), half to (j,i)
            S[a, i, j, m] += 0.5 * alpha[j]
            S[a, j, i, m] += 0.5 * alpha[j]
    return S


@lru_cache(maxsize=32)
def _system(n: int, degree: int) -> _System:
    basis = PolyVectorBasis(n, degree)
    out_monos = monomials(n, max(degree - 1, 2))
    G = moment_matrix(out_monos)
    L = np.linalg.cholesky(G)
    S = _sym_grad_coeffs(basis, out_monos)
    A = np.einsum("mk,aijm->ijka", L, S).reshape(-1, len(basis))
    _check_normal_matrix(A.T @ A)
    return _System(basis, out_monos, A, L, np.linalg.pinv(A, rcond=RCOND))


def _strain_coeffs(t: RiemannTensor, out_monos) -> np.ndarray:
    """Coefficients of ``strain_field(t)`` over ``out_monos``."""
    n = t.dim
    c = strain_field(t).coeffs
    lookup = {mono: k for k, mono in enumerate(out_monos)}
    E = np.zeros((n, n, len(out_monos)))
    for k in range(n):
        for l in range(n):
            mono = tuple((r == k) + (r == l) for r in range(n))
            E[:, :, lookup[mono]] += c[:, :, k, l]
    return E


@dataclass
class NormSolution:
    value: float
    norm: float
    coefficients: np.ndarray
    degree_used: int
    residual_tensor: RiemannTensor
    offset: np.ndarray = field(default=None)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "norm": self.norm,
            "degree_used": self.degree_used,
            "coefficients": np.asarray(self.coefficients).tolist(),
            "residual_tensor": self.residual_tensor.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate_IR(t: RiemannTensor, coeffs, degree: int | None = None) -> float:
    """Exact value of ``avg_B |Sym df - e|^2`` for ``f`` given by basis coefficients.

    ``coeffs`` may be ``None`` or a scalar zero for the zero field; otherwise its
    length fixes the basis degree unless ``degree`` is passed.
    """
    c = np.zeros(0) if coeffs is None else np.atleast_1d(np.asarray(coeffs, dtype=float))
    if degree is None:
        degree = _degree_from_length(t.dim, len(c)) if len(c) > 1 else 1
    sys = _system(t.dim, degree)
    if len(c) <= 1 and not np.any(c):
        c = np.zeros(len(sys.basis))
    if len(c) != len(sys.basis):
        raise ValueError(f"expected {len(sys.basis)} coefficients for dim {t.dim}, degree {degree}")
    target = sys.strain_coordinates(_strain_coeffs(t, sys.out_monos))
    r = sys.A @ c - target
    return float(r @ r)


def _degree_from_length(n: int, length: int) -> int:
    for d in range(1, 32):
        if n * len(monomials(n, d, 1)) == length:
            return d
    raise ValueError(f"{length} coefficients match no polynomial basis in dimension {n}")


def _normalize(basis: PolyVectorBasis, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Remove the mean skew gradient and report the mean value as an offset."""
    C = basis.coefficient_matrix(c)
    n = basis.dim
    mean_grad = np.zeros((n, n))
    mean_val = np.zeros(n)
    for m, alpha in enumerate(basis.monos):
        mean_val += C[:, m] * ball_average(alpha)
        for j in range(n):
            if alpha[j]:
                beta = list(alpha)
                beta[j] -= 1
                mean_grad[:, j] += C[:, m] * alpha[j] * ball_average(tuple(beta))
    W = 0.5 * (mean_grad - mean_grad.T)
    c = c - basis.linear_coefficients(W)
    return c, -mean_val


def _check_normal_matrix(M: np.ndarray) -> None:
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise AssemblyError("normal matrix is not symmetric")
    w = np.linalg.eigvalsh(M)
    if w.min() < -1e-10 * max(1.0, w.max()):
        raise AssemblyError(f"normal matrix is indefinite (min eigenvalue {w.min():.3e})")


def minimize_IR(t: RiemannTensor, degree: int = DEFAULT_DEGREE) -> NormSolution:
    """Minimize ``I_R`` over polynomial fields of the given degree.

    The minimizer is the least-squares solution of ``A c = target``; the value is
    the squared residual, which equals ``avg|e|^2 - c.b`` at the solution but
    avoids the cancellation of that form.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    sys = _system(t.dim, degree)
    E = _strain_coeffs(t, sys.out_monos)
    target = sys.strain_coordinates(E)
    c = sys.pinv @ target
    c, offset = _normalize(sys.basis, c)
    r = sys.A @ c - target
    value = float(r @ r)
    residual = _residual_tensor(sys, c, E)
    return NormSolution(value, float(np.sqrt(value)), c, degree, RiemannTensor(t.dim, residual), offset)


def _residual_coeffs(sys: _System, c: np.ndarray, E: np.ndarray) -> np.ndarray:
    return E - np.einsum("a,aijm->ijm", c, _sym_grad_coeffs(sys.basis, sys.out_monos))


def _residual_tensor(sys: _System, c: np.ndarray, E: np.ndarray, x=None) -> np.ndarray:
    """Saint-Venant recovery applied to the residual strain ``e - Sym df`` at points ``x``.

    Defaults to the origin and returns a single (n, n, n, n) array in that case.
    """
    n = sys.basis.dim
    single = x is None
    x = np.zeros((1, n)) if x is None else np.atleast_2d(x)
    H = np.einsum("ijm,qmab->qijab", _residual_coeffs(sys, c, E), monomial_hessians(sys.out_monos, x))
    out = recover_from_hessian(H)
    return out[0] if single else out


def residual_tensor_at(t: RiemannTensor, sol: NormSolution, x) -> np.ndarray:
    """Recovered tensor from the full polynomial residual at each point of ``x``; (N, n, n, n)."""
    sys = _system(t.dim, sol.degree_used)
    return _residual_tensor(sys, sol.coefficients, _strain_coeffs(t, sys.out_monos), x)


def residual_strain(t: RiemannTensor, sol: NormSolution):
    """Residual strain ``x -> e(x) - Sym df(x)`` at the minimizer, as a callable on points."""
    sys = _system(t.dim, sol.degree_used)
    resid = _residual_coeffs(sys, sol.coefficients, _strain_coeffs(t, sys.out_monos))

    def field(x):
        return np.einsum("ijm,qm->qij", resid, monomial_values(sys.out_monos, x))

    return field


def curvature_norm(t: RiemannTensor, degree: int = DEFAULT_DEGREE) -> float:
    if not validate_symmetries(t):
        raise ValueError("tensor violates curvature symmetries")
    if t.is_zero():
        return 0.0
    return minimize_IR(t, degree).norm


def curvature_inner(t1: RiemannTensor, t2: RiemannTensor, degree: int = DEFAULT_DEGREE) -> float:
    """Inner product induced by the curvature norm, by polarization."""
    if t1.dim != t2.dim:
        raise ValueError(f"dimension mismatch: {t1.dim} vs {t2.dim}")
    plus = curvature_norm(t1 + t2, degree) ** 2
    minus = curvature_norm(t1 - t2, degree) ** 2
    return 0.25 * (plus - minus)
