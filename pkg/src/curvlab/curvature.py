"""Algebraic curvature tensors, the quadratic strain they induce, and Saint-Venant recovery.

Index convention: ``components[i, j, k, l] = R_ijkl`` in an orthonormal frame, with
``R_ijkl = kappa (d_ik d_jl - d_il d_jk)`` for constant sectional curvature ``kappa``.
With this sign the normal-coordinate metric reads ``g_ij = d_ij + R_kijl x^k x^l / 3``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RiemannTensor:
    dim: int
    components: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"curvature tensor needs dim >= 2, got {self.dim}")
        c = np.array(self.components, dtype=float)
        if c.shape != (self.dim,) * 4:
            raise ValueError(f"components must have shape {(self.dim,) * 4}, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    def __add__(self, other: "RiemannTensor") -> "RiemannTensor":
        _check_dims(self, other)
        return RiemannTensor(self.dim, self.components + other.components)

    def __sub__(self, other: "RiemannTensor") -> "RiemannTensor":
        _check_dims(self, other)
        return RiemannTensor(self.dim, self.components - other.components)

    def __mul__(self, alpha: float) -> "RiemannTensor":
        return RiemannTensor(self.dim, float(alpha) * self.components)

    __rmul__ = __mul__

    def __neg__(self) -> "RiemannTensor":
        return RiemannTensor(self.dim, -self.components)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.components))

    def is_zero(self) -> bool:
        return not np.any(self.components)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "components": self.components.ravel().tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RiemannTensor":
        n = int(d["dim"])
        return cls(n, np.asarray(d["components"], dtype=float).reshape((n,) * 4))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "RiemannTensor":
        return cls.from_dict(json.loads(s))


def _check_dims(a, b):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def symmetry_violation(t: RiemannTensor) -> float:
    """Largest violation over the four families of curvature symmetries."""
    R = t.components
    return max(
        np.abs(R + R.transpose(1, 0, 2, 3)).max(),
        np.abs(R + R.transpose(0, 1, 3, 2)).max(),
        np.abs(R - R.transpose(2, 3, 0, 1)).max(),
        np.abs(_bianchi_sum(R)).max(),
    )


def _bianchi_sum(R: np.ndarray) -> np.ndarray:
    # R_ijkl + R_iljk + R_iklj
    return R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)


def validate_symmetries(t: RiemannTensor, tol: float = DEFAULT_TOL) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = 1.0 + np.abs(t.components).max()
    return bool(symmetry_violation(t) <= tol * scale)


_PERMS = [(p, np.linalg.det(np.eye(4)[list(p)])) for p in itertools.permutations(range(4))]


def _alternate(R: np.ndarray) -> np.ndarray:
    out = np.zeros_like(R)
    for p, sign in _PERMS:
        out += sign * R.transpose(p)
    return out / 24.0


def symmetrize_curvature(raw) -> RiemannTensor:
    """Orthogonal projection of a rank-4 array onto algebraic curvature tensors.

    Step 1 averages over the order-8 group generated by the two pair
    antisymmetries and the pair swap. Step 2 removes the totally antisymmetric
    part, which for pair-symmetric tensors is one third of the Bianchi sum.
    """
    R = np.asarray(raw, dtype=float)
    if R.ndim != 4 or len(set(R.shape)) != 1:
        raise ValueError(f"need a rank-4 array with equal index ranges, got shape {R.shape}")
    R = 0.5 * (R - R.transpose(1, 0, 2, 3))
    R = 0.5 * (R - R.transpose(0, 1, 3, 2))
    R = 0.5 * (R + R.transpose(2, 3, 0, 1))
    R = R - _alternate(R)
    return RiemannTensor(R.shape[0], R)


def constant_sectional(n: int, kappa: float) -> RiemannTensor:
    d = np.eye(n)
    R = kappa * (np.einsum("ik,jl->ijkl", d, d) - np.einsum("il,jk->ijkl", d, d))
    return RiemannTensor(n, R)


def random_curvature(n: int, rng: np.random.Generator, unit: bool = False) -> RiemannTensor:
    """Random valid tensor: projected Gaussian noise, optionally unit Frobenius norm."""
    t = symmetrize_curvature(rng.standard_normal((n,) * 4))
    if unit:
        t = t * (1.0 / t.frobenius())
    return t


@dataclass(frozen=True, eq=False)
class QuadraticStrain:
    """Symmetric-matrix field ``e_ij(x) = coeffs[i, j, k, l] x^k x^l``."""

    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.dim,) * 4:
            raise ValueError(f"coeffs must have shape {(self.dim,) * 4}, got {c.shape}")
        # store symmetrized in (i,j) and (k,l); the field itself is unchanged
        c = 0.5 * (c + c.transpose(0, 1, 3, 2))
        c = 0.5 * (c + c.transpose(1, 0, 2, 3))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.einsum("ijkl,...k,...l->...ij", self.coeffs, x, x)

    def hessian(self) -> np.ndarray:
        """Constant second derivatives ``H[i, j, a, b] = d_a d_b e_ij``."""
        return 2.0 * self.coeffs


def strain_field(t: RiemannTensor) -> QuadraticStrain:
    # e_ij = R_kijl x^k x^l / 6  ->  coeffs[i,j,k,l] = R[k,i,j,l] / 6
    return QuadraticStrain(t.dim, t.components.transpose(1, 2, 0, 3) / 6.0)


def saint_venant(hess: np.ndarray) -> np.ndarray:
    """Saint-Venant operator from strain second derivatives ``H[i, j, a, b]``.

    Returns ``S[i,j,k,l] = d_lj e_ik + d_ki e_jl - d_li e_jk - d_kj e_il``,
    which vanishes iff the strain is locally a symmetrized gradient.
    Accepts a leading batch axis.
    """
    H = np.asarray(hess)
    e_ik_lj = np.einsum("...iklj->...ijkl", H)
    e_jl_ki = np.einsum("...jlki->...ijkl", H)
    e_jk_li = np.einsum("...jkli->...ijkl", H)
    e_il_kj = np.einsum("...ilkj->...ijkl", H)
    return e_ik_lj + e_jl_ki - e_jk_li - e_il_kj


def recover_from_hessian(hess: np.ndarray) -> np.ndarray:
    # saint_venant(e)_ijkl equals R_jikl for e = strain_field(R); swap the first pair back
    return np.swapaxes(saint_venant(hess), -4, -3)


def saint_venant_recover(e: QuadraticStrain) -> RiemannTensor:
    return RiemannTensor(e.dim, recover_from_hessian(e.hessian()))
