"""Nonlinear incompatible elastic energy on small balls and tubes.

The energy of a deformation ``u`` is the Riemannian average of
``dist^2(du A, SO(n))`` with ``A = g^{-1/2}``, the inverse metric root.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .geometry import NormalMetric, sqrt_inv_at, volume_density
from .norm import minimize_IR
from .polynomials import PolyVectorBasis, monomial_gradients
from .quadrature import Quadrature, ball_quadrature

log = logging.getLogger(__name__)

DEFAULT_ANSATZ_DEGREE = 5


# -- distance to the rotation group ------------------------------------------------


def nearest_rotation(F: np.ndarray) -> np.ndarray:
    """Closest element of SO(n) in the Frobenius norm; accepts a batch (..., n, n)."""
    U, _, Vt = np.linalg.svd(F)
    d = np.sign(np.linalg.det(U @ Vt))
    d[d == 0] = 1.0
    U = U.copy()
    U[..., :, -1] *= d[..., None]
    return U @ Vt


def dist2_to_rotations(F: np.ndarray) -> np.ndarray:
    """Squared distance to SO(n); the smallest singular value is reflected when det F <= 0."""
    F = np.asarray(F, dtype=float)
    U, s, Vt = np.linalg.svd(F)
    d = np.sign(np.linalg.det(U @ Vt))
    d = np.where(d == 0, 1.0, d)
    target = np.ones_like(s)
    target[..., -1] = d
    return np.sum((s - target) ** 2, axis=-1)


def dist_to_rotations(F) -> float:
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(F)):
        raise ValueError("matrix has non-finite entries")
    return float(np.sqrt(dist2_to_rotations(F)))


# -- configurations -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Configuration:
    """Polynomial deformation ``u(x) = translation + sum_a c_a x^alpha_a e_i_a``.

    Coefficients run over ``PolyVectorBasis(dim, ansatz_degree)``, which contains
    the linear fields, so the identity map is representable exactly.
    """

    dim: int
    ansatz_degree: int
    coefficients: np.ndarray
    translation: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} coefficients, got {c.shape}")
        t = np.zeros(self.dim) if self.translation is None else np.array(self.translation, float)
        c.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "translation", t)

    @property
    def basis(self) -> PolyVectorBasis:
        return PolyVectorBasis(self.dim, self.ansatz_degree)

    @classmethod
    def identity(cls, n: int, degree: int = DEFAULT_ANSATZ_DEGREE) -> "Configuration":
        basis = PolyVectorBasis(n, degree)
        return cls(n, degree, basis.linear_coefficients(np.eye(n)))

    def __call__(self, x) -> np.ndarray:
        return self.translation + self.basis.evaluate(self.coefficients, x)

    def gradient(self, x) -> np.ndarray:
        return self.basis.gradient(self.coefficients, x)

    def rigidly_moved(self, Q, c=None) -> "Configuration":
        """The configuration ``x -> Q u(x) + c``."""
        Q = np.asarray(Q, dtype=float)
        C = self.basis.coefficient_matrix(self.coefficients)
        t = Q @ self.translation + (0 if c is None else np.asarray(c, float))
        return Configuration(self.dim, self.ansatz_degree, (Q @ C).ravel(), t)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "ansatz_degree": self.ansatz_degree,
            "coefficients": self.coefficients.tolist(),
            "translation": self.translation.tolist(),
        }


# -- energy ------------------------------------------------------------------------


def energy_density(u: Configuration, m: NormalMetric, x) -> np.ndarray:
    """``dist^2(du(x) g(x)^{-1/2}, SO(n))`` at one point or a batch of points."""
    x = np.asarray(x, dtype=float)
    F = u.gradient(np.atleast_2d(x))
    A = np.atleast_3d(sqrt_inv_at(m, np.atleast_2d(x)))
    d2 = dist2_to_rotations(F @ A)
    return d2[0] if x.ndim == 1 else d2


class EnergyModel:
    """Precomputed quadrature data for repeated energy and gradient evaluations.

    Works in the physical coefficients of a ``Configuration`` of fixed degree.
    """

    def __init__(self, metric: NormalMetric, quad: Quadrature, degree: int = DEFAULT_ANSATZ_DEGREE):
        if metric.dim != quad.dim:
            raise ValueError("metric and quadrature dimensions differ")
        self.metric = metric
        self.quad = quad
        self.basis = PolyVectorBasis(quad.dim, degree)
        self.grads = monomial_gradients(self.basis.monos, quad.nodes)  # (N, K, n)
        self.A = sqrt_inv_at(metric, quad.nodes)
        wr = quad.weights * volume_density(metric, quad.nodes)
        self.w = wr / wr.sum()

    def _stretch(self, c: np.ndarray) -> np.ndarray:
        C = self.basis.coefficient_matrix(c)
        return np.einsum("im,qmj->qij", C, self.grads) @ self.A

    def energy(self, c) -> float:
        return float(self.w @ dist2_to_rotations(self._stretch(c)))

    def energy_and_gradient(self, c) -> tuple[float, np.ndarray]:
        M = self._stretch(c)
        R = nearest_rotation(M)
        D = M - R
        e = float(self.w @ np.einsum("qij,qij->q", D, D))
        # d dist^2 / dM = 2 (M - polar(M)); chain through M = F A
        dF = 2.0 * self.w[:, None, None] * (D @ np.swapaxes(self.A, 1, 2))
        g = np.einsum("qij,qmj->im", dF, self.grads)
        return e, g.ravel()


def total_energy(u: Configuration, m: NormalMetric, h: float, q: Quadrature | None = None) -> float:
    """Volume-normalized energy of ``u`` on the quadrature domain of radius ``h``."""
    q = q if q is not None else ball_quadrature(m.dim, h)
    if not np.isclose(q.radius, h, rtol=1e-12, atol=0):
        raise ValueError(f"quadrature radius {q.radius} does not match h = {h}")
    return EnergyModel(m, q, u.ansatz_degree).energy(u.coefficients)


def identity_energy_curve(m: NormalMetric, h_list, degree: int = 20) -> list[tuple[float, float, float]]:
    """Rows ``(h, E[id], E[id] / h^4)`` for the identity map of normal coordinates."""
    ident = Configuration.identity(m.dim, 1)
    rows = []
    for h in h_list:
        e = total_energy(ident, m, h, ball_quadrature(m.dim, h, degree))
        rows.append((float(h), e, e / h**4))
    return rows


# -- minimization ------------------------------------------------------------------


@dataclass
class OptimizerOptions:
    """Settings for ``minimize_energy``.

    ``grad_tol`` applies to the max-norm gradient of ``E / h^4`` in the scaled
    coefficients, and is multiplied by ``1 + E / h^4``.
    """

    grad_tol: float = 1e-12
    max_iters: int = 2000
    init: str = "identity"  # or "cubic": identity plus the rescaled I_R minimizer
    quadrature_degree: int = 20
    initial: Configuration | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "grad_tol": self.grad_tol,
            "max_iters": self.max_iters,
            "init": self.init,
            "quadrature_degree": self.quadrature_degree,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict | None) -> "OptimizerOptions":
        d = dict(d or {})
        return cls(**{k: d[k] for k in ("grad_tol", "max_iters", "init", "quadrature_degree", "seed") if k in d})


@dataclass
class MinimizationResult:
    h: float
    energy: float
    converged: bool
    iterations: int
    ansatz_degree: int
    configuration: Configuration
    grad_norm: float = float("nan")
    identity_energy: float = float("nan")

    @property
    def energy_over_h4(self) -> float:
        return self.energy / self.h**4

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "energy": self.energy,
            "energy_over_h4": self.energy_over_h4,
            "converged": self.converged,
            "iterations": self.iterations,
            "ansatz_degree": self.ansatz_degree,
            "coefficients": self.configuration.coefficients.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def coefficient_scales(basis: PolyVectorBasis, lengths, h: float) -> np.ndarray:
    """Per-element scale so that unit scaled coefficients change ``du`` by about ``h^2``.

    For a ball (all lengths ``h``) this is ``h^(3 - |alpha|)``, matching
    perturbations of the form ``h^3 f(x / h)``.
    """
    lengths = np.asarray(lengths, dtype=float)
    scales = []
    for alpha, _ in basis.elements:
        a = np.asarray(alpha)
        shortest = lengths[a > 0].min()
        scales.append(h**2 * shortest / np.prod(lengths**a))
    return np.asarray(scales)


def _cubic_guess(basis: PolyVectorBasis, metric: NormalMetric, h: float) -> np.ndarray:
    """Physical coefficients of ``x + h^3 f(x/h)`` with ``f`` the degree-3 I_R minimizer."""
    sol = minimize_IR(metric.curvature(), min(3, basis.degree))
    small = PolyVectorBasis(basis.dim, sol.degree_used)
    f = basis.embed(small, sol.coefficients)
    degs = np.array([sum(alpha) for alpha, _ in basis.elements])
    return basis.linear_coefficients(np.eye(basis.dim)) + h ** (3.0 - degs) * f


def minimize_energy(
    m: NormalMetric,
    h: float,
    P: int = DEFAULT_ANSATZ_DEGREE,
    opts: OptimizerOptions | None = None,
    quadrature: Quadrature | None = None,
) -> MinimizationResult:
    """Minimize the elastic energy over polynomial deformations of degree ``P``.

    Runs BFGS on ``E / h^4`` in scaled coefficients, starting from the identity
    (or from the rescaled I_R minimizer when ``opts.init == "cubic"``).
    """
    opts = opts or OptimizerOptions()
    if P < 1:
        raise ValueError("ansatz degree must be >= 1")
    q = quadrature or ball_quadrature(m.dim, h, opts.quadrature_degree)
    model = EnergyModel(m, q, P)
    basis = model.basis
    ident = basis.linear_coefficients(np.eye(m.dim))
    scale = coefficient_scales(basis, q.lengths(), h)
    h4 = h**4

    if opts.initial is not None:
        start = basis.embed(opts.initial.basis, opts.initial.coefficients)
    elif opts.init == "cubic":
        start = _cubic_guess(basis, m, h)
    elif opts.init == "identity":
        start = ident
    else:
        raise ValueError(f"unknown init {opts.init!r}")

    def objective(z):
        e, g = model.energy_and_gradient(ident + scale * z)
        return e / h4, scale * g / h4

    z0 = (start - ident) / scale
    e_ident = model.energy(ident)
    res = minimize(
        objective,
        z0,
        jac=True,
        method="BFGS",
        options={"gtol": 0.0, "maxiter": opts.max_iters, "xrtol": 0.0},
    )
    z, j, g, polish_steps = _newton_polish(objective, res.x, opts.grad_tol)
    grad_norm = float(np.abs(g).max())
    converged = grad_norm <= opts.grad_tol * (1.0 + j)
    if not converged:
        log.warning("minimize_energy h=%g: gradient %.3e above tolerance (%s)", h, grad_norm, res.message)
    c = ident + scale * z
    u = Configuration(m.dim, P, c)
    return MinimizationResult(
        float(h), j * h4, bool(converged), int(res.nit) + polish_steps, P, u, grad_norm, e_ident
    )


def _fd_hessian(objective, z: np.ndarray, step: float = 1e-5) -> np.ndarray:
    H = np.empty((len(z), len(z)))
    for k in range(len(z)):
        dz = np.zeros_like(z)
        dz[k] = step
        H[:, k] = (objective(z + dz)[1] - objective(z - dz)[1]) / (2 * step)
    return 0.5 * (H + H.T)


def _newton_polish(objective, z: np.ndarray, grad_tol: float, max_steps: int = 8):
    """Newton steps with a finite-difference Hessian of the analytic gradient.

    Near the minimum, energy differences fall below double-precision resolution
    long before the gradient does, so steps are accepted on gradient decrease.
    The rotation null space of the Hessian is handled by the pseudo-inverse.
    """
    j, g = objective(z)
    steps = 0
    for _ in range(max_steps):
        if np.abs(g).max() <= grad_tol * (1.0 + j):
            break
        H = _fd_hessian(objective, z)
        dz = -np.linalg.lstsq(H, g, rcond=1e-10)[0]
        t = 1.0
        while t > 1e-4:
            j_new, g_new = objective(z + t * dz)
            if np.abs(g_new).max() < np.abs(g).max():
                break
            t *= 0.5
        else:
            break
        z, j, g = z + t * dz, j_new, g_new
        steps += 1
    return z, j, g, steps


# -- rigid alignment ---------------------------------------------------------------


@dataclass
class Alignment:
    """Best rigid motion ``u ~ rotation @ x + translation`` and the leftover displacement.

    ``residual`` is the volume-normalized W^{1,2} norm of
    ``v = rotation^T (u - translation) - x`` over the quadrature domain.
    """

    rotation: np.ndarray
    translation: np.ndarray
    residual: float
    displacement_l2: float
    displacement_grad_l2: float
    degenerate: bool = False


def align_rigid(u: Configuration, q: Quadrature) -> Alignment:
    """Procrustes alignment through the polar factor of the averaged gradient."""
    x = q.nodes
    ux = u(x)
    if not np.all(np.isfinite(ux)):
        raise ValueError("configuration is not finite on the quadrature nodes")
    du = u.gradient(x)
    Fbar = q.average(du)
    s = np.linalg.svd(Fbar, compute_uv=False)
    degenerate = bool(s[-1] <= 1e-12 * max(s[0], 1e-300))
    if degenerate:
        log.warning("align_rigid: averaged gradient is rank deficient, using the identity")
        Q = np.eye(u.dim)
    else:
        Q = nearest_rotation(Fbar[None])[0]
    c = q.average(ux) - Q @ q.average(x)
    v = (ux - c) @ Q - x  # rows: Q^T (u - c) - x
    dv = np.einsum("ki,qkj->qij", Q, du) - np.eye(u.dim)
    l2 = float(np.sqrt(q.average(np.einsum("qi,qi->q", v, v))))
    g2 = float(np.sqrt(q.average(np.einsum("qij,qij->q", dv, dv))))
    return Alignment(Q, c, float(np.hypot(l2, g2)), l2, g2, degenerate)


def w12_norm(u: Configuration, q: Quadrature, subtract_identity: bool = False) -> float:
    """Volume-normalized W^{1,2} norm of ``u`` (or of ``u - id``) on the quadrature domain."""
    x = q.nodes
    v = u(x) - (x if subtract_identity else 0.0)
    dv = u.gradient(x) - (np.eye(u.dim) if subtract_identity else 0.0)
    l2 = q.average(np.einsum("qi,qi->q", v, v))
    g2 = q.average(np.einsum("qij,qij->q", dv, dv))
    return float(np.sqrt(l2 + g2))
