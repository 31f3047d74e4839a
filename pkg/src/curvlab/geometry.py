"""Metric models on balls in normal coordinates and the identity-map energy coefficient."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .curvature import RiemannTensor, constant_sectional

KINDS = ("flat", "truncated", "exact_constant")
TRUNCATED_RADIUS = 0.5
SERIES_CUTOFF = 1e-3  # |kappa| r^2 below which series replace the closed forms


class DomainError(ValueError):
    """Evaluation requested outside the metric's validity radius."""


def default_validity_radius(kind: str, kappa: float = 0.0) -> float:
    if kind == "truncated":
        return TRUNCATED_RADIUS
    if kind == "exact_constant" and kappa > 0:
        return math.pi / (2.0 * math.sqrt(kappa))
    return math.inf


@dataclass(frozen=True, eq=False)
class NormalMetric:
    """Metric ``g(x)`` on a ball around the origin of normal coordinates.

    ``truncated`` keeps the quadratic curvature term only; ``exact_constant`` is
    the space-form metric ``g = s(r)^2 Id + (1 - s(r)^2) x x^T / r^2`` with
    ``s(r) = sin(sqrt(kappa) r) / (sqrt(kappa) r)`` (sinh for negative kappa).
    """

    dim: int
    kind: str = "flat"
    kappa: Optional[float] = None
    tensor: Optional[RiemannTensor] = None
    validity_radius: float = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "truncated":
            if self.tensor is None:
                if self.kappa is None:
                    raise ValueError("truncated metric needs a tensor or kappa")
                object.__setattr__(self, "tensor", constant_sectional(self.dim, self.kappa))
            if self.tensor.dim != self.dim:
                raise ValueError("tensor dimension does not match metric dimension")
        if self.kind == "exact_constant" and self.kappa is None:
            raise ValueError("exact_constant metric needs kappa")
        if self.validity_radius is None:
            r = default_validity_radius(self.kind, self.kappa or 0.0)
            object.__setattr__(self, "validity_radius", r)
        if not self.validity_radius > 0:
            raise ValueError("validity_radius must be positive")

    @classmethod
    def flat(cls, n: int) -> "NormalMetric":
        return cls(n, "flat")

    @classmethod
    def truncated(cls, t: RiemannTensor, validity_radius: float | None = None) -> "NormalMetric":
        return cls(t.dim, "truncated", tensor=t, validity_radius=validity_radius)

    @classmethod
    def exact(cls, n: int, kappa: float, validity_radius: float | None = None) -> "NormalMetric":
        return cls(n, "exact_constant", kappa=float(kappa), validity_radius=validity_radius)

    def curvature(self) -> RiemannTensor:
        """Curvature tensor at the origin."""
        if self.kind == "truncated":
            return self.tensor
        return constant_sectional(self.dim, self.kappa if self.kind == "exact_constant" else 0.0)

    def to_dict(self) -> dict:
        d = {"dim": self.dim, "kind": self.kind}
        if self.kappa is not None:
            d["kappa"] = self.kappa
        if self.tensor is not None:
            d["tensor"] = self.tensor.to_dict()
        d["validity_radius"] = None if math.isinf(self.validity_radius) else self.validity_radius
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NormalMetric":
        tensor = RiemannTensor.from_dict(d["tensor"]) if d.get("tensor") is not None else None
        r = d.get("validity_radius")
        return cls(
            int(d["dim"]),
            d.get("kind", "flat"),
            kappa=None if d.get("kappa") is None else float(d["kappa"]),
            tensor=tensor,
            validity_radius=None if r is None else float(r),
        )


def _points(m: NormalMetric, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != m.dim:
        raise ValueError(f"points must have {m.dim} coordinates")
    r = np.linalg.norm(x, axis=-1)
    if np.any(r > m.validity_radius * (1 + 1e-12)):
        raise DomainError(f"|x| = {r.max():.6g} exceeds validity radius {m.validity_radius:.6g}")
    return x, single


def _space_form_factors(kappa: float, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``s^2`` and ``(1 - s^2) / r^2`` as smooth functions of ``r^2``."""
    u = kappa * r2
    small = np.abs(u) < SERIES_CUTOFF
    s2 = np.empty_like(u)
    q = np.empty_like(u)
    # sin^2(a)/a^2 = 1 - u/3 + 2u^2/45 - u^3/315 + 2u^4/14175 with u = a^2
    us = u[small]
    s2[small] = 1 - us / 3 + 2 * us**2 / 45 - us**3 / 315 + 2 * us**4 / 14175
    q[small] = kappa * (1 / 3 - 2 * us / 45 + us**2 / 315 - 2 * us**3 / 14175)
    ub = u[~small]
    if kappa > 0:
        a = np.sqrt(ub)
        s = np.sin(a) / a
    else:
        a = np.sqrt(-ub)
        s = np.sinh(a) / a
    s2[~small] = s**2
    q[~small] = (1 - s**2) / r2[~small]
    return s2, q


def metric_at(m: NormalMetric, x) -> np.ndarray:
    """Metric matrix at one point (n,) or a batch of points (N, n)."""
    x, single = _points(m, x)
    n = m.dim
    I = np.eye(n)
    if m.kind == "flat":
        g = np.broadcast_to(I, (len(x), n, n)).copy()
    elif m.kind == "truncated":
        g = I + np.einsum("kijl,qk,ql->qij", m.tensor.components, x, x) / 3.0
    else:
        s2, q = _space_form_factors(m.kappa, np.einsum("qi,qi->q", x, x))
        g = s2[:, None, None] * I + q[:, None, None] * np.einsum("qi,qj->qij", x, x)
    return g[0] if single else g


def sqrt_inv_at(m: NormalMetric, x) -> np.ndarray:
    """Inverse principal square root of the metric, via symmetric eigendecomposition."""
    g = metric_at(m, x)
    w, V = np.linalg.eigh(g)
    if np.any(w <= 0):
        raise DomainError("metric is not positive definite at the requested point")
    return np.einsum("...ik,...k,...jk->...ij", V, 1.0 / np.sqrt(w), V)


def volume_density(m: NormalMetric, x):
    g = metric_at(m, x)
    det = np.linalg.det(g)
    if np.any(det <= 0):
        raise DomainError("metric is not positive definite at the requested point")
    return np.sqrt(det)


def ball_moment(n: int, indices) -> float:
    """Volume-normalized moment ``avg_{B_1} x^k x^l x^c x^d`` of the unit ball."""
    if n < 2:
        raise ValueError("dimension must be >= 2")
    k, l, c, d = indices
    if not all(0 <= i < n for i in indices):
        raise ValueError("indices out of range")
    pairs = (k == l) * (c == d) + (k == c) * (l == d) + (k == d) * (l == c)
    return pairs / ((n + 2) * (n + 4))


def moment_tensor(n: int) -> np.ndarray:
    """The fourth-moment tensor of the unit ball as an (n, n, n, n) array."""
    d = np.eye(n)
    M = (
        np.einsum("kl,cd->klcd", d, d)
        + np.einsum("kc,ld->klcd", d, d)
        + np.einsum("kd,lc->klcd", d, d)
    )
    return M / ((n + 2) * (n + 4))


def expmap_energy_coefficient(t: RiemannTensor) -> float:
    """Leading ``h^4`` coefficient of the identity-map energy on ``B_h``.

    Contracts ``R_kijl R_cijd`` against the ball moment tensor divided by 36.
    """
    R = t.components
    kappa = moment_tensor(t.dim) / 36.0
    return float(np.einsum("klcd,kijl,cijd->", kappa, R, R))
