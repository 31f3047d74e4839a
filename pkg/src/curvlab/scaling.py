"""Scaling experiments on shrinking balls and tubes, with exponent fits and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .elastic import (
    DEFAULT_ANSATZ_DEGREE,
    OptimizerOptions,
    identity_energy_curve,
    minimize_energy,
)
from .geometry import NormalMetric
from .norm import curvature_norm
from .quadrature import DEFAULT_DEGREE, tube_quadrature

LOWER_BOUND_FRACTION = 0.01
FIT_POINTS = 3


@dataclass
class ExperimentConfig:
    metric: NormalMetric
    h_list: list[float]
    domain: str = "ball"
    length: float | None = None
    ansatz_degree: int = DEFAULT_ANSATZ_DEGREE
    quadrature_degree: int = DEFAULT_DEGREE
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    output: str | None = None
    seed: int = 0
    identity_rows: bool = False
    fit_points: int = FIT_POINTS
    lower_bound_fraction: float = LOWER_BOUND_FRACTION
    workers: int = 1

    def __post_init__(self):
        self.h_list = [float(h) for h in self.h_list]
        self.validate()

    def validate(self) -> None:
        hs = self.h_list
        if not hs or any(h <= 0 for h in hs):
            raise ValueError("h_list must contain positive radii")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("h_list must be strictly decreasing")
        if self.domain not in ("ball", "tube"):
            raise ValueError(f"unknown domain {self.domain!r}")
        reach = hs[0]
        if self.domain == "tube":
            if not self.length or self.length <= 0:
                raise ValueError("tube domain needs a positive length")
            if self.metric.kind == "truncated":
                raise ValueError("tube domain needs a flat or exact constant-curvature metric")
            reach = math.hypot(self.length / 2, hs[0])
        if reach > self.metric.validity_radius:
            raise ValueError(
                f"domain reaches |x| = {reach:.6g}, beyond validity radius {self.metric.validity_radius:.6g}"
            )

    def to_dict(self) -> dict:
        return {
            "metric": self.metric.to_dict(),
            "h_list": list(self.h_list),
            "domain": self.domain,
            "length": self.length,
            "ansatz_degree": self.ansatz_degree,
            "quadrature_degree": self.quadrature_degree,
            "optimizer": self.optimizer.to_dict(),
            "output": self.output,
            "seed": self.seed,
            "identity_rows": self.identity_rows,
            "fit_points": self.fit_points,
            "lower_bound_fraction": self.lower_bound_fraction,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        metric = NormalMetric.from_dict(d.pop("metric"))
        opt = OptimizerOptions.from_dict(d.pop("optimizer", None))
        known = {f for f in cls.__dataclass_fields__} - {"metric", "optimizer"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(metric=metric, optimizer=opt, **d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ScalingRow:
    h: float
    energy: float
    energy_over_h4: float
    converged: bool
    iterations: int
    grad_norm: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    fitted_exponent: float | None
    reference_norm_sq: float
    config: dict
    bound_constant: float | None = None
    identity_rows: list[tuple[float, float, float]] | None = None

    @property
    def unconverged(self) -> list[ScalingRow]:
        return [r for r in self.rows if not r.converged]

    def to_dict(self) -> dict:
        d = {
            "rows": [r.to_dict() for r in self.rows],
            "fitted_exponent": self.fitted_exponent,
            "reference_norm_sq": self.reference_norm_sq,
            "bound_constant": self.bound_constant,
            "config": self.config,
        }
        if self.identity_rows is not None:
            d["identity_rows"] = [
                {"h": h, "energy": e, "energy_over_h4": r} for h, e, r in self.identity_rows
            ]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "energy", "energy_over_h4", "converged", "iterations", "grad_norm"])
        for r in self.rows:
            w.writerow([repr(r.h), repr(r.energy), repr(r.energy_over_h4), r.converged, r.iterations, repr(r.grad_norm)])
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingReport":
        ident = d.get("identity_rows")
        return cls(
            rows=[ScalingRow(**r) for r in d["rows"]],
            fitted_exponent=d.get("fitted_exponent"),
            reference_norm_sq=d["reference_norm_sq"],
            config=d.get("config", {}),
            bound_constant=d.get("bound_constant"),
            identity_rows=None if ident is None else [(r["h"], r["energy"], r["energy_over_h4"]) for r in ident],
        )


def fit_scaling_exponent(rows) -> float | None:
    """Least-squares slope of log E against log h; ``None`` with fewer than two usable rows."""
    pts = [(float(h), float(e)) for h, e in rows if e > 0 and h > 0]
    if len(pts) < 2:
        return None
    h, e = np.array(pts).T
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)


def lower_bound_check(report: ScalingReport, fraction: float = LOWER_BOUND_FRACTION) -> bool:
    """Smallest ``E / h^4`` is at least ``fraction * |R|^2`` (vacuous for zero curvature)."""
    if report.reference_norm_sq <= 0:
        return True
    return min(r.energy_over_h4 for r in report.rows) >= fraction * report.reference_norm_sq


def _solve_row(args) -> ScalingRow:
    cfg, h = args
    opts = replace(cfg.optimizer, quadrature_degree=cfg.quadrature_degree, seed=cfg.seed)
    quad = None
    if cfg.domain == "tube":
        quad = tube_quadrature(cfg.metric.dim, cfg.length, h, cfg.quadrature_degree)
    res = minimize_energy(cfg.metric, h, cfg.ansatz_degree, opts, quadrature=quad)
    return ScalingRow(res.h, res.energy, res.energy_over_h4, res.converged, res.iterations, res.grad_norm)


def _run(cfg: ExperimentConfig) -> ScalingReport:
    jobs = [(cfg, h) for h in cfg.h_list]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(_solve_row, jobs))
    else:
        rows = [_solve_row(j) for j in jobs]

    curvature = cfg.metric.curvature()
    ref = 0.0 if curvature.is_zero() else curvature_norm(curvature) ** 2
    beta = None
    if ref > 0:
        tail = rows[-cfg.fit_points :]
        beta = fit_scaling_exponent([(r.h, r.energy) for r in tail])
    bound = 2.0 * max(r.energy_over_h4 for r in rows)
    ident = None
    if cfg.identity_rows and cfg.domain == "ball":
        ident = identity_energy_curve(cfg.metric, cfg.h_list, cfg.quadrature_degree)
    return ScalingReport(rows, beta, ref, cfg.to_dict(), bound, ident)


def run_ball_scaling(cfg: ExperimentConfig) -> ScalingReport:
    if cfg.domain != "ball":
        raise ValueError("run_ball_scaling needs domain 'ball'")
    return _run(cfg)


def run_rod_scaling(cfg: ExperimentConfig) -> ScalingReport:
    """Tube ``{|x1| <= L/2, |x_perp| <= h}`` around the geodesic x1-axis."""
    if cfg.domain != "tube":
        raise ValueError("run_rod_scaling needs domain 'tube'")
    return _run(cfg)
