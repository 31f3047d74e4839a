"""Curvature norms and elastic-energy scaling of non-Euclidean bodies."""

from .curvature import (
    QuadraticStrain,
    RiemannTensor,
    constant_sectional,
    random_curvature,
    saint_venant_recover,
    strain_field,
    symmetrize_curvature,
    validate_symmetries,
)
from .elastic import (
    Configuration,
    OptimizerOptions,
    align_rigid,
    dist_to_rotations,
    energy_density,
    identity_energy_curve,
    minimize_energy,
    total_energy,
)
from .geometry import (
    NormalMetric,
    ball_moment,
    expmap_energy_coefficient,
    metric_at,
    sqrt_inv_at,
    volume_density,
)
from .norm import NormSolution, curvature_inner, curvature_norm, evaluate_IR, minimize_IR
from .polynomials import PolyVectorBasis
from .quadrature import Quadrature, ball_quadrature, tube_quadrature
from .scaling import (
    ExperimentConfig,
    ScalingReport,
    fit_scaling_exponent,
    lower_bound_check,
    run_ball_scaling,
    run_rod_scaling,
)

__version__ = "0.1.0"
