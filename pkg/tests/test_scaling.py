import json

import numpy as np
import pytest

from curvlab.curvature import constant_sectional
from curvlab.elastic import OptimizerOptions, identity_energy_curve
from curvlab.geometry import NormalMetric
from curvlab.scaling import (
    ExperimentConfig,
    ScalingReport,
    ScalingRow,
    fit_scaling_exponent,
    lower_bound_check,
    run_ball_scaling,
    run_rod_scaling,
)

SPHERE_2D_MIN = 1 / 192


@pytest.fixture(scope="module")
def sphere_report():
    cfg = ExperimentConfig(NormalMetric.exact(2, 1.0), [0.4, 0.2, 0.1, 0.05], identity_rows=True)
    return run_ball_scaling(cfg)


class TestFit:
    def test_quartic(self):
        assert fit_scaling_exponent([(h, h**4) for h in (0.4, 0.2, 0.1)]) == pytest.approx(4.0, abs=1e-12)

    def test_quadratic(self):
        assert fit_scaling_exponent([(h, 3 * h**2) for h in (0.4, 0.2, 0.1)]) == pytest.approx(2.0, abs=1e-12)

    def test_perturbed(self):
        beta = fit_scaling_exponent([(h, h**4 * (1 + 0.1 * h)) for h in (0.4, 0.2, 0.1)])
        assert 3.9 <= beta <= 4.1

    def test_non_positive_excluded(self):
        assert fit_scaling_exponent([(0.4, 0.0), (0.2, 0.2**3), (0.1, 0.1**3)]) == pytest.approx(3.0)
        assert fit_scaling_exponent([(0.4, 0.0), (0.2, 1e-3)]) is None
        assert fit_scaling_exponent([]) is None


def _report(values, ref):
    rows = [ScalingRow(h, v * h**4, v, True, 1, 0.0) for h, v in zip((0.2, 0.1), values)]
    return ScalingReport(rows, 4.0, ref, {})


class TestLowerBound:
    def test_flat_vacuous(self):
        assert lower_bound_check(_report([0.0, 0.0], 0.0))

    def test_zeroed_energies_fail(self):
        assert not lower_bound_check(_report([0.0, 0.0], SPHERE_2D_MIN))

    def test_threshold(self):
        assert lower_bound_check(_report([0.5, 0.01], 1.0))
        assert not lower_bound_check(_report([0.5, 0.009], 1.0))
        assert lower_bound_check(_report([0.5, 0.009], 1.0), fraction=0.005)

    def test_sphere(self, sphere_report):
        assert lower_bound_check(sphere_report)


class TestBallScaling:
    def test_sphere(self, sphere_report):
        r = sphere_report
        assert not r.unconverged
        assert 3.85 <= r.fitted_exponent <= 4.15
        assert r.reference_norm_sq == pytest.approx(SPHERE_2D_MIN, rel=1e-12)
        assert abs(r.rows[-1].energy_over_h4 / r.reference_norm_sq - 1) <= 0.05
        devs = [abs(row.energy_over_h4 - r.reference_norm_sq) for row in r.rows]
        assert all(b < a for a, b in zip(devs, devs[1:]))

    def test_bound_constant(self, sphere_report):
        C = sphere_report.bound_constant
        assert np.isfinite(C)
        assert all(row.energy <= C * row.h**4 for row in sphere_report.rows)

    def test_identity_rows(self, sphere_report):
        expected = identity_energy_curve(NormalMetric.exact(2, 1.0), [0.4, 0.2, 0.1, 0.05])
        for got, ref in zip(sphere_report.identity_rows, expected):
            assert np.abs(np.subtract(got, ref)).max() <= 1e-12

    def test_hyperbolic(self):
        m = NormalMetric.exact(2, -1.0, validity_radius=1.0)
        r = run_ball_scaling(ExperimentConfig(m, [0.4, 0.2, 0.1, 0.05]))
        assert 3.85 <= r.fitted_exponent <= 4.15
        assert abs(r.rows[-1].energy_over_h4 / r.reference_norm_sq - 1) <= 0.05

    def test_flat(self):
        r = run_ball_scaling(ExperimentConfig(NormalMetric.flat(3), [0.2, 0.1], ansatz_degree=3))
        assert all(row.energy <= 1e-10 for row in r.rows)
        assert r.fitted_exponent is None and r.reference_norm_sq == 0.0
        assert lower_bound_check(r)

    def test_deterministic(self):
        cfg = ExperimentConfig(NormalMetric.exact(2, 1.0), [0.3, 0.15], ansatz_degree=4, seed=3)
        assert run_ball_scaling(cfg).to_json() == run_ball_scaling(cfg).to_json()

    def test_workers_match_serial(self):
        cfg = ExperimentConfig(NormalMetric.exact(2, 1.0), [0.3, 0.15], ansatz_degree=3)
        par = ExperimentConfig.from_dict({**cfg.to_dict(), "workers": 2})
        assert run_ball_scaling(par).to_json() == run_ball_scaling(cfg).to_json()

    def test_wrong_domain(self):
        cfg = ExperimentConfig(NormalMetric.flat(3), [0.1], domain="tube", length=0.5)
        with pytest.raises(ValueError):
            run_ball_scaling(cfg)


class TestRodScaling:
    def test_flat_tube(self):
        cfg = ExperimentConfig(NormalMetric.flat(3), [0.1, 0.05], domain="tube", length=0.5, ansatz_degree=3)
        r = run_rod_scaling(cfg)
        assert all(row.energy <= 1e-10 for row in r.rows)
        assert r.fitted_exponent is None

    def test_wrong_domain(self):
        with pytest.raises(ValueError):
            run_rod_scaling(ExperimentConfig(NormalMetric.flat(3), [0.1]))


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(
            NormalMetric.exact(3, 1.0), [0.1, 0.05], domain="tube", length=0.5, optimizer=OptimizerOptions(max_iters=50)
        )
        back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.to_dict() == cfg.to_dict()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(h_list=[0.1, 0.2]),
            dict(h_list=[0.1, 0.1]),
            dict(h_list=[0.1, -0.05]),
            dict(h_list=[]),
            dict(h_list=[2.0]),
            dict(h_list=[0.1], domain="disk"),
            dict(h_list=[0.1], domain="tube"),
            dict(h_list=[0.1], domain="tube", length=3.2),
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            ExperimentConfig(NormalMetric.exact(3, 1.0), **kwargs)

    def test_truncated_tube_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(NormalMetric.truncated(constant_sectional(3, 1.0)), [0.1], domain="tube", length=0.2)

    def test_unknown_key(self):
        d = ExperimentConfig(NormalMetric.flat(2), [0.1]).to_dict()
        d["colour"] = "red"
        with pytest.raises(ValueError):
            ExperimentConfig.from_dict(d)


class TestReport:
    def test_json_round_trip(self, sphere_report):
        back = ScalingReport.from_dict(json.loads(sphere_report.to_json()))
        assert back.to_json() == sphere_report.to_json()

    def test_rows_ordered(self, sphere_report):
        hs = [r.h for r in sphere_report.rows]
        assert hs == sorted(hs, reverse=True)

    def test_csv(self, sphere_report):
        lines = sphere_report.to_csv().splitlines()
        assert lines[0].startswith("h,energy,energy_over_h4")
        assert len(lines) == 1 + len(sphere_report.rows)
