import math

import numpy as np
import pytest

from potlearn.worthfield import GaussianComponent, WorthField, generate_scenario


def single_component_field(mean=(20.0, 20.0), var=4.0, grid=40):
    comp = GaussianComponent(1.0, np.asarray(mean), var * np.eye(2))
    return WorthField([comp], grid)


class TestEvaluate:
    def test_density_at_the_mean_of_unit_covariance(self):
        field = WorthField([GaussianComponent(1.0, [5.0, 5.0], np.eye(2))], 10)
        assert field.evaluate((5.0, 5.0)) == pytest.approx(1 / (2 * math.pi), rel=1e-12)

    def test_far_tail_vanishes(self):
        field = WorthField([GaussianComponent(1.0, [5.0, 5.0], np.eye(2))], 40)
        assert field.evaluate((35.5, 35.5)) < 1e-20

    def test_two_equal_components_double_at_equidistant_point(self):
        comps = [
            GaussianComponent(0.5, [10.0, 20.0], 4 * np.eye(2)),
            GaussianComponent(0.5, [30.0, 20.0], 4 * np.eye(2)),
        ]
        field = WorthField(comps, 40)
        midpoint = (20.0, 20.0)
        single = 0.5 * math.exp(-0.5 * 100 / 4) / (2 * math.pi * 4)
        assert field.evaluate(midpoint) == pytest.approx(2 * single, rel=1e-9)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            WorthField([GaussianComponent(0.5, [1.0, 1.0], np.eye(2))], 8)

    def test_raster_matches_pointwise_evaluation(self):
        field = single_component_field(grid=12, mean=(6.0, 4.0))
        raster = field.raster()
        assert raster[3, 7] == pytest.approx(field.evaluate((3.5, 7.5)), rel=1e-12)


class TestGradient:
    def test_nearly_constant_field_has_vanishing_gradient(self):
        field = WorthField(
            [GaussianComponent(1.0, [20.0, 20.0], 1e12 * np.eye(2))], 40
        )
        assert field.local_gradient((5.5, 30.5)) < 1e-12

    def test_stationary_at_an_isolated_mean(self):
        field = single_component_field(mean=(20.5, 20.5), var=4.0)
        assert field.local_gradient((20.5, 20.5)) <= 1e-3

    def test_matches_analytic_slope_away_from_the_peak(self):
        var = 16.0
        field = single_component_field(mean=(20.5, 20.5), var=var)
        point = (24.5, 20.5)  # offset of 4 along x only
        dx = 4.0
        f = field.evaluate(point)
        analytic = f * dx / var  # |grad| of an isotropic Gaussian along its axis
        measured = field.local_gradient(point)
        assert measured == pytest.approx(analytic, rel=0.05)

    def test_one_sided_at_the_boundary(self):
        field = single_component_field(mean=(2.0, 2.0), var=2.0, grid=8)
        assert field.local_gradient((0.5, 0.5)) > 0


class TestComponentValidation:
    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(ValueError):
            GaussianComponent(1.0, [0.0, 0.0], np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_non_positive_definite_rejected(self):
        with pytest.raises(ValueError):
            GaussianComponent(1.0, [0.0, 0.0], np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            GaussianComponent(-0.1, [0.0, 0.0], np.eye(2))


class TestGenerateScenario:
    def test_same_seed_reproduces_the_field(self):
        a = generate_scenario(123, 40)
        b = generate_scenario(123, 40)
        assert a.to_dict() == b.to_dict()

    def test_different_seeds_differ(self):
        assert generate_scenario(1, 40).to_dict() != generate_scenario(2, 40).to_dict()

    def test_invariants_hold_over_a_thousand_seeds(self):
        for seed in range(1000):
            field = generate_scenario(seed, 24)
            assert 1 <= field.n_components <= 5
            total = sum(c.weight for c in field.components)
            assert abs(total - 1.0) <= 1e-9
            for c in field.components:
                assert np.linalg.det(c.cov) > 0
                assert (c.mean >= 0.1 * 24).all() and (c.mean <= 0.9 * 24).all()

    def test_degenerate_component_range(self):
        field = generate_scenario(7, 16, (3, 3))
        assert field.n_components == 3

    def test_minimum_grid_enforced(self):
        with pytest.raises(ValueError):
            generate_scenario(0, 7)

    def test_mass_stays_near_unity(self):
        # interior-margin rule keeps boundary leakage small
        for seed in range(50):
            field = generate_scenario(seed, 40)
            mass = field.total_mass()
            assert 0.5 <= mass <= 1.05
            assert (field.raster() >= 0).all()

    def test_round_trip_serialization(self):
        field = generate_scenario(9, 16)
        clone = WorthField.from_dict(field.to_dict())
        assert np.allclose(clone.raster(), field.raster(), atol=0)
