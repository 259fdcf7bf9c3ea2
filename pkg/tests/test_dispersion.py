import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpmpairs.dispersion import (
    Axis,
    OutOfRangeError,
    SellmeierModel,
    ThermalTerm,
    group_index,
    index_derivative,
    refractive_index,
)

from conftest import constant_model, linear_in_lambda_model, quadratic_in_lambda_model


class TestRefractiveIndex:
    def test_thermal_term_vanishes_at_reference_temperature(self, model_z):
        n = refractive_index(model_z, 1.560, model_z.reference_temperature_c)
        assert n == model_z.base_index(1.560)

    def test_y_axis_against_hand_evaluation(self, model_y):
        # Independent arithmetic straight from the published coefficient form.
        lam = 0.780
        n2 = 2.09930 + 0.922683 / (1 - 0.0467695 / lam**2) - 0.0138408 * lam**2
        assert refractive_index(model_y, lam, 25.0) == pytest.approx(
            math.sqrt(n2), abs=1e-14
        )

    def test_y_axis_thermal_against_hand_evaluation(self, model_y):
        lam, dT = 0.780, 15.0
        n2 = 2.09930 + 0.922683 / (1 - 0.0467695 / lam**2) - 0.0138408 * lam**2
        n1_poly = (6.2897 + 6.3061 / lam - 6.0629 / lam**2 + 2.6486 / lam**3) * 1e-6
        n2_poly = (-0.14445 + 2.2244 / lam - 3.5770 / lam**2 + 1.3470 / lam**3) * 1e-8
        expected = math.sqrt(n2) + n1_poly * dT + n2_poly * dT**2
        assert refractive_index(model_y, lam, 40.0) == pytest.approx(expected, abs=1e-14)

    def test_z_axis_against_hand_evaluation(self, model_z):
        lam = 1.560
        n2 = (
            2.12725
            + 1.18431 / (1 - 5.14852e-2 / lam**2)
            + 0.6603 / (1 - 100.00507 / lam**2)
            - 9.68956e-3 * lam**2
        )
        assert refractive_index(model_z, lam, 25.0) == pytest.approx(math.sqrt(n2), abs=1e-14)

    def test_far_infrared_is_out_of_range(self, model_z):
        with pytest.raises(OutOfRangeError):
            refractive_index(model_z, 10.0, 25.0)

    def test_temperature_out_of_range(self, model_y):
        with pytest.raises(OutOfRangeError):
            refractive_index(model_y, 1.56, 500.0)

    def test_nonpositive_wavelength_rejected(self, model_y):
        with pytest.raises(OutOfRangeError):
            refractive_index(model_y, -1.0, 25.0)

    def test_deterministic(self, model_y):
        values = {refractive_index(model_y, 1.234567, 31.25) for _ in range(10)}
        assert len(values) == 1

    @given(
        lam=st.floats(0.45, 3.4),
        temp=st.floats(-40.0, 150.0),
        axis=st.sampled_from(["y", "z"]),
    )
    @settings(max_examples=200, deadline=None)
    def test_index_exceeds_one_inside_validity(self, crystal, lam, temp, axis):
        model = crystal.models[Axis(axis)]
        lo, hi = model.valid_lambda_um
        lam = min(max(lam, lo), hi)
        assert refractive_index(model, lam, temp) > 1.0

    @given(lam=st.floats(0.45, 3.4))
    @settings(max_examples=100, deadline=None)
    def test_thermal_identity_across_wavelengths(self, crystal, lam):
        for model in crystal.models.values():
            lo, hi = model.valid_lambda_um
            lam_c = min(max(lam, lo), hi)
            assert refractive_index(model, lam_c, model.reference_temperature_c) == model.base_index(lam_c)


class TestIndexDerivative:
    def test_constant_model_derivative_is_zero(self):
        model = constant_model(1.5)
        assert abs(index_derivative(model, 1.0, 25.0)) < 1e-12
        assert abs(index_derivative(model, 1.0, 25.0, order=2)) < 1e-12

    def test_quadratic_model_matches_analytic(self):
        a, b = 1.6, 0.05
        model = quadratic_in_lambda_model(a, b)
        for lam in (0.6, 1.0, 1.55, 2.5):
            assert index_derivative(model, lam, 26.0) == pytest.approx(2 * b * lam, abs=1e-9)
            assert index_derivative(model, lam, 26.0, order=2) == pytest.approx(2 * b, abs=1e-7)

    def test_matches_closed_form_derivative_of_pole_form(self, model_y):
        # Analytic oracle: differentiate n^2 = A + B/(1 - C/lam^2) - D lam^2
        # by hand and compare; relative agreement must beat 1e-6.
        A = model_y.coefficients["A"]
        B = model_y.coefficients["B1"]
        C = model_y.coefficients["C1"]
        D = model_y.coefficients["D"]
        for lam in (0.55, 0.78, 1.064, 1.56, 2.5):
            n = model_y.base_index(lam)
            dn2 = -2 * B * C / (lam**3 * (1 - C / lam**2) ** 2) - 2 * D * lam
            analytic = dn2 / (2 * n)
            assert index_derivative(model_y, lam, 25.0) == pytest.approx(analytic, rel=1e-6)

    def test_second_derivative_matches_closed_form(self, model_y):
        # d2n/dlam2 via differentiating the closed-form first derivative once
        # more numerically is not independent; use the synthetic-model identity
        # plus a smoothness cross-check between orders.
        lam, h = 1.2, 1e-3
        d1_left = index_derivative(model_y, lam - h, 25.0)
        d1_right = index_derivative(model_y, lam + h, 25.0)
        d2 = index_derivative(model_y, lam, 25.0, order=2)
        assert d2 == pytest.approx((d1_right - d1_left) / (2 * h), rel=1e-5)

    def test_z_axis_matches_dense_secant(self, model_z):
        # Brute-force slope from a fine tabulation of the index itself.
        lam, temp, h = 1.560, 25.0, 5e-4
        secant = (
            refractive_index(model_z, lam + h, temp) - refractive_index(model_z, lam - h, temp)
        ) / (2 * h)
        d = index_derivative(model_z, lam, temp)
        assert d == pytest.approx(secant, rel=1e-6)

    def test_derivative_consistency_on_grid(self, model_y):
        # Step-insensitivity: the differencing machinery at a 10x coarser step
        # must reproduce the default-step derivative to 1e-6 relative.
        lams = np.linspace(0.5, 3.0, 120)
        for lam in lams:
            fine = index_derivative(model_y, float(lam), 25.0)
            coarse = index_derivative(model_y, float(lam), 25.0, step_um=1e-3)
            assert fine == pytest.approx(coarse, rel=1e-6)

    def test_normal_dispersion_window(self, crystal):
        for model in crystal.models.values():
            for lam in np.linspace(1.5, 1.6, 25):
                assert index_derivative(model, float(lam), 25.0) < 0.0

    def test_edge_proximity_rejected(self, model_z):
        lo, hi = model_z.valid_lambda_um
        with pytest.raises(OutOfRangeError):
            index_derivative(model_z, hi - 1e-6, 25.0)

    def test_bad_order_rejected(self, model_z):
        with pytest.raises(ValueError):
            index_derivative(model_z, 1.5, 25.0, order=3)


class TestGroupIndex:
    def test_constant_model_group_equals_phase(self):
        model = constant_model(1.5)
        assert group_index(model, 1.3, 25.0) == pytest.approx(1.5, abs=1e-12)

    def test_linear_model_slope_cancels(self):
        a, b = 1.7, 0.04
        model = linear_in_lambda_model(a, b)
        for lam in (0.7, 1.2, 2.0):
            assert group_index(model, lam, 26.0) == pytest.approx(a, abs=1e-9)

    def test_epm_group_velocity_statement(self, crystal):
        # At the pump wavelength where extended phase matching holds, the pump
        # group index equals the mean signal/idler group index; near 792 nm the
        # gap is already small at the matched temperature.
        from qpmpairs.phasematching import degenerate_pm_temperature

        temp = degenerate_pm_temperature(crystal, 792.0)
        ng_pump = group_index(crystal.models[Axis.Y], 0.792, temp)
        ng_mean = 0.5 * (
            group_index(crystal.models[Axis.Y], 1.584, temp)
            + group_index(crystal.models[Axis.Z], 1.584, temp)
        )
        assert abs(ng_pump - ng_mean) < 5e-4


class TestModelValidation:
    def test_pole_inside_validity_rejected(self):
        with pytest.raises(ValueError, match="pole"):
            SellmeierModel(
                axis=Axis.Y,
                form_id="ratio_poles",
                coefficients={"A": 2.0, "B1": 0.9, "C1": 1.0},
                valid_lambda_um=(0.5, 2.0),
            )

    def test_unknown_form_rejected(self):
        with pytest.raises(ValueError, match="form_id"):
            SellmeierModel(axis=Axis.Y, form_id="nope", coefficients={"A": 2.0})

    def test_difference_poles_form(self):
        # Same physical pole written in the difference form evaluates sanely.
        model = SellmeierModel(
            axis=Axis.Y,
            form_id="difference_poles",
            coefficients={"A": 3.45018, "B1": 0.04341, "C1": 0.04597},
            valid_lambda_um=(0.5, 3.0),
            valid_temp_c=(-40.0, 150.0),
        )
        lam = 1.0
        expected = math.sqrt(3.45018 + 0.04341 / (lam**2 - 0.04597))
        assert refractive_index(model, lam, 25.0) == pytest.approx(expected, abs=1e-14)

    def test_thermal_term_roundtrip_fields(self):
        term = ThermalTerm(lambda_power=-2, dT_power=1, value=1e-6)
        assert (term.lambda_power, term.dT_power, term.value) == (-2, 1, 1e-6)
