import json

import pytest

from qpmpairs.dispersion import Axis, SellmeierModel, ThermalTerm
from qpmpairs.formats import default_crystal, packaged_data_path


@pytest.fixture(scope="session")
def crystal():
    return default_crystal()


@pytest.fixture(scope="session")
def model_y(crystal):
    return crystal.models[Axis.Y]


@pytest.fixture(scope="session")
def model_z(crystal):
    return crystal.models[Axis.Z]


@pytest.fixture(scope="session")
def crystal_doc():
    """The bundled crystal as an inline wire document."""
    doc = json.loads(packaged_data_path("ppktp_type2_telecom.json").read_text())
    doc["sellmeier"] = {
        axis: json.loads(packaged_data_path(ref).read_text())
        for axis, ref in doc["sellmeier"].items()
    }
    return doc


def constant_model(n: float, axis: Axis = Axis.Y) -> SellmeierModel:
    """All resonance terms zero: n(lam, T) = n everywhere."""
    return SellmeierModel(
        axis=axis,
        form_id="ratio_poles",
        coefficients={"A": n * n},
        valid_lambda_um=(0.2, 5.0),
        valid_temp_c=(-100.0, 300.0),
    )


def linear_in_lambda_model(a: float, b: float) -> SellmeierModel:
    """n(lam) = a + b*lam, built from a constant base plus a thermal term at dT=1."""
    return SellmeierModel(
        axis=Axis.Y,
        form_id="ratio_poles",
        coefficients={"A": a * a},
        thermal=(ThermalTerm(lambda_power=1, dT_power=1, value=b),),
        reference_temperature_c=25.0,
        valid_lambda_um=(0.2, 5.0),
        valid_temp_c=(-100.0, 300.0),
    )


def quadratic_in_lambda_model(a: float, b: float) -> SellmeierModel:
    """n(lam) = a + b*lam^2 via a thermal term evaluated at dT = 1."""
    return SellmeierModel(
        axis=Axis.Y,
        form_id="ratio_poles",
        coefficients={"A": a * a},
        thermal=(ThermalTerm(lambda_power=2, dT_power=1, value=b),),
        reference_temperature_c=25.0,
        valid_lambda_um=(0.2, 5.0),
        valid_temp_c=(-100.0, 300.0),
    )
