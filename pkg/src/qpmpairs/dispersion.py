"""Temperature-dependent Sellmeier dispersion for nonlinear-crystal axes.

Refractive indices are evaluated from coefficient *data*, not hard-coded
formulas: a :class:`SellmeierModel` carries the published coefficients, a
polynomial thermal correction, and explicit validity windows.  Two common
algebraic forms are supported:

``ratio_poles``
    n^2 = A + sum_k B_k / (1 - C_k / lam^2) - D * lam^2
    (the form used by Fan et al., Appl. Opt. 26, 2390 (1987);
    Fradkin et al., Appl. Phys. Lett. 74, 914 (1999); and
    Koenig & Wong, Appl. Phys. Lett. 84, 1644 (2004) for KTP)

``difference_poles``
    n^2 = A + sum_k B_k / (lam^2 - C_k) - D * lam^2
    (the form used by Kato & Takaoka, Appl. Opt. 41, 5040 (2002))

The thermal correction is a sum of value * lam^p * dT^q terms relative to a
reference temperature, which covers the Emanueli & Arie form
(Appl. Opt. 42, 6661 (2003)): dn = n1(lam) dT + n2(lam) dT^2 with n1, n2
cubic in 1/lam.

Wavelengths are vacuum micrometers, temperatures degrees Celsius.  Queries
outside a model's declared validity raise :class:`OutOfRangeError` rather
than silently extrapolating: Sellmeier resonance poles make extrapolation
genuinely dangerous.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

__all__ = [
    "Axis",
    "OutOfRangeError",
    "ThermalTerm",
    "SellmeierModel",
    "refractive_index",
    "index_derivative",
    "group_index",
]

# Central-difference step (um) and one Richardson level; far finer than any
# tolerance this package needs, coarse enough to stay away from roundoff.
DERIVATIVE_STEP_UM = 1e-4


class Axis(str, enum.Enum):
    """Crystal principal axis a polarization is aligned with."""

    Y = "y"
    Z = "z"


class OutOfRangeError(ValueError):
    """Query lies outside a model's declared validity window."""


@dataclass(frozen=True)
class ThermalTerm:
    """One term of the thermal correction: value * lam^lambda_power * dT^dT_power."""

    lambda_power: int
    dT_power: int
    value: float


_KNOWN_FORMS = ("ratio_poles", "difference_poles")


@dataclass(frozen=True)
class SellmeierModel:
    """Dispersion of one crystal axis: base Sellmeier plus thermal correction.

    Attributes:
        axis: Which principal axis the model describes.
        form_id: Algebraic form of the base equation (see module docstring).
        coefficients: Name -> value map.  Recognized names: ``A``, ``B1``,
            ``C1``, ``B2``, ``C2``, ``D``; missing names default to zero.
        thermal: Terms of the polynomial correction relative to
            ``reference_temperature_c``.
        valid_lambda_um: Inclusive wavelength validity window (um).
        valid_temp_c: Inclusive temperature validity window (deg C).
        source_citation: Free-text provenance of the numbers.
    """

    axis: Axis
    form_id: str
    coefficients: Mapping[str, float]
    thermal: tuple[ThermalTerm, ...] = ()
    reference_temperature_c: float = 25.0
    valid_lambda_um: tuple[float, float] = (0.4, 1.6)
    valid_temp_c: tuple[float, float] = (-40.0, 150.0)
    source_citation: str = ""

    def __post_init__(self) -> None:
        if self.form_id not in _KNOWN_FORMS:
            raise ValueError(f"unknown Sellmeier form_id: {self.form_id!r}")
        lo, hi = self.valid_lambda_um
        if not (0 < lo < hi):
            raise ValueError("valid_lambda_um must be ordered and positive")
        tlo, thi = self.valid_temp_c
        if not tlo < thi:
            raise ValueError("valid_temp_c must be ordered")
        for lam_pole in self._pole_positions():
            if lo <= lam_pole <= hi:
                raise ValueError(
                    f"Sellmeier pole at {lam_pole:.4f} um lies inside the "
                    f"declared validity window [{lo}, {hi}] um"
                )

    def _coef(self, name: str) -> float:
        return float(self.coefficients.get(name, 0.0))

    def _pole_positions(self) -> Iterable[float]:
        # Both supported forms have resonances at lam = sqrt(C_k) for B_k != 0.
        for b, c in (("B1", "C1"), ("B2", "C2")):
            if self._coef(b) != 0.0 and self._coef(c) > 0.0:
                yield math.sqrt(self._coef(c))

    def base_index(self, wavelength_um: float) -> float:
        """Bare Sellmeier index at the reference temperature, no range check."""
        lam2 = wavelength_um * wavelength_um
        n2 = self._coef("A") - self._coef("D") * lam2
        if self.form_id == "ratio_poles":
            for b, c in (("B1", "C1"), ("B2", "C2")):
                bv = self._coef(b)
                if bv != 0.0:
                    n2 += bv / (1.0 - self._coef(c) / lam2)
        else:  # difference_poles
            for b, c in (("B1", "C1"), ("B2", "C2")):
                bv = self._coef(b)
                if bv != 0.0:
                    n2 += bv / (lam2 - self._coef(c))
        if n2 <= 0.0:
            raise OutOfRangeError(
                f"n^2 = {n2:.4g} <= 0 at {wavelength_um} um; outside physical range"
            )
        return math.sqrt(n2)

    def thermal_correction(self, wavelength_um: float, temperature_c: float) -> float:
        """dn(lam, T) relative to the reference temperature, no range check."""
        dT = temperature_c - self.reference_temperature_c
        if dT == 0.0 or not self.thermal:
            return 0.0
        dn = 0.0
        for term in self.thermal:
            dn += term.value * wavelength_um**term.lambda_power * dT**term.dT_power
        return dn

    def check_range(self, wavelength_um: float, temperature_c: float) -> None:
        """Raise OutOfRangeError unless the query is inside both windows."""
        lo, hi = self.valid_lambda_um
        if not (lo <= wavelength_um <= hi):
            raise OutOfRangeError(
                f"wavelength {wavelength_um} um outside validity [{lo}, {hi}] um "
                f"for {self.axis.value}-axis model"
            )
        tlo, thi = self.valid_temp_c
        if not (tlo <= temperature_c <= thi):
            raise OutOfRangeError(
                f"temperature {temperature_c} C outside validity [{tlo}, {thi}] C "
                f"for {self.axis.value}-axis model"
            )


def refractive_index(model: SellmeierModel, wavelength_um: float, temperature_c: float) -> float:
    """Refractive index n(lam, T) = base Sellmeier + thermal correction.

    Args:
        model: Axis dispersion model.
        wavelength_um: Vacuum wavelength in micrometers (> 0).
        temperature_c: Crystal temperature in degrees Celsius.

    Returns:
        The dimensionless index; deterministic in its inputs.

    Raises:
        OutOfRangeError: If the query leaves the model's validity windows.
    """
    if wavelength_um <= 0.0:
        raise OutOfRangeError(f"wavelength must be positive, got {wavelength_um}")
    model.check_range(wavelength_um, temperature_c)
    return model.base_index(wavelength_um) + model.thermal_correction(
        wavelength_um, temperature_c
    )


def index_derivative(
    model: SellmeierModel,
    wavelength_um: float,
    temperature_c: float,
    order: int = 1,
    step_um: float = DERIVATIVE_STEP_UM,
) -> float:
    """Wavelength derivative of the index by Richardson-extrapolated differences.

    Central differences at steps h and h/2 combined to fourth order; the
    query must sit at least ``step_um`` inside the wavelength validity
    window.

    Args:
        order: 1 for dn/dlam (um^-1), 2 for d2n/dlam2 (um^-2).

    Raises:
        OutOfRangeError: If the stencil would leave the validity window.
        ValueError: For unsupported orders.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    lo, hi = model.valid_lambda_um
    if not (lo + step_um <= wavelength_um <= hi - step_um):
        raise OutOfRangeError(
            f"wavelength {wavelength_um} um too close to validity edge for a "
            f"{step_um} um difference stencil"
        )

    def n(lam: float) -> float:
        model.check_range(lam, temperature_c)
        return model.base_index(lam) + model.thermal_correction(lam, temperature_c)

    x = wavelength_um
    if order == 1:
        def d(h: float) -> float:
            return (n(x + h) - n(x - h)) / (2.0 * h)
    else:
        def d(h: float) -> float:
            return (n(x + h) - 2.0 * n(x) + n(x - h)) / (h * h)

    coarse = d(step_um)
    fine = d(step_um / 2.0)
    return (4.0 * fine - coarse) / 3.0


def group_index(model: SellmeierModel, wavelength_um: float, temperature_c: float) -> float:
    """Group index n_g = n - lam * dn/dlam (dimensionless)."""
    n = refractive_index(model, wavelength_um, temperature_c)
    return n - wavelength_um * index_derivative(model, wavelength_um, temperature_c, order=1)
