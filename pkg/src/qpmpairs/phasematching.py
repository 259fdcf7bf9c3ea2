"""Quasi-phase-matching solvers and tuning curves for collinear type-II SPDC/SHG.

The central quantity is the first-order QPM mismatch

    Delta k = 2 pi [ n_p(lam_p)/lam_p - n_s(lam_s)/lam_s - n_i(lam_i)/lam_i
                     + 1/Lambda ]        (rad/um, lam in um)

with each index evaluated on the axis the corresponding wave is polarized
along and Lambda the poling period.  Degenerate operation means
lam_s = lam_i = 2 lam_p exactly.  On top of this the module provides:

- the degenerate phase-match temperature (root of Delta k over T),
- the phase-match-temperature tuning curve vs fundamental wavelength,
- the extended-phase-match pump, where the tuning curve is stationary
  because the pump group index equals the mean signal/idler group index,
- normalized sinc^2 SHG / SPDC spectra and their widths.

Root finding follows a fixed recipe: coarse bracket scan (1 C in
temperature, 0.5 nm in pump wavelength), then Brent refinement well below
the 1e-3 tolerances, then a residual certificate check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .dispersion import Axis, OutOfRangeError, SellmeierModel, group_index, refractive_index

__all__ = [
    "PhaseMatchError",
    "EnergyConservationError",
    "NoBracketError",
    "NoSolutionError",
    "EmptyCurveError",
    "CrystalSpec",
    "PhaseMatchPoint",
    "TuningCurve",
    "FwhmResult",
    "phase_mismatch",
    "degenerate_pm_temperature",
    "pm_temperature_curve",
    "find_epm_pump",
    "epm_diagnostics",
    "shg_power_curve",
    "spdc_spectrum",
    "spdc_bandwidth_fwhm",
    "fwhm_of_function",
]

# Energy-conservation slack on 1/lam_p - 1/lam_s - 1/lam_i, in nm^-1.
ENERGY_TOL_NM = 1e-9
# Coarse bracket scans before Brent refinement.
TEMP_SCAN_STEP_C = 1.0
PUMP_SCAN_STEP_NM = 0.5
# Brent tolerances (an order below the contract's 1e-3).
TEMP_XTOL_C = 1e-4
PUMP_XTOL_NM = 1e-4
# Residual certificates for returned roots.
MISMATCH_TOL_RAD_PER_UM = 1e-6
GROUP_MISMATCH_TOL = 1e-6


class PhaseMatchError(Exception):
    """Base class for solver failures (distinct from input validation)."""


class EnergyConservationError(ValueError):
    """Signal/idler/pump wavelengths do not satisfy 1/p = 1/s + 1/i."""


class NoBracketError(PhaseMatchError):
    """No phase-match temperature sign change inside the temperature bounds."""


class NoSolutionError(PhaseMatchError):
    """No extended-phase-match pump inside the scanned wavelength window."""


class EmptyCurveError(PhaseMatchError):
    """Every requested curve point failed to solve."""


@dataclass(frozen=True)
class CrystalSpec:
    """Geometry, poling, and per-axis dispersion of one poled crystal."""

    length_mm: float
    poling_period_um: float
    pump_axis: Axis
    signal_axis: Axis
    idler_axis: Axis
    models: Mapping[Axis, SellmeierModel]
    temperature_bounds_c: tuple[float, float] = (-10.0, 70.0)

    def __post_init__(self) -> None:
        if self.length_mm <= 0:
            raise ValueError("crystal length must be positive")
        if self.poling_period_um <= 0:
            raise ValueError("poling period must be positive")
        lo, hi = self.temperature_bounds_c
        if not lo < hi:
            raise ValueError("temperature_bounds_c must be ordered")
        for ax in (self.pump_axis, self.signal_axis, self.idler_axis):
            if ax not in self.models:
                raise ValueError(f"missing Sellmeier model for axis {ax.value!r}")

    @property
    def length_um(self) -> float:
        return self.length_mm * 1000.0

    def index(self, axis: Axis, wavelength_nm: float, temperature_c: float) -> float:
        return refractive_index(self.models[axis], wavelength_nm * 1e-3, temperature_c)

    def group_index(self, axis: Axis, wavelength_nm: float, temperature_c: float) -> float:
        return group_index(self.models[axis], wavelength_nm * 1e-3, temperature_c)


@dataclass(frozen=True)
class PhaseMatchPoint:
    """A solved operating point with its mismatch residual certificate."""

    pump_wavelength_nm: float
    temperature_c: float
    residual_mismatch_rad_per_mm: float


@dataclass(frozen=True)
class TuningCurve:
    """A sampled 1-D curve with labeled, unit-tagged axes.

    ``skipped`` lists abscissa values that were requested but had no
    solution and were therefore omitted.
    """

    abscissa: np.ndarray
    ordinate: np.ndarray
    abscissa_label: str
    ordinate_label: str
    abscissa_unit: str
    ordinate_unit: str
    skipped: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        a = np.asarray(self.abscissa, dtype=float)
        o = np.asarray(self.ordinate, dtype=float)
        if a.shape != o.shape or a.ndim != 1:
            raise ValueError("abscissa and ordinate must be equal-length 1-D arrays")
        if a.size >= 2 and not np.all(np.diff(a) > 0):
            raise ValueError("abscissa must be strictly increasing")
        if not np.all(np.isfinite(o)) or not np.all(np.isfinite(a)):
            raise ValueError("curve values must be finite")
        object.__setattr__(self, "abscissa", a)
        object.__setattr__(self, "ordinate", o)
        a.flags.writeable = False
        o.flags.writeable = False


def phase_mismatch(
    crystal: CrystalSpec,
    pump_nm: float,
    signal_nm: float,
    idler_nm: float,
    temperature_c: float,
) -> float:
    """First-order QPM mismatch Delta k in rad/um.

    Sign convention: the grating term enters as +2 pi / Lambda.

    Raises:
        EnergyConservationError: If 1/lam_p != 1/lam_s + 1/lam_i within 1e-9 nm^-1.
        OutOfRangeError: If any wavelength/temperature leaves model validity.
    """
    if pump_nm <= 0 or signal_nm <= 0 or idler_nm <= 0:
        raise EnergyConservationError("wavelengths must be positive")
    defect = 1.0 / pump_nm - 1.0 / signal_nm - 1.0 / idler_nm
    if abs(defect) > ENERGY_TOL_NM:
        raise EnergyConservationError(
            f"1/pump - 1/signal - 1/idler = {defect:.3e} nm^-1 exceeds {ENERGY_TOL_NM} nm^-1"
        )
    lp, ls, li = pump_nm * 1e-3, signal_nm * 1e-3, idler_nm * 1e-3
    np_ = crystal.index(crystal.pump_axis, pump_nm, temperature_c)
    ns = crystal.index(crystal.signal_axis, signal_nm, temperature_c)
    ni = crystal.index(crystal.idler_axis, idler_nm, temperature_c)
    return 2.0 * math.pi * (np_ / lp - ns / ls - ni / li + 1.0 / crystal.poling_period_um)


def _degenerate_mismatch(crystal: CrystalSpec, pump_nm: float, temperature_c: float) -> float:
    return phase_mismatch(crystal, pump_nm, 2.0 * pump_nm, 2.0 * pump_nm, temperature_c)


def degenerate_pm_temperature(crystal: CrystalSpec, pump_nm: float) -> float:
    """Temperature where the degenerate mismatch vanishes, to better than 1e-3 C.

    Brackets by a 1 C scan across the crystal's temperature bounds, then
    refines with Brent's method and re-checks the residual.

    Raises:
        NoBracketError: If Delta k(T) never changes sign inside the bounds.
    """
    lo, hi = crystal.temperature_bounds_c

    def f(t: float) -> float:
        return _degenerate_mismatch(crystal, pump_nm, t)

    t_prev = lo
    v_prev = f(lo)
    if v_prev == 0.0:
        return lo
    t = lo
    while t < hi:
        t = min(t + TEMP_SCAN_STEP_C, hi)
        v = f(t)
        if v == 0.0:
            return t
        if v_prev * v < 0.0:
            root = float(brentq(f, t_prev, t, xtol=TEMP_XTOL_C))
            residual = f(root)
            if abs(residual) > MISMATCH_TOL_RAD_PER_UM:
                raise NoBracketError(
                    f"root certificate failed: |Delta k({root:.4f} C)| = {abs(residual):.2e} rad/um"
                )
            return root
        t_prev, v_prev = t, v
    raise NoBracketError(
        f"no phase-match temperature for pump {pump_nm} nm inside [{lo}, {hi}] C"
    )


def pm_temperature_curve(
    crystal: CrystalSpec,
    fundamental_start_nm: float,
    fundamental_stop_nm: float,
    step_nm: float,
) -> TuningCurve:
    """Phase-match temperature vs fundamental (second-harmonic) wavelength.

    The abscissa is the degenerate signal/idler wavelength 2*lam_p; each
    ordinate is ``degenerate_pm_temperature`` at the corresponding pump.
    Wavelengths with no in-bounds solution are omitted and listed in
    ``skipped``.

    Raises:
        ValueError: For an unordered range or non-positive step.
        EmptyCurveError: If no point solves (including a zero-length range).
    """
    if step_nm <= 0:
        raise ValueError("step_nm must be positive")
    if fundamental_stop_nm < fundamental_start_nm:
        raise ValueError("fundamental range must be ordered")
    if fundamental_stop_nm == fundamental_start_nm:
        raise EmptyCurveError("zero-length wavelength range")
    grid = np.arange(fundamental_start_nm, fundamental_stop_nm + step_nm * 0.5, step_nm)
    lams: list[float] = []
    temps: list[float] = []
    skipped: list[float] = []
    for lam in grid:
        try:
            temps.append(degenerate_pm_temperature(crystal, float(lam) / 2.0))
            lams.append(float(lam))
        except (NoBracketError, OutOfRangeError):
            skipped.append(float(lam))
    if not lams:
        raise EmptyCurveError(
            f"no phase-match temperature anywhere in "
            f"[{fundamental_start_nm}, {fundamental_stop_nm}] nm"
        )
    return TuningCurve(
        abscissa=np.array(lams),
        ordinate=np.array(temps),
        abscissa_label="fundamental_wavelength",
        ordinate_label="phase_match_temperature",
        abscissa_unit="nm",
        ordinate_unit="C",
        skipped=tuple(skipped),
    )


def _group_velocity_mismatch(crystal: CrystalSpec, pump_nm: float, temperature_c: float) -> float:
    """n_g(pump) - mean of signal/idler group indices, degenerate collinear."""
    ng_p = crystal.group_index(crystal.pump_axis, pump_nm, temperature_c)
    ng_s = crystal.group_index(crystal.signal_axis, 2.0 * pump_nm, temperature_c)
    ng_i = crystal.group_index(crystal.idler_axis, 2.0 * pump_nm, temperature_c)
    return ng_p - 0.5 * (ng_s + ng_i)


def find_epm_pump(
    crystal: CrystalSpec,
    pump_scan_nm: tuple[float, float] = (750.0, 850.0),
) -> PhaseMatchPoint:
    """Pump wavelength where Delta k = 0 and its frequency derivative vanish.

    Nested root finding: the outer root is on the group-velocity condition
    n_g,p(lam_p) = [n_g,s(2 lam_p) + n_g,i(2 lam_p)] / 2, with the inner
    temperature root keeping Delta k = 0 along the way.  The outer scan
    steps 0.5 nm across ``pump_scan_nm`` and only considers pumps whose
    inner solve succeeds.

    Raises:
        NoSolutionError: If the condition never changes sign in the window.
    """
    lo, hi = pump_scan_nm
    if not lo < hi:
        raise ValueError("pump_scan_nm must be ordered")

    def g(pump_nm: float) -> float:
        t = degenerate_pm_temperature(crystal, pump_nm)
        return _group_velocity_mismatch(crystal, pump_nm, t)

    grid = np.arange(lo, hi + PUMP_SCAN_STEP_NM * 0.5, PUMP_SCAN_STEP_NM)
    prev_lam: float | None = None
    prev_val: float | None = None
    for lam in grid:
        try:
            val = g(float(lam))
        except (NoBracketError, OutOfRangeError):
            prev_lam = prev_val = None
            continue
        if prev_val is not None and prev_val * val <= 0.0:
            pump = float(brentq(g, prev_lam, float(lam), xtol=PUMP_XTOL_NM))
            temp = degenerate_pm_temperature(crystal, pump)
            residual = _degenerate_mismatch(crystal, pump, temp)
            gv = _group_velocity_mismatch(crystal, pump, temp)
            if abs(residual) > MISMATCH_TOL_RAD_PER_UM or abs(gv) > GROUP_MISMATCH_TOL:
                raise NoSolutionError(
                    f"certificate failed at {pump:.3f} nm: |Delta k| = {abs(residual):.2e} "
                    f"rad/um, group mismatch {abs(gv):.2e}"
                )
            return PhaseMatchPoint(
                pump_wavelength_nm=pump,
                temperature_c=temp,
                residual_mismatch_rad_per_mm=residual * 1000.0,
            )
        prev_lam, prev_val = float(lam), val
    raise NoSolutionError(
        f"no extended-phase-match pump in [{lo}, {hi}] nm with in-bounds temperatures"
    )


def epm_diagnostics(crystal: CrystalSpec, point: PhaseMatchPoint) -> dict:
    """Solver certificates and the local tuning-curve slope at an EPM point."""
    pump = point.pump_wavelength_nm
    gv = _group_velocity_mismatch(crystal, pump, point.temperature_c)
    # dk'/domega expressed as a group delay walk-off rate, fs per mm.
    c_um_per_fs = 0.299792458
    dk_prime_fs_per_mm = gv / c_um_per_fs * 1000.0
    h = 0.25
    slope = (
        degenerate_pm_temperature(crystal, pump + h)
        - degenerate_pm_temperature(crystal, pump - h)
    ) / (2.0 * h)
    return {
        "mismatch_rad_per_um": point.residual_mismatch_rad_per_mm / 1000.0,
        "group_index_mismatch": gv,
        "dk_prime_fs_per_mm": dk_prime_fs_per_mm,
        "pm_curve_slope_c_per_nm": slope,
    }


def _sinc2(x: float) -> float:
    return np.sinc(x / math.pi) ** 2


def shg_power_curve(
    crystal: CrystalSpec,
    fundamental_nm: float,
    t_start_c: float,
    t_stop_c: float,
    t_step_c: float,
) -> TuningCurve:
    """Normalized SHG efficiency sinc^2(Delta k L / 2) vs temperature.

    Delta k is evaluated for second-harmonic generation: pump at half the
    fundamental, signal and idler at the fundamental.  The value is exactly
    1 at a phase-match temperature.
    """
    if t_step_c <= 0:
        raise ValueError("t_step_c must be positive")
    if t_stop_c < t_start_c:
        raise ValueError("temperature range must be ordered")
    half_length = crystal.length_um / 2.0
    pump = fundamental_nm / 2.0
    temps = np.arange(t_start_c, t_stop_c + t_step_c * 0.5, t_step_c)
    power = [
        _sinc2(_degenerate_mismatch(crystal, pump, float(t)) * half_length) for t in temps
    ]
    return TuningCurve(
        abscissa=temps.astype(float),
        ordinate=np.array(power),
        abscissa_label="temperature",
        ordinate_label="shg_power_normalized",
        abscissa_unit="C",
        ordinate_unit="1",
    )


def spdc_spectrum(
    crystal: CrystalSpec,
    pump_nm: float,
    temperature_c: float,
    signal_grid_nm: Sequence[float],
) -> TuningCurve:
    """Normalized sinc^2 down-conversion spectrum over a signal grid.

    The idler follows from energy conservation, 1/lam_i = 1/lam_p - 1/lam_s.
    The returned ordinate is scaled so its maximum is exactly 1.
    """
    grid = np.asarray(signal_grid_nm, dtype=float)
    if grid.size == 0:
        raise ValueError("signal grid must be non-empty")
    half_length = crystal.length_um / 2.0
    vals = []
    for ls in grid:
        li = 1.0 / (1.0 / pump_nm - 1.0 / float(ls))
        dk = phase_mismatch(crystal, pump_nm, float(ls), li, temperature_c)
        vals.append(_sinc2(dk * half_length))
    ordinate = np.array(vals)
    peak = float(ordinate.max())
    if peak > 0.0:
        ordinate = ordinate / peak
    return TuningCurve(
        abscissa=grid,
        ordinate=ordinate,
        abscissa_label="signal_wavelength",
        ordinate_label="spectral_density_normalized",
        abscissa_unit="nm",
        ordinate_unit="1",
    )


@dataclass(frozen=True)
class FwhmResult:
    """Full width at half maximum with per-side crossing bookkeeping.

    A side is None when the function never falls to half maximum inside the
    searched interval; ``width`` is None unless both sides were found.
    """

    width: float | None
    left: float | None
    right: float | None
    peak_abscissa: float
    peak_value: float


def fwhm_of_function(
    f: Callable[[float], float],
    peak_x: float,
    search_lo: float,
    search_hi: float,
    coarse_step: float,
    xtol: float = 1e-6,
) -> FwhmResult:
    """Locate half-maximum crossings of a single-peaked function.

    Scans outward from ``peak_x`` in ``coarse_step`` increments until the
    value drops through half of f(peak_x), then refines each crossing with
    Brent's method.  Values that cannot be evaluated (e.g. validity edges)
    terminate the scan on that side.
    """
    if not search_lo <= peak_x <= search_hi:
        raise ValueError("peak_x must lie inside the search interval")
    peak_value = f(peak_x)
    half = peak_value / 2.0

    def crossing(direction: float, limit: float) -> float | None:
        x_prev, v_prev = peak_x, peak_value
        x = peak_x
        while (x - limit) * direction < 0:
            x = peak_x + direction * (abs(x - peak_x) + coarse_step)
            if (x - limit) * direction > 0:
                x = limit
            try:
                v = f(x)
            except OutOfRangeError:
                return None
            if v < half <= v_prev:
                return float(brentq(lambda u: f(u) - half, min(x_prev, x), max(x_prev, x), xtol=xtol))
            if x == limit:
                return None
            x_prev, v_prev = x, v
        return None

    right = crossing(+1.0, search_hi)
    left = crossing(-1.0, search_lo)
    width = (right - left) if (left is not None and right is not None) else None
    return FwhmResult(width=width, left=left, right=right, peak_abscissa=peak_x, peak_value=peak_value)


def spdc_bandwidth_fwhm(crystal: CrystalSpec, pump_nm: float, temperature_c: float) -> float:
    """FWHM (nm) of the degenerate down-conversion spectrum around 2*lam_p.

    Assumes the crystal is phase matched at the given temperature so the
    spectrum peaks at degeneracy; half-maximum crossings are found by
    bracketing and Brent bisection on the continuous spectrum.

    Raises:
        NoBracketError: If either half-maximum crossing cannot be bracketed.
    """
    center = 2.0 * pump_nm
    half_length = crystal.length_um / 2.0

    def spectrum(ls: float) -> float:
        li = 1.0 / (1.0 / pump_nm - 1.0 / ls)
        return _sinc2(phase_mismatch(crystal, pump_nm, ls, li, temperature_c) * half_length)

    result = fwhm_of_function(
        spectrum, center, center - 50.0, center + 50.0, coarse_step=0.02, xtol=1e-7
    )
    if result.width is None:
        raise NoBracketError(
            f"half-maximum crossings not found within +/-50 nm of {center} nm "
            f"(left={result.left}, right={result.right})"
        )
    return result.width
