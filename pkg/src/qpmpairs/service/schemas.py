"""Pydantic request/response models for the computation service.

Crystal and dispersion documents mirror the on-disk JSON formats, but the
service only accepts inline Sellmeier models (no server-side path
resolution); the CLI inlines file references before sending.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

DEFAULT_COLLECTION_LOSSES_DB = {"filters_before_fiber": 1.6, "fiber_coupling": 4.95}
DEFAULT_ARM1_LOSSES_DB = {"analyzer1_insertion": 0.31}
DEFAULT_ARM2_LOSSES_DB = {"analyzer2_insertion": 0.66}

# Arm transmissions implied by the default chains plus the 3 dB splitter.
DEFAULT_ARM_TRANSMISSIONS = (0.1030, 0.0951)


class ThermalTermDoc(BaseModel):
    lambda_power: int
    dT_power: int
    value: float


class SellmeierDoc(BaseModel):
    axis: Literal["y", "z"]
    form_id: str
    coefficients: dict[str, float]
    thermal: list[ThermalTermDoc] = Field(default_factory=list)
    reference_temperature_c: float = 25.0
    valid_lambda_um: tuple[float, float]
    valid_temp_c: tuple[float, float]
    source_citation: str = ""


class CrystalDoc(BaseModel):
    length_mm: float
    poling_period_um: float
    axes: dict[Literal["pump", "signal", "idler"], Literal["y", "z"]]
    sellmeier: dict[Literal["y", "z"], SellmeierDoc]
    temperature_bounds_c: tuple[float, float]


class CurveOut(BaseModel):
    abscissa: list[float]
    ordinate: list[float]
    abscissa_label: str
    ordinate_label: str
    abscissa_unit: str
    ordinate_unit: str
    skipped: list[float] = Field(default_factory=list)


class PmCurveRequest(BaseModel):
    crystal: CrystalDoc | None = None
    fundamental_start_nm: float = 1540.0
    fundamental_stop_nm: float = 1600.0
    step_nm: float = 1.0


class PmCurveResponse(BaseModel):
    curve: CurveOut
    turning_point_nm: float | None = None
    turning_point_temperature_c: float | None = None


class EpmRequest(BaseModel):
    crystal: CrystalDoc | None = None
    pump_scan_start_nm: float = 750.0
    pump_scan_stop_nm: float = 850.0


class EpmResponse(BaseModel):
    pump_wavelength_nm: float
    temperature_c: float
    residual_mismatch_rad_per_mm: float
    mismatch_rad_per_um: float
    group_index_mismatch: float
    dk_prime_fs_per_mm: float
    pm_curve_slope_c_per_nm: float


class ShgSweepRequest(BaseModel):
    crystal: CrystalDoc | None = None
    fundamentals_nm: list[float] = Field(default_factory=lambda: [1545.0, 1550.0, 1555.0, 1560.0])
    t_start_c: float | None = None
    t_stop_c: float | None = None
    t_step_c: float = 0.25


class ShgSummary(BaseModel):
    fundamental_nm: float
    peak_temperature_c: float | None
    peak_value: float | None
    fwhm_c: float | None
    left_half_max_c: float | None
    right_half_max_c: float | None
    left_clamped: bool
    right_clamped: bool


class ShgSweepResponse(BaseModel):
    curves: list[CurveOut]
    summaries: list[ShgSummary]


class SpdcSpectrumRequest(BaseModel):
    crystal: CrystalDoc | None = None
    pump_nm: float = 780.0
    temperature_c: float | None = None  # default: the degenerate phase-match temperature
    signal_start_nm: float | None = None
    signal_stop_nm: float | None = None
    points: int = 801


class SpdcSpectrumResponse(BaseModel):
    curve: CurveOut
    temperature_c: float
    fwhm_nm: float | None


class DetectorDoc(BaseModel):
    efficiency: float = 0.08
    dark_rate_hz: float = 310.0
    gate_window_ns: float = 5.0
    trigger_rate_hz: float = 1.0e7


class RecordDoc(BaseModel):
    theta1_deg: float
    theta2_deg: float
    coincidences: float
    duration_s: float
    singles1_hz: float
    singles2_hz: float


class BellSimRequest(BaseModel):
    coherence: float = 0.96
    imbalance: float = 0.0
    pair_rate_per_mw: float = 2830.0
    pump_power_mw: float = 205.0
    arm_transmissions: tuple[float, float] = DEFAULT_ARM_TRANSMISSIONS
    detector1: DetectorDoc = Field(default_factory=DetectorDoc)
    detector2: DetectorDoc = Field(default_factory=DetectorDoc)
    duration_s: float = 200.0
    seed: int = 20120406
    angles: tuple[float, float, float, float] = (-22.5, 22.5, -45.0, 0.0)
    sign_mask: tuple[int, int, int, int] = (-1, 1, 1, 1)
    include_fringes: bool = True
    fringe_step_deg: float = 15.0
    power_sweep_mw: list[float] | None = None


class PowerSweepRow(BaseModel):
    pump_power_mw: float
    rect_max_min_ratio: float
    diag_max_min_ratio: float


class BellSimResponse(BaseModel):
    records: list[RecordDoc]
    analysis: dict
    power_sweep: list[PowerSweepRow] | None = None


class ChshAnalyzeRequest(BaseModel):
    records: list[RecordDoc]
    angles: tuple[float, float, float, float] = (-22.5, 22.5, -45.0, 0.0)
    sign_mask: tuple[int, int, int, int] = (-1, 1, 1, 1)
    window_ns: float = 5.0
    dark_rates_hz: tuple[float, float] | None = None


class LossElementDoc(BaseModel):
    label: str
    loss_db: float


def _chain(defaults: dict[str, float]) -> list[LossElementDoc]:
    return [LossElementDoc(label=k, loss_db=v) for k, v in defaults.items()]


class AccountingDoc(BaseModel):
    include_chain1: bool = True
    include_chain2: bool = True
    include_detector1: bool = True
    include_detector2: bool = True
    include_postselection_half: bool = False


class RateEstimateRequest(BaseModel):
    crystal: CrystalDoc | None = None
    detected_rate_hz: float | None = None
    target_brightness_per_s_mw_nm: float | None = None
    pump_power_mw: float = 205.0
    pump_nm: float = 780.0
    bandwidth_nm: float | None = None  # default: computed SPDC FWHM at pump_nm
    collection_chain: list[LossElementDoc] = Field(
        default_factory=lambda: _chain(DEFAULT_COLLECTION_LOSSES_DB)
    )
    arm1_extra: list[LossElementDoc] = Field(default_factory=lambda: _chain(DEFAULT_ARM1_LOSSES_DB))
    arm2_extra: list[LossElementDoc] = Field(default_factory=lambda: _chain(DEFAULT_ARM2_LOSSES_DB))
    detector1: DetectorDoc = Field(default_factory=DetectorDoc)
    detector2: DetectorDoc = Field(default_factory=DetectorDoc)
    accounting: AccountingDoc = Field(default_factory=AccountingDoc)
    include_variant_table: bool = True


class ChainSummary(BaseModel):
    elements: list[LossElementDoc]
    total_db: float
    transmission: float


class RateEstimateResponse(BaseModel):
    collection_chain: ChainSummary
    chain1: ChainSummary
    chain2: ChainSummary
    bandwidth_nm: float
    estimate: dict | None = None
    variants: list[dict] | None = None


class HealthResponse(BaseModel):
    status: str
    version: str
