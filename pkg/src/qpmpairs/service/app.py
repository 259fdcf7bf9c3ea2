"""FastAPI application exposing the toolkit's computations.

Routes mirror the CLI subcommands one-to-one.  Domain validation failures
map to HTTP 400, solver failures (no bracket / no solution / empty curve)
to HTTP 409, both with an ``{"error": {"type", "message"}}`` body; request
schema violations keep FastAPI's standard 422.
"""

from __future__ import annotations

import numpy as np
from fastapi import APIRouter, FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..dispersion import OutOfRangeError
from ..budget import (
    AccountingConfig,
    LossChain,
    LossElement,
    accounting_variant_table,
    brightness_from_detected,
    chain_transmission,
)
from ..entanglement import (
    AngleSetting,
    CountRecord,
    DetectorModel,
    ExperimentModel,
    ZeroDenominatorError,
    analyze_chsh,
    chsh_setting_groups,
    dephased_state,
    expected_counts,
    simulate_counts,
)
from ..formats import crystal_from_dict, default_crystal
from ..phasematching import (
    CrystalSpec,
    PhaseMatchError,
    TuningCurve,
    degenerate_pm_temperature,
    epm_diagnostics,
    find_epm_pump,
    fwhm_of_function,
    phase_mismatch,
    pm_temperature_curve,
    shg_power_curve,
    spdc_bandwidth_fwhm,
    spdc_spectrum,
)
from . import schemas as sc

router = APIRouter()


def _crystal(doc: sc.CrystalDoc | None) -> CrystalSpec:
    if doc is None:
        return default_crystal()
    return crystal_from_dict(doc.model_dump(), context="request crystal")


def _curve_out(curve: TuningCurve) -> sc.CurveOut:
    return sc.CurveOut(
        abscissa=[float(v) for v in curve.abscissa],
        ordinate=[float(v) for v in curve.ordinate],
        abscissa_label=curve.abscissa_label,
        ordinate_label=curve.ordinate_label,
        abscissa_unit=curve.abscissa_unit,
        ordinate_unit=curve.ordinate_unit,
        skipped=list(curve.skipped),
    )


@router.get("/health", response_model=sc.HealthResponse)
def health() -> sc.HealthResponse:
    return sc.HealthResponse(status="ok", version=__version__)


@router.post("/pm-curve", response_model=sc.PmCurveResponse)
def pm_curve(req: sc.PmCurveRequest) -> sc.PmCurveResponse:
    crystal = _crystal(req.crystal)
    curve = pm_temperature_curve(
        crystal, req.fundamental_start_nm, req.fundamental_stop_nm, req.step_nm
    )
    turning_nm = turning_t = None
    if len(curve.abscissa) >= 3:
        i = int(np.argmin(curve.ordinate))
        if 0 < i < len(curve.abscissa) - 1:
            # Sub-step refinement: parabola vertex through the minimum row and
            # its neighbors, so the grid does not quantize the turning point.
            x0, x1, x2 = curve.abscissa[i - 1 : i + 2]
            y0, y1, y2 = curve.ordinate[i - 1 : i + 2]
            denom = y0 - 2.0 * y1 + y2
            turning_nm = float(curve.abscissa[i])
            if denom > 0.0 and abs(x1 - x0 - (x2 - x1)) < 1e-9:
                turning_nm = float(x1 + 0.5 * (x1 - x0) * (y0 - y2) / denom)
            turning_t = degenerate_pm_temperature(crystal, turning_nm / 2.0)
    return sc.PmCurveResponse(
        curve=_curve_out(curve),
        turning_point_nm=turning_nm,
        turning_point_temperature_c=turning_t,
    )


@router.post("/epm-find", response_model=sc.EpmResponse)
def epm_find(req: sc.EpmRequest) -> sc.EpmResponse:
    crystal = _crystal(req.crystal)
    point = find_epm_pump(crystal, (req.pump_scan_start_nm, req.pump_scan_stop_nm))
    diag = epm_diagnostics(crystal, point)
    return sc.EpmResponse(
        pump_wavelength_nm=point.pump_wavelength_nm,
        temperature_c=point.temperature_c,
        residual_mismatch_rad_per_mm=point.residual_mismatch_rad_per_mm,
        mismatch_rad_per_um=diag["mismatch_rad_per_um"],
        group_index_mismatch=diag["group_index_mismatch"],
        dk_prime_fs_per_mm=diag["dk_prime_fs_per_mm"],
        pm_curve_slope_c_per_nm=diag["pm_curve_slope_c_per_nm"],
    )


@router.post("/shg-sweep", response_model=sc.ShgSweepResponse)
def shg_sweep(req: sc.ShgSweepRequest) -> sc.ShgSweepResponse:
    crystal = _crystal(req.crystal)
    t_lo = crystal.temperature_bounds_c[0] if req.t_start_c is None else req.t_start_c
    t_hi = crystal.temperature_bounds_c[1] if req.t_stop_c is None else req.t_stop_c
    curves = []
    summaries = []
    half_length = crystal.length_um / 2.0
    for fund in req.fundamentals_nm:
        curve = shg_power_curve(crystal, fund, t_lo, t_hi, req.t_step_c)
        curves.append(_curve_out(curve))

        def power(t: float, _pump=fund / 2.0, _fund=fund) -> float:
            return float(
                np.sinc(phase_mismatch(crystal, _pump, _fund, _fund, t) * half_length / np.pi) ** 2
            )

        try:
            peak_t = degenerate_pm_temperature(crystal, fund / 2.0)
        except PhaseMatchError:
            peak_t = float(curve.abscissa[int(np.argmax(curve.ordinate))])
        res = fwhm_of_function(power, peak_t, t_lo, t_hi, coarse_step=1.0)
        summaries.append(
            sc.ShgSummary(
                fundamental_nm=fund,
                peak_temperature_c=res.peak_abscissa,
                peak_value=res.peak_value,
                fwhm_c=res.width,
                left_half_max_c=res.left,
                right_half_max_c=res.right,
                left_clamped=res.left is None,
                right_clamped=res.right is None,
            )
        )
    return sc.ShgSweepResponse(curves=curves, summaries=summaries)


@router.post("/spdc-spectrum", response_model=sc.SpdcSpectrumResponse)
def spdc_spectrum_route(req: sc.SpdcSpectrumRequest) -> sc.SpdcSpectrumResponse:
    crystal = _crystal(req.crystal)
    temp = (
        degenerate_pm_temperature(crystal, req.pump_nm)
        if req.temperature_c is None
        else req.temperature_c
    )
    center = 2.0 * req.pump_nm
    lo = center - 8.0 if req.signal_start_nm is None else req.signal_start_nm
    hi = center + 8.0 if req.signal_stop_nm is None else req.signal_stop_nm
    grid = np.linspace(lo, hi, req.points)
    curve = spdc_spectrum(crystal, req.pump_nm, temp, grid)
    try:
        fwhm = spdc_bandwidth_fwhm(crystal, req.pump_nm, temp)
    except PhaseMatchError:
        fwhm = None
    return sc.SpdcSpectrumResponse(curve=_curve_out(curve), temperature_c=temp, fwhm_nm=fwhm)


def _bell_model(req: sc.BellSimRequest, power_mw: float | None = None) -> ExperimentModel:
    return ExperimentModel(
        state=dephased_state(req.coherence, req.imbalance),
        pair_rate_per_mw=req.pair_rate_per_mw,
        pump_power_mw=req.pump_power_mw if power_mw is None else power_mw,
        arm_transmissions=req.arm_transmissions,
        detectors=(
            DetectorModel(**req.detector1.model_dump()),
            DetectorModel(**req.detector2.model_dump()),
        ),
    )


def _bell_settings(req: sc.BellSimRequest) -> list[AngleSetting]:
    settings: list[AngleSetting] = []
    if req.include_fringes:
        for theta2 in (0.0, 45.0):
            for theta1 in np.arange(0.0, 180.0, req.fringe_step_deg):
                settings.append(AngleSetting(float(theta1), theta2))
    for group in chsh_setting_groups(req.angles):
        settings.extend(group)
    return settings


def _fringe_ratio(model: ExperimentModel, theta2: float, duration_s: float) -> float:
    means = [
        expected_counts(model, AngleSetting(float(t1), theta2), duration_s).coincidence_mean
        for t1 in np.arange(0.0, 180.0, 0.5)
    ]
    return max(means) / min(means)


@router.post("/bell-sim", response_model=sc.BellSimResponse)
def bell_sim(req: sc.BellSimRequest) -> sc.BellSimResponse:
    model = _bell_model(req)
    settings = _bell_settings(req)
    records = simulate_counts(model, settings, req.duration_s, req.seed)
    analysis = analyze_chsh(
        records,
        angles=req.angles,
        sign_mask=req.sign_mask,
        window_ns=model.detectors[1].gate_window_ns,
        dark_rates_hz=(model.detectors[0].dark_rate_hz, model.detectors[1].dark_rate_hz),
    )
    record_docs = [
        sc.RecordDoc(
            theta1_deg=r.setting.theta1_deg,
            theta2_deg=r.setting.theta2_deg,
            coincidences=r.coincidences,
            duration_s=r.duration_s,
            singles1_hz=r.singles1_hz,
            singles2_hz=r.singles2_hz,
        )
        for r in records
    ]
    sweep = None
    if req.power_sweep_mw:
        sweep = []
        for power in req.power_sweep_mw:
            m = _bell_model(req, power_mw=power)
            sweep.append(
                sc.PowerSweepRow(
                    pump_power_mw=power,
                    rect_max_min_ratio=_fringe_ratio(m, 0.0, req.duration_s),
                    diag_max_min_ratio=_fringe_ratio(m, 45.0, req.duration_s),
                )
            )
    return sc.BellSimResponse(records=record_docs, analysis=analysis, power_sweep=sweep)


@router.post("/chsh-analyze")
def chsh_analyze(req: sc.ChshAnalyzeRequest) -> dict:
    records = [
        CountRecord(
            setting=AngleSetting(r.theta1_deg, r.theta2_deg),
            coincidences=r.coincidences,
            singles1_hz=r.singles1_hz,
            singles2_hz=r.singles2_hz,
            duration_s=r.duration_s,
        )
        for r in req.records
    ]
    return analyze_chsh(
        records,
        angles=req.angles,
        sign_mask=req.sign_mask,
        window_ns=req.window_ns,
        dark_rates_hz=req.dark_rates_hz,
    )


def _summarize(elements: list[sc.LossElementDoc]) -> tuple[LossChain, sc.ChainSummary]:
    chain = LossChain(tuple(LossElement(e.label, e.loss_db) for e in elements))
    transmission, total_db = chain_transmission(chain)
    return chain, sc.ChainSummary(elements=elements, total_db=total_db, transmission=transmission)


@router.post("/rate-estimate", response_model=sc.RateEstimateResponse)
def rate_estimate(req: sc.RateEstimateRequest) -> sc.RateEstimateResponse:
    _, collection_summary = _summarize(req.collection_chain)
    chain1, chain1_summary = _summarize(req.collection_chain + req.arm1_extra)
    chain2, chain2_summary = _summarize(req.collection_chain + req.arm2_extra)
    det1 = DetectorModel(**req.detector1.model_dump())
    det2 = DetectorModel(**req.detector2.model_dump())
    bandwidth = req.bandwidth_nm
    if bandwidth is None:
        crystal = _crystal(req.crystal)
        temp = degenerate_pm_temperature(crystal, req.pump_nm)
        bandwidth = spdc_bandwidth_fwhm(crystal, req.pump_nm, temp)
    accounting = AccountingConfig(**req.accounting.model_dump())
    estimate = None
    if req.detected_rate_hz is not None:
        est = brightness_from_detected(
            req.detected_rate_hz,
            req.pump_power_mw,
            bandwidth,
            chain1,
            chain2,
            det1,
            det2,
            accounting,
        )
        estimate = {
            "rate_per_s_mw_nm": est.rate_per_s_mw_nm,
            "assumptions": est.assumptions,
        }
    variants = None
    if req.include_variant_table and req.target_brightness_per_s_mw_nm is not None:
        variants = accounting_variant_table(
            req.target_brightness_per_s_mw_nm,
            req.pump_power_mw,
            bandwidth,
            chain1,
            chain2,
            det1,
            det2,
        )
    return sc.RateEstimateResponse(
        collection_chain=collection_summary,
        chain1=chain1_summary,
        chain2=chain2_summary,
        bandwidth_nm=bandwidth,
        estimate=estimate,
        variants=variants,
    )


def _error_response(status: int, exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"type": type(exc).__name__, "message": str(exc)}},
    )


def create_app() -> FastAPI:
    """Build the service application with domain error mapping installed."""
    app = FastAPI(title="qpmpairs", version=__version__)
    app.include_router(router)

    @app.exception_handler(PhaseMatchError)
    def _solver_error(request, exc):  # noqa: ANN001
        return _error_response(409, exc)

    @app.exception_handler(ValueError)
    def _validation_error(request, exc):  # noqa: ANN001
        return _error_response(400, exc)

    @app.exception_handler(ZeroDenominatorError)
    def _zero_denominator(request, exc):  # noqa: ANN001
        return _error_response(400, exc)

    @app.exception_handler(OutOfRangeError)
    def _out_of_range(request, exc):  # noqa: ANN001
        return _error_response(400, exc)

    return app
