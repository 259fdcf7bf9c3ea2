"""Quasi-phase-matched photon-pair source toolkit.

Temperature-tuned Sellmeier dispersion, QPM phase-matching solvers and
tuning curves, two-photon polarization-state simulation with CHSH analysis,
and loss-chain/brightness bookkeeping — exposed as a library, a FastAPI
service, and a thin-client CLI.
"""

__version__ = "0.1.0"

from .budget import (
    AccountingConfig,
    BrightnessEstimate,
    LossChain,
    LossElement,
    brightness_from_detected,
    chain_transmission,
    db_to_transmission,
)
from .dispersion import (
    Axis,
    OutOfRangeError,
    SellmeierModel,
    group_index,
    index_derivative,
    refractive_index,
)
from .entanglement import (
    AngleSetting,
    CountRecord,
    DetectorModel,
    ExperimentModel,
    TwoPhotonState,
    analyze_chsh,
    chsh_S,
    coincidence_probability,
    correlation_E,
    dephased_state,
    expected_counts,
    ideal_post_selected_state,
    simulate_counts,
    visibility,
    visibility_in_basis,
)
from .formats import default_crystal, load_crystal, load_sellmeier_model
from .phasematching import (
    CrystalSpec,
    PhaseMatchPoint,
    TuningCurve,
    degenerate_pm_temperature,
    find_epm_pump,
    phase_mismatch,
    pm_temperature_curve,
    shg_power_curve,
    spdc_bandwidth_fwhm,
    spdc_spectrum,
)

__all__ = [
    "__version__",
    "Axis",
    "OutOfRangeError",
    "SellmeierModel",
    "refractive_index",
    "index_derivative",
    "group_index",
    "CrystalSpec",
    "PhaseMatchPoint",
    "TuningCurve",
    "phase_mismatch",
    "degenerate_pm_temperature",
    "pm_temperature_curve",
    "find_epm_pump",
    "shg_power_curve",
    "spdc_spectrum",
    "spdc_bandwidth_fwhm",
    "TwoPhotonState",
    "AngleSetting",
    "DetectorModel",
    "CountRecord",
    "ExperimentModel",
    "ideal_post_selected_state",
    "dephased_state",
    "coincidence_probability",
    "correlation_E",
    "chsh_S",
    "visibility",
    "visibility_in_basis",
    "expected_counts",
    "simulate_counts",
    "analyze_chsh",
    "LossChain",
    "LossElement",
    "AccountingConfig",
    "BrightnessEstimate",
    "db_to_transmission",
    "chain_transmission",
    "brightness_from_detected",
    "default_crystal",
    "load_crystal",
    "load_sellmeier_model",
]
