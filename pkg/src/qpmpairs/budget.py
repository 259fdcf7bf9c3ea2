"""Loss-chain bookkeeping and photon-pair generation-rate estimates.

Connects detected coincidence rates to source brightness by dividing out a
configurable set of efficiency factors.  Nothing here predicts brightness
from crystal nonlinearity; it is pure accounting between measured
quantities, with every applied divisor recorded so the arithmetic can be
audited and inverted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

from .entanglement import DetectorModel, ParamOutOfRangeError

__all__ = [
    "LossElement",
    "LossChain",
    "AccountingConfig",
    "BrightnessEstimate",
    "db_to_transmission",
    "transmission_to_db",
    "chain_transmission",
    "brightness_from_detected",
    "implied_detected_rate",
    "accounting_variant_table",
]


@dataclass(frozen=True)
class LossElement:
    """One attenuating element, in decibels."""

    label: str
    loss_db: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.loss_db) or self.loss_db < 0:
            raise ValueError(f"loss_db must be finite and nonnegative, got {self.loss_db}")


@dataclass(frozen=True)
class LossChain:
    """An ordered set of attenuation elements on one collection path."""

    elements: tuple[LossElement, ...] = ()

    @classmethod
    def from_db_values(cls, values, labels=None) -> "LossChain":
        labels = labels or [f"element_{i}" for i in range(len(values))]
        return cls(tuple(LossElement(lbl, db) for lbl, db in zip(labels, values)))

    def total_db(self) -> float:
        # fsum: exactly rounded, so the total is permutation-invariant.
        return math.fsum(e.loss_db for e in self.elements)


def db_to_transmission(loss_db: float) -> float:
    """Power transmission 10^(-dB/10)."""
    if not math.isfinite(loss_db):
        raise ValueError("loss_db must be finite")
    return 10.0 ** (-loss_db / 10.0)


def transmission_to_db(transmission: float) -> float:
    """Inverse of :func:`db_to_transmission`."""
    if not 0.0 < transmission <= 1.0:
        raise ValueError(f"transmission must be in (0, 1], got {transmission}")
    return -10.0 * math.log10(transmission)


def chain_transmission(chain: LossChain) -> tuple[float, float]:
    """(total transmission, total dB) of a chain; order-independent."""
    total_db = chain.total_db()
    return db_to_transmission(total_db), total_db


@dataclass(frozen=True)
class AccountingConfig:
    """Which factors divide the detected rate on the way to a brightness.

    The ambiguity this encodes is real: a measured report may fold one or
    both collection paths, one or both detector efficiencies, and the 1/2
    post-selection factor of a 50/50 splitter into a quoted generation
    rate.  Flags make the chosen combination explicit and auditable.
    """

    include_chain1: bool = True
    include_chain2: bool = True
    include_detector1: bool = True
    include_detector2: bool = True
    include_postselection_half: bool = False

    def as_dict(self) -> dict:
        return {
            "include_chain1": self.include_chain1,
            "include_chain2": self.include_chain2,
            "include_detector1": self.include_detector1,
            "include_detector2": self.include_detector2,
            "include_postselection_half": self.include_postselection_half,
        }


@dataclass(frozen=True)
class BrightnessEstimate:
    """A generation-rate estimate and the exact divisors that produced it."""

    rate_per_s_mw_nm: float
    assumptions: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rate_per_s_mw_nm <= 0:
            raise ValueError("estimated rate must be positive")
        if not self.assumptions:
            raise ValueError("assumptions record must not be empty")


def _divisor_product(
    chain1: LossChain,
    chain2: LossChain,
    det1: DetectorModel,
    det2: DetectorModel,
    accounting: AccountingConfig,
) -> tuple[float, dict]:
    assumptions: dict = {}
    product = 1.0
    t1, db1 = chain_transmission(chain1)
    t2, db2 = chain_transmission(chain2)
    if accounting.include_chain1:
        product *= t1
        assumptions["chain1_transmission"] = t1
        assumptions["chain1_total_db"] = db1
    if accounting.include_chain2:
        product *= t2
        assumptions["chain2_transmission"] = t2
        assumptions["chain2_total_db"] = db2
    if accounting.include_detector1:
        product *= det1.efficiency
        assumptions["detector1_efficiency"] = det1.efficiency
    if accounting.include_detector2:
        product *= det2.efficiency
        assumptions["detector2_efficiency"] = det2.efficiency
    if accounting.include_postselection_half:
        product *= 0.5
        assumptions["postselection_factor"] = 0.5
    assumptions["divisor_product"] = product
    return product, assumptions


def brightness_from_detected(
    detected_rate_hz: float,
    pump_power_mw: float,
    bandwidth_nm: float,
    chain1: LossChain,
    chain2: LossChain,
    det1: DetectorModel,
    det2: DetectorModel,
    accounting: AccountingConfig = AccountingConfig(),
) -> BrightnessEstimate:
    """Generation rate per (s * mW * nm) implied by a detected coincidence rate.

    Divides the detected rate by pump power, bandwidth, and every factor the
    accounting flags enable; the assumptions record lists each divisor
    verbatim.

    Raises:
        ParamOutOfRangeError: For non-positive rate, power, or bandwidth.
    """
    if detected_rate_hz <= 0 or pump_power_mw <= 0 or bandwidth_nm <= 0:
        raise ParamOutOfRangeError("detected rate, pump power, and bandwidth must be positive")
    product, assumptions = _divisor_product(chain1, chain2, det1, det2, accounting)
    assumptions["pump_power_mw"] = pump_power_mw
    assumptions["bandwidth_nm"] = bandwidth_nm
    assumptions["detected_rate_hz"] = detected_rate_hz
    rate = detected_rate_hz / (pump_power_mw * bandwidth_nm * product)
    return BrightnessEstimate(rate_per_s_mw_nm=rate, assumptions=assumptions)


def implied_detected_rate(
    brightness_per_s_mw_nm: float,
    pump_power_mw: float,
    bandwidth_nm: float,
    chain1: LossChain,
    chain2: LossChain,
    det1: DetectorModel,
    det2: DetectorModel,
    accounting: AccountingConfig = AccountingConfig(),
) -> float:
    """Forward model: detected rate a given brightness would produce (s^-1)."""
    if brightness_per_s_mw_nm <= 0 or pump_power_mw <= 0 or bandwidth_nm <= 0:
        raise ParamOutOfRangeError("brightness, pump power, and bandwidth must be positive")
    product, _ = _divisor_product(chain1, chain2, det1, det2, accounting)
    return brightness_per_s_mw_nm * pump_power_mw * bandwidth_nm * product


def accounting_variant_table(
    brightness_per_s_mw_nm: float,
    pump_power_mw: float,
    bandwidth_nm: float,
    chain1: LossChain,
    chain2: LossChain,
    det1: DetectorModel,
    det2: DetectorModel,
) -> list[dict]:
    """Implied detected rate for every accounting-flag combination.

    Used to back-solve which (if any) flag combination makes a quoted
    brightness consistent with a plausibly measurable coincidence rate.
    """
    rows = []
    for flags in itertools.product((False, True), repeat=5):
        cfg = AccountingConfig(*flags)
        rows.append(
            {
                **cfg.as_dict(),
                "implied_detected_rate_hz": implied_detected_rate(
                    brightness_per_s_mw_nm,
                    pump_power_mw,
                    bandwidth_nm,
                    chain1,
                    chain2,
                    det1,
                    det2,
                    cfg,
                ),
            }
        )
    return rows
