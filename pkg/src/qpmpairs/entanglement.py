"""Two-photon polarization states, coincidence statistics, and CHSH analysis.

The post-selected state behind a 50/50 splitter lives on the four-dimensional
H/V polarization space of the reflected (first slot) and transmitted (second
slot) photons, basis order {HH, HV, VH, VV}.  Everything downstream is
classical probability plumbing around it:

- projective coincidence probabilities through two linear polarizers,
- correlation coefficients E built from a setting and its complements,
- the CHSH sum with a configurable sign mask (default (-,+,+,+), the
  combination that reaches 2*sqrt(2) for the HV+VH state at the canonical
  -22.5/22.5/-45/0 degree settings),
- Poisson (delta-method) uncertainty propagation and violation significance,
- fringe visibilities, accidental-coincidence estimates and subtraction,
- a rate model (pairs, arm losses, detector efficiency, dark counts,
  gate-window accidentals) with deterministic seeded Monte Carlo sampling.

Angles are degrees throughout; polarizer projectors are 180-degree periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "ZeroDenominatorError",
    "DegenerateError",
    "ParamOutOfRangeError",
    "MissingSettingsError",
    "TwoPhotonState",
    "AngleSetting",
    "DetectorModel",
    "CountRecord",
    "ExperimentModel",
    "ExpectedCounts",
    "ideal_post_selected_state",
    "dephased_state",
    "coincidence_probability",
    "correlation_E",
    "chsh_S",
    "s_uncertainty",
    "violation_significance",
    "visibility",
    "visibility_in_basis",
    "accidental_rate",
    "subtract_accidentals",
    "expected_counts",
    "simulate_counts",
    "derive_rng",
    "chsh_setting_groups",
    "DEFAULT_CHSH_ANGLES",
    "DEFAULT_SIGN_MASK",
    "analyze_chsh",
]

BASIS = ("HH", "HV", "VH", "VV")

# Canonical analyzer settings (theta1, theta1', theta2, theta2') in degrees.
DEFAULT_CHSH_ANGLES = (-22.5, 22.5, -45.0, 0.0)
# Signs applied to (E(a,b), E(a',b), E(a,b'), E(a',b')).
DEFAULT_SIGN_MASK = (-1, 1, 1, 1)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = -1e-10


class ZeroDenominatorError(ZeroDivisionError):
    """A normalization denominator built from counts is zero."""


class DegenerateError(ValueError):
    """Visibility is undefined because both extremes are zero."""


class ParamOutOfRangeError(ValueError):
    """A model parameter violates its declared range."""


class MissingSettingsError(ValueError):
    """Ingested records do not cover the required analyzer settings."""

    def __init__(self, missing: Sequence[tuple[float, float]]):
        self.missing = tuple(missing)
        pairs = ", ".join(f"({a:g}, {b:g})" for a, b in self.missing)
        super().__init__(f"records missing required settings: {pairs}")


class TwoPhotonState:
    """A validated 4x4 density matrix over {HH, HV, VH, VV}.

    Construction enforces Hermiticity and unit trace to 1e-12 and positive
    semidefiniteness to -1e-10 on the smallest eigenvalue.
    """

    __slots__ = ("rho",)

    def __init__(self, rho: np.ndarray):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if abs(rho.trace() - 1.0) > TRACE_TOL:
            raise ValueError(f"trace is {rho.trace():.15g}, not 1 within 1e-12")
        min_eig = float(np.linalg.eigvalsh(rho)[0])
        if min_eig < PSD_TOL:
            raise ValueError(f"smallest eigenvalue {min_eig:.3e} < {PSD_TOL}")
        self.rho = rho
        self.rho.flags.writeable = False

    def purity(self) -> float:
        return float(np.real(np.trace(self.rho @ self.rho)))

    def __repr__(self) -> str:  # pragma: no cover
        return f"TwoPhotonState(purity={self.purity():.6f})"


@dataclass(frozen=True)
class AngleSetting:
    """Transmission-axis angles of the two polarizers, degrees from H."""

    theta1_deg: float
    theta2_deg: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta1_deg) and math.isfinite(self.theta2_deg)):
            raise ValueError("angles must be finite")

    def reduced(self) -> tuple[float, float]:
        """Angles folded into [0, 180) for projector identity purposes."""
        return (self.theta1_deg % 180.0, self.theta2_deg % 180.0)


@dataclass(frozen=True)
class DetectorModel:
    """Gated single-photon detector parameters."""

    efficiency: float = 0.08
    dark_rate_hz: float = 310.0
    gate_window_ns: float = 5.0
    trigger_rate_hz: float = 1.0e7

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ParamOutOfRangeError(f"efficiency must be in [0, 1], got {self.efficiency}")
        for name in ("dark_rate_hz", "gate_window_ns", "trigger_rate_hz"):
            if getattr(self, name) < 0:
                raise ParamOutOfRangeError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class CountRecord:
    """Counts accumulated at one polarizer setting."""

    setting: AngleSetting
    coincidences: float
    singles1_hz: float
    singles2_hz: float
    duration_s: float

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration must be positive")
        if self.coincidences < 0 or self.singles1_hz < 0 or self.singles2_hz < 0:
            raise ValueError("counts and rates must be nonnegative")


@dataclass(frozen=True)
class ExperimentModel:
    """Source brightness, losses, and detectors feeding the count model."""

    state: TwoPhotonState
    pair_rate_per_mw: float
    pump_power_mw: float
    arm_transmissions: tuple[float, float]
    detectors: tuple[DetectorModel, DetectorModel]

    def __post_init__(self) -> None:
        if self.pair_rate_per_mw < 0 or self.pump_power_mw < 0:
            raise ParamOutOfRangeError("rates and powers must be nonnegative")
        for eta in self.arm_transmissions:
            if not 0.0 <= eta <= 1.0:
                raise ParamOutOfRangeError(f"arm transmission must be in [0, 1], got {eta}")


def ideal_post_selected_state() -> TwoPhotonState:
    """The pure (|HV> + |VH>)/sqrt(2) state as a density matrix."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1.0 / math.sqrt(2.0)
    return TwoPhotonState(np.outer(psi, psi.conj()))


def dephased_state(coherence: float, imbalance: float = 0.0) -> TwoPhotonState:
    """Imperfect pair state: isotropic white-noise admixture with population skew.

    rho = coherence * |psi><psi| + (1 - coherence) * I/4, where |psi| splits
    its weight (1 +/- imbalance)/2 between HV and VH.  This is the standard
    visibility/violation family: at zero imbalance the fringe visibility in
    every basis equals ``coherence``, the HV<->VH off-diagonal element is
    coherence/2, and |S| at the canonical settings is 2*sqrt(2)*coherence,
    so the CHSH bound |S| = 2 sits exactly at coherence = 1/sqrt(2) (the
    71% visibility threshold).  (1, 0) reproduces the pure post-selected
    state; coherence 0 is the fully mixed state.

    Raises:
        ParamOutOfRangeError: If either parameter leaves [0, 1].
    """
    if not 0.0 <= coherence <= 1.0:
        raise ParamOutOfRangeError(f"coherence must be in [0, 1], got {coherence}")
    if not 0.0 <= imbalance <= 1.0:
        raise ParamOutOfRangeError(f"imbalance must be in [0, 1], got {imbalance}")
    psi = np.zeros(4, dtype=complex)
    psi[1] = math.sqrt((1.0 + imbalance) / 2.0)
    psi[2] = math.sqrt((1.0 - imbalance) / 2.0)
    rho = coherence * np.outer(psi, psi.conj()) + (1.0 - coherence) * np.eye(4) / 4.0
    return TwoPhotonState(rho)


def _polarizer_vector(theta_deg: float) -> np.ndarray:
    t = math.radians(theta_deg)
    return np.array([math.cos(t), math.sin(t)], dtype=complex)


def _joint_projector(theta1_deg: float, theta2_deg: float) -> np.ndarray:
    v1 = _polarizer_vector(theta1_deg)
    v2 = _polarizer_vector(theta2_deg)
    p1 = np.outer(v1, v1.conj())
    p2 = np.outer(v2, v2.conj())
    return np.kron(p1, p2)


def coincidence_probability(state: TwoPhotonState, setting: AngleSetting) -> float:
    """Tr[rho (|theta1><theta1| x |theta2><theta2|)], clipped to [0, 1]."""
    p = float(np.real(np.trace(state.rho @ _joint_projector(setting.theta1_deg, setting.theta2_deg))))
    return min(1.0, max(0.0, p))


def _single_probability(state: TwoPhotonState, arm: int, theta_deg: float) -> float:
    v = _polarizer_vector(theta_deg)
    p = np.outer(v, v.conj())
    op = np.kron(p, np.eye(2)) if arm == 1 else np.kron(np.eye(2), p)
    return float(np.real(np.trace(state.rho @ op)))


def correlation_E(c_pp: float, c_tt: float, c_pt: float, c_tp: float) -> float:
    """Normalized correlation from a setting pair and its complements.

    E = (C(t1,t2) + C(t1+90,t2+90) - C(t1,t2+90) - C(t1+90,t2)) / (sum).

    Raises:
        ZeroDenominatorError: If all four counts are zero.
    """
    for c in (c_pp, c_tt, c_pt, c_tp):
        if c < 0:
            raise ValueError("counts must be nonnegative")
    total = c_pp + c_tt + c_pt + c_tp
    if total == 0:
        raise ZeroDenominatorError("all four coincidence counts are zero")
    return (c_pp + c_tt - c_pt - c_tp) / total


def chsh_S(
    e_ab: float,
    e_apb: float,
    e_abp: float,
    e_apbp: float,
    sign_mask: Sequence[int] = DEFAULT_SIGN_MASK,
) -> float:
    """|S| for the four correlation terms under the given sign mask."""
    terms = (e_ab, e_apb, e_abp, e_apbp)
    for e in terms:
        if abs(e) > 1.0 + 1e-12:
            raise ValueError(f"|E| must not exceed 1, got {e}")
    if len(sign_mask) != 4 or any(s not in (-1, 1) for s in sign_mask):
        raise ValueError("sign_mask must be four entries of +/-1")
    return abs(sum(s * e for s, e in zip(sign_mask, terms)))


def s_uncertainty(groups: Sequence[Sequence[float]]) -> float:
    """Delta-method sigma of S from four groups of four Poisson counts.

    Each group is (c_pp, c_tt, c_pt, c_tp) for one E term.  With
    P = c_pp + c_tt, M = c_pt + c_tp, N = P + M, first-order propagation of
    sigma(c) = sqrt(c) through E gives Var(E) = 4 P M / N^3; the four terms
    add in quadrature regardless of the sign mask.

    Raises:
        ZeroDenominatorError: If any group's total is zero.
    """
    if len(groups) != 4:
        raise ValueError("expected exactly four count groups")
    var = 0.0
    for g in groups:
        c_pp, c_tt, c_pt, c_tp = (float(c) for c in g)
        p = c_pp + c_tt
        m = c_pt + c_tp
        n = p + m
        if n <= 0:
            raise ZeroDenominatorError("a correlation group has zero total counts")
        var += 4.0 * p * m / n**3
    return math.sqrt(var)


def violation_significance(s_abs: float, sigma_s: float) -> float:
    """(|S| - 2) / sigma_S; +inf for a violation with zero uncertainty."""
    if sigma_s == 0.0:
        return math.inf if s_abs > 2.0 else -math.inf if s_abs < 2.0 else 0.0
    return (s_abs - 2.0) / sigma_s


def visibility(c_max: float, c_min: float) -> float:
    """Fringe contrast (C_max - C_min) / (C_max + C_min).

    Raises:
        DegenerateError: If both extremes are zero.
        ValueError: If inputs are negative or out of order.
    """
    if c_min < 0 or c_max < c_min:
        raise ValueError("require c_max >= c_min >= 0")
    if c_max == 0:
        raise DegenerateError("both fringe extremes are zero")
    return (c_max - c_min) / (c_max + c_min)


def visibility_in_basis(state: TwoPhotonState, basis: str) -> float:
    """Model fringe visibility with polarizer 2 fixed in a measurement basis.

    ``basis`` is ``"rect"`` (polarizer 2 at 0 degrees) or ``"diag"``
    (45 degrees); polarizer 1 is scanned over a 0.5-degree grid and the
    visibility of the resulting fringe is returned (0 for a flat fringe).
    """
    try:
        theta2 = {"rect": 0.0, "diag": 45.0}[basis]
    except KeyError:
        raise ValueError(f"basis must be 'rect' or 'diag', got {basis!r}") from None
    probs = [
        coincidence_probability(state, AngleSetting(t1, theta2))
        for t1 in np.arange(0.0, 180.0, 0.5)
    ]
    c_max, c_min = max(probs), min(probs)
    if c_max == 0.0:
        return 0.0
    return (c_max - c_min) / (c_max + c_min)


def accidental_rate(singles1_hz: float, singles2_hz: float, window_ns: float) -> float:
    """Accidental-coincidence rate R1 * R2 * tau for a gate window tau (s^-1)."""
    if singles1_hz < 0 or singles2_hz < 0 or window_ns < 0:
        raise ValueError("rates and window must be nonnegative")
    return singles1_hz * singles2_hz * window_ns * 1e-9


def subtract_accidentals(record: CountRecord, window_ns: float = 5.0) -> float:
    """Coincidences minus the accidental estimate, clamped at zero."""
    acc = accidental_rate(record.singles1_hz, record.singles2_hz, window_ns) * record.duration_s
    return max(0.0, record.coincidences - acc)


@dataclass(frozen=True)
class ExpectedCounts:
    """Mean counts predicted by an ExperimentModel at one setting."""

    coincidence_mean: float
    singles1_hz: float
    singles2_hz: float
    true_coincidence_mean: float
    accidental_rate_hz: float


def expected_counts(
    model: ExperimentModel, setting: AngleSetting, duration_s: float
) -> ExpectedCounts:
    """Mean coincidences and singles for one setting over a duration.

    True coincidences scale as pair rate x both arm transmissions x both
    detector efficiencies x the joint projection probability.  Singles on
    each arm collect pair photons through that arm's polarizer (partner
    fate irrelevant) plus dark counts, and the accidental mean is the
    singles product times the gate window.
    """
    if duration_s <= 0:
        raise ParamOutOfRangeError("duration must be positive")
    d1, d2 = model.detectors
    eta1, eta2 = model.arm_transmissions
    pair_rate = model.pair_rate_per_mw * model.pump_power_mw
    p12 = coincidence_probability(model.state, setting)
    p1 = _single_probability(model.state, 1, setting.theta1_deg)
    p2 = _single_probability(model.state, 2, setting.theta2_deg)
    singles1 = pair_rate * eta1 * d1.efficiency * p1 + d1.dark_rate_hz
    singles2 = pair_rate * eta2 * d2.efficiency * p2 + d2.dark_rate_hz
    true_rate = pair_rate * eta1 * eta2 * d1.efficiency * d2.efficiency * p12
    acc = accidental_rate(singles1, singles2, d2.gate_window_ns)
    return ExpectedCounts(
        coincidence_mean=(true_rate + acc) * duration_s,
        singles1_hz=singles1,
        singles2_hz=singles2,
        true_coincidence_mean=true_rate * duration_s,
        accidental_rate_hz=acc,
    )


def derive_rng(seed: int, batch_index: int = 0) -> np.random.Generator:
    """Deterministic generator for (seed, batch) pairs, independent per batch."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(batch_index,)))


def simulate_counts(
    model: ExperimentModel,
    settings: Iterable[AngleSetting],
    duration_s: float,
    seed: int,
    batch_index: int = 0,
) -> list[CountRecord]:
    """Poisson-sample one CountRecord per setting; identical seeds, identical records."""
    rng = derive_rng(seed, batch_index)
    records = []
    for setting in settings:
        mean = expected_counts(model, setting, duration_s)
        coincidences = int(rng.poisson(mean.coincidence_mean))
        s1 = int(rng.poisson(mean.singles1_hz * duration_s)) / duration_s
        s2 = int(rng.poisson(mean.singles2_hz * duration_s)) / duration_s
        records.append(
            CountRecord(
                setting=setting,
                coincidences=coincidences,
                singles1_hz=s1,
                singles2_hz=s2,
                duration_s=duration_s,
            )
        )
    return records


def chsh_setting_groups(
    angles: Sequence[float] = DEFAULT_CHSH_ANGLES,
) -> list[list[AngleSetting]]:
    """The 16 analyzer settings of a CHSH run, grouped four per E term.

    ``angles`` is (theta1, theta1', theta2, theta2'); each group holds the
    setting pair and its complements in the order expected by
    :func:`correlation_E`: (t1,t2), (t1+90,t2+90), (t1,t2+90), (t1+90,t2).
    Group order matches :func:`chsh_S`: (a,b), (a',b), (a,b'), (a',b').
    """
    a, ap, b, bp = angles
    groups = []
    for t1, t2 in ((a, b), (ap, b), (a, bp), (ap, bp)):
        groups.append(
            [
                AngleSetting(t1, t2),
                AngleSetting(t1 + 90.0, t2 + 90.0),
                AngleSetting(t1, t2 + 90.0),
                AngleSetting(t1 + 90.0, t2),
            ]
        )
    return groups


def _match_record(
    records: Sequence[CountRecord], setting: AngleSetting, tol: float = 1e-6
) -> CountRecord | None:
    """Find record(s) at a setting (angles compared modulo 180 degrees).

    Multiple matches are merged as concatenated runs: coincidences and
    durations add, singles average weighted by duration.
    """
    def same(a: float, b: float) -> bool:
        d = abs(a - b) % 180.0
        return min(d, 180.0 - d) <= tol

    matches = [
        r
        for r in records
        if same(r.setting.theta1_deg, setting.theta1_deg)
        and same(r.setting.theta2_deg, setting.theta2_deg)
    ]
    if not matches:
        return None
    if len(matches) == 1:
        return matches[0]
    total_t = sum(r.duration_s for r in matches)
    return CountRecord(
        setting=setting,
        coincidences=sum(r.coincidences for r in matches),
        singles1_hz=sum(r.singles1_hz * r.duration_s for r in matches) / total_t,
        singles2_hz=sum(r.singles2_hz * r.duration_s for r in matches) / total_t,
        duration_s=total_t,
    )


def _basis_of(theta2_deg: float, tol: float = 1e-6) -> str | None:
    folded = theta2_deg % 90.0
    if min(folded, 90.0 - folded) <= tol:
        return "rect"
    if abs(folded - 45.0) <= tol:
        return "diag"
    return None


def _fringe_visibilities(
    records: Sequence[CountRecord], window_ns: float
) -> dict[str, dict[str, float | None]]:
    out: dict[str, dict[str, float | None]] = {}
    for basis in ("rect", "diag"):
        rows = [r for r in records if _basis_of(r.setting.theta2_deg) == basis]
        entry: dict[str, float | None] = {"raw": None, "net": None, "n_points": len(rows)}
        if len(rows) >= 2:
            raw = [r.coincidences for r in rows]
            net = [subtract_accidentals(r, window_ns) for r in rows]
            if max(raw) > 0:
                entry["raw"] = visibility(max(raw), min(raw))
            if max(net) > 0:
                entry["net"] = visibility(max(net), min(net))
        out[basis] = entry
    return out


def analyze_chsh(
    records: Sequence[CountRecord],
    angles: Sequence[float] = DEFAULT_CHSH_ANGLES,
    sign_mask: Sequence[int] = DEFAULT_SIGN_MASK,
    window_ns: float = 5.0,
    dark_rates_hz: tuple[float, float] | None = None,
) -> dict:
    """Full CHSH analysis of ingested count records.

    Returns a JSON-ready dict with raw and accidental-subtracted S, sigma_S,
    significance, and per-term E values, plus fringe visibilities per basis
    from whatever fringe rows the record set contains.  When dark rates are
    supplied, a third variant subtracts only the photon-photon accidental
    estimate (dark rates removed from the singles before the product).

    Raises:
        MissingSettingsError: Listing every absent (theta1, theta2) pair.
    """
    groups = chsh_setting_groups(angles)
    missing: list[tuple[float, float]] = []
    matched: list[list[CountRecord]] = []
    for group in groups:
        row = []
        for setting in group:
            rec = _match_record(records, setting)
            if rec is None:
                missing.append((setting.theta1_deg, setting.theta2_deg))
            else:
                row.append(rec)
        matched.append(row)
    if missing:
        raise MissingSettingsError(missing)

    def variant(counts_of) -> dict:
        count_groups = [[counts_of(r) for r in row] for row in matched]
        e_terms = [correlation_E(*g) for g in count_groups]
        s = chsh_S(*e_terms, sign_mask=sign_mask)
        sigma = s_uncertainty(count_groups)
        return {
            "E": e_terms,
            "S": s,
            "sigma_S": sigma,
            "significance": violation_significance(s, sigma),
        }

    result = {
        "angles": {
            "theta1_deg": angles[0],
            "theta1_prime_deg": angles[1],
            "theta2_deg": angles[2],
            "theta2_prime_deg": angles[3],
        },
        "sign_mask": list(sign_mask),
        "window_ns": window_ns,
        "raw": variant(lambda r: r.coincidences),
        "net_accidental": variant(lambda r: subtract_accidentals(r, window_ns)),
        "visibility": _fringe_visibilities(records, window_ns),
    }
    clamped = [
        [r.setting.theta1_deg, r.setting.theta2_deg]
        for row in matched
        for r in row
        if subtract_accidentals(r, window_ns) == 0.0 and r.coincidences > 0
    ]
    result["net_accidental"]["clamped_settings"] = clamped
    if dark_rates_hz is not None:
        d1, d2 = dark_rates_hz

        def photon_only(r: CountRecord) -> float:
            acc = accidental_rate(
                max(0.0, r.singles1_hz - d1), max(0.0, r.singles2_hz - d2), window_ns
            )
            return max(0.0, r.coincidences - acc * r.duration_s)

        result["net_photon_only"] = variant(photon_only)
    return result
