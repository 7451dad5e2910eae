"""Coincidence tomography: settings, count simulation, and MLE reconstruction.

Measurement model
-----------------
Each setting places a quarter-wave plate (optional) and a half-wave plate in
front of a polarizing beam splitter whose two outputs each feed a 50:50
fiber splitter with two counters. Pair events fall into four classes:

* ``aa`` / ``bb``: both photons in the transmitted / reflected port. Only
  half of these pairs split at the fiber splitter and register a
  coincidence, so these classes carry a detection factor of 1/2. The factor
  lives in the count model, not inside the measurement operators.
* ``ab`` / ``ba``: one photon per port. For a collinear pair the two labels
  are an arbitrary 50/50 split of the same physical event class; their
  operators are the two ordered-pair projectors, whose block-diagonal parts
  coincide. A single setting therefore yields 3 independent outcomes.

Accidental coincidences from uncorrelated singles are Poisson with mean
``singles1 * singles2 * window * duration``, spread uniformly over the four
classes. The reconstruction likelihood treats them as a known additive
background by default; subtracting them from the counts first is available
as a mirror of common practice.

The estimator is maximum likelihood over the physical family: ``rho``
proportional to ``T T^dag`` with ``T`` lower triangular and its
triplet-singlet entries pinned to zero (10 free real parameters). The trace
of ``T T^dag`` doubles as the pair-rate estimate, so no separate intensity
parameter is needed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .measurement import AnalyzerSetting
from .optics import JonesMatrix, hwp, lift, qwp
from .states import PolarizationDensityMatrix, ensure_physical

#: Detection-efficiency multiplier per outcome class (aa, ab, ba, bb).
DETECTION_FACTORS = (0.5, 1.0, 1.0, 0.5)

OUTCOME_LABELS = ("aa", "ab", "ba", "bb")

#: Settings whose effect vectors must span the 9 free state parameters.
REQUIRED_RANK = 9


class IncompleteSettingsError(ValueError):
    """The supplied settings cannot identify the state."""


@dataclass(frozen=True)
class WaveplateSetting:
    """Analyzer wave-plate angles, radians. ``qwp_angle=None`` means the
    quarter-wave plate is out of the beam."""

    setting_id: int
    qwp_angle: float | None
    hwp_angle: float

    def __post_init__(self):
        if self.qwp_angle is not None and not math.isfinite(self.qwp_angle):
            raise ValueError("qwp_angle must be finite or None")
        if not math.isfinite(self.hwp_angle):
            raise ValueError("hwp_angle must be finite")


@dataclass(frozen=True)
class CountRecord:
    """Counts for one setting: (n_aa, n_ab, n_ba, n_bb) plus run parameters.

    Counts are integer photocounts in practice; non-negative reals are
    accepted so noiseless expected counts and accidental-subtracted counts
    can flow through the same type.
    """

    setting_id: int
    counts: tuple[float, float, float, float]
    duration: float
    singles_rates: tuple[float, float]
    window: float

    def __post_init__(self):
        if len(self.counts) != 4:
            raise ValueError("exactly four outcome counts per record")
        if any((not math.isfinite(c)) or c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative and finite")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValueError("duration must be positive")
        if len(self.singles_rates) != 2 or any(
            (not math.isfinite(r)) or r < 0 for r in self.singles_rates
        ):
            raise ValueError("singles rates must be non-negative and finite")
        if not math.isfinite(self.window) or self.window < 0:
            raise ValueError("window must be non-negative")

    @property
    def accidental_mean(self) -> float:
        """Expected accidental coincidences over the whole record."""
        r1, r2 = self.singles_rates
        return r1 * r2 * self.window * self.duration


@dataclass(frozen=True)
class TomographyDataset:
    settings: tuple[WaveplateSetting, ...]
    records: tuple[CountRecord, ...]

    def __post_init__(self):
        ids = [s.setting_id for s in self.settings]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate setting_id")
        known = set(ids)
        for rec in self.records:
            if rec.setting_id not in known:
                raise ValueError(f"record references unknown setting {rec.setting_id}")

    def setting_for(self, setting_id: int) -> WaveplateSetting:
        for s in self.settings:
            if s.setting_id == setting_id:
                return s
        raise KeyError(setting_id)


@dataclass(frozen=True)
class CompletenessReport:
    """Rank of the measurement map over the 10-parameter state family.

    ``rank`` counts directions resolved on trace-one states (the trace
    functional is projected out); identification needs all 9.
    """

    rank: int
    raw_rank: int
    n_settings: int
    n_effects: int
    passes: bool


@dataclass(frozen=True)
class MleDiagnostics:
    log_likelihood: float
    iterations: int
    gradient_norm: float
    converged: bool
    n_starts: int
    start_spread: float
    settings_rank: int
    pair_rate_estimate: float
    mode: str


_DEFAULT_SETTINGS_DEG = (
    (0.0, 0.0),
    (0.0, 22.5),
    (0.0, 11.25),
    (45.0, 0.0),
    (45.0, 22.5),
    (45.0, 11.25),
    (90.0, 22.5),
    (22.5, 0.0),
    (22.5, 22.5),
    (67.5, 11.25),
)


def default_settings() -> tuple[WaveplateSetting, ...]:
    """The standard ten-setting analyzer sequence (qwp, hwp angles)."""
    return tuple(
        WaveplateSetting(
            setting_id=i, qwp_angle=math.radians(q), hwp_angle=math.radians(h)
        )
        for i, (q, h) in enumerate(_DEFAULT_SETTINGS_DEG)
    )


def _analyzer_unitary(setting: WaveplateSetting) -> np.ndarray:
    plate = hwp(setting.hwp_angle)
    if setting.qwp_angle is not None:
        plate = plate @ qwp(setting.qwp_angle)
    return lift(plate).entries


# Port projectors in the analyzer frame, symmetry basis. A transmitted
# photon is |H>, a reflected one |V>; |H1 V2> = (|psi+> + |psi->)/sqrt(2).
_P_AA = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
_P_BB = np.diag([0.0, 0.0, 1.0, 0.0]).astype(complex)
_HV_ORDERED = np.array([0.0, math.sqrt(0.5), 0.0, math.sqrt(0.5)], dtype=complex)
_VH_ORDERED = np.array([0.0, math.sqrt(0.5), 0.0, -math.sqrt(0.5)], dtype=complex)
_P_AB = np.outer(_HV_ORDERED, _HV_ORDERED.conj())
_P_BA = np.outer(_VH_ORDERED, _VH_ORDERED.conj())


def measurement_operators(setting: WaveplateSetting) -> list[np.ndarray]:
    """Four positive effects (aa, ab, ba, bb) for one analyzer setting.

    Built by propagating the beam-splitter port projectors backwards through
    the wave plates; the four effects sum to the identity.
    """
    u = _analyzer_unitary(setting)
    effects = [
        u.conj().T @ p @ u for p in (_P_AA, _P_AB, _P_BA, _P_BB)
    ]
    total = effects[0] + effects[1] + effects[2] + effects[3]
    assert np.max(np.abs(total - np.eye(4))) <= 1e-12
    return effects


def _block_feature(effect: np.ndarray) -> np.ndarray:
    """Real coordinates of an effect on the 10-parameter state family."""
    e = effect
    return np.array(
        [
            e[0, 0].real,
            e[1, 1].real,
            e[2, 2].real,
            e[3, 3].real,
            2 * e[0, 1].real,
            2 * e[0, 1].imag,
            2 * e[0, 2].real,
            2 * e[0, 2].imag,
            2 * e[1, 2].real,
            2 * e[1, 2].imag,
        ]
    )


def check_completeness(settings) -> CompletenessReport:
    """Rank test: can these settings identify every block-structured state?"""
    settings = tuple(settings)
    if not settings:
        raise ValueError("no settings supplied")
    rows = []
    for setting in settings:
        for effect in measurement_operators(setting):
            rows.append(_block_feature(effect))
    features = np.array(rows)
    trace_dir = np.zeros(10)
    trace_dir[:4] = 0.5  # unit vector along the trace functional
    projected = features - np.outer(features @ trace_dir, trace_dir)

    def _rank(m: np.ndarray) -> int:
        s = np.linalg.svd(m, compute_uv=False)
        return int(np.sum(s > 1e-9 * max(1.0, s[0])))

    rank = _rank(projected)
    return CompletenessReport(
        rank=rank,
        raw_rank=_rank(features),
        n_settings=len(settings),
        n_effects=len(rows),
        passes=rank >= REQUIRED_RANK,
    )


def outcome_probabilities(
    rho: PolarizationDensityMatrix, setting: WaveplateSetting
) -> np.ndarray:
    """Born probabilities of the four outcome classes (detection factors excluded)."""
    ensure_physical(rho)
    effects = measurement_operators(setting)
    p = np.array([np.trace(rho.entries @ e).real for e in effects])
    return np.clip(p, 0.0, None)


def simulate_counts(
    rho: PolarizationDensityMatrix,
    settings,
    singles_rate: float,
    duration: float,
    window: float,
    pair_rate: float,
    seed: int,
) -> TomographyDataset:
    """Draw Poisson counts for every setting, accidentals included.

    Detected-pair mean per outcome is ``pair_rate * duration * eta_k * p_k``
    with eta the detection factors; the accidental mean
    ``singles_rate^2 * window * duration`` is spread uniformly over the four
    outcomes. Reproducible for a fixed seed.
    """
    ensure_physical(rho)
    settings = tuple(settings)
    if not settings:
        raise ValueError("no settings supplied")
    for name, value in (
        ("singles_rate", singles_rate),
        ("duration", duration),
        ("window", window),
        ("pair_rate", pair_rate),
    ):
        if not math.isfinite(value) or value < 0:
            raise ValueError(f"{name} must be non-negative and finite")
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    eta = np.array(DETECTION_FACTORS)
    accidental = singles_rate * singles_rate * window * duration / 4.0
    records = []
    for setting in settings:
        p = outcome_probabilities(rho, setting)
        mean = pair_rate * duration * eta * p + accidental
        counts = rng.poisson(mean)
        records.append(
            CountRecord(
                setting_id=setting.setting_id,
                counts=tuple(int(c) for c in counts),
                duration=duration,
                singles_rates=(singles_rate, singles_rate),
                window=window,
            )
        )
    return TomographyDataset(settings=settings, records=tuple(records))


def tune_pair_rate(
    rho: PolarizationDensityMatrix,
    settings,
    singles_rate: float,
    duration: float,
    window: float,
    accidental_fraction: float,
) -> float:
    """Pair rate at which accidentals make up the requested fraction of counts."""
    if not 0 < accidental_fraction < 1:
        raise ValueError("accidental_fraction must be in (0, 1)")
    settings = tuple(settings)
    eta = np.array(DETECTION_FACTORS)
    detected_per_pairrate = sum(
        duration * float(eta @ outcome_probabilities(rho, s)) for s in settings
    )
    if detected_per_pairrate <= 0:
        raise ValueError("state produces no detectable coincidences")
    accidentals = len(settings) * singles_rate * singles_rate * window * duration
    wanted_detected = accidentals * (1.0 - accidental_fraction) / accidental_fraction
    return wanted_detected / detected_per_pairrate


def subtract_accidentals(dataset: TomographyDataset) -> TomographyDataset:
    """Subtract the expected accidentals (uniform split), clamping at zero."""
    corrected = []
    for rec in dataset.records:
        per_outcome = rec.accidental_mean / 4.0
        counts = tuple(max(0.0, float(c) - per_outcome) for c in rec.counts)
        corrected.append(
            CountRecord(
                setting_id=rec.setting_id,
                counts=counts,
                duration=rec.duration,
                singles_rates=rec.singles_rates,
                window=rec.window,
            )
        )
    return TomographyDataset(settings=dataset.settings, records=tuple(corrected))


# --- maximum likelihood -----------------------------------------------------

# Lower-triangular slots of the factor T: four real diagonals, then the
# complex triplet-block entries (1,0), (2,0), (2,1). Slot (3, j<3) stays
# zero, which pins the reconstruction to the block-structured family.
_DIAG_SLOTS = ((0, 0), (1, 1), (2, 2), (3, 3))
_COMPLEX_SLOTS = ((1, 0), (2, 0), (2, 1))
N_PARAMETERS = len(_DIAG_SLOTS) + 2 * len(_COMPLEX_SLOTS)


def _factor_from_params(theta: np.ndarray) -> np.ndarray:
    t = np.zeros((4, 4), dtype=complex)
    for k, (i, j) in enumerate(_DIAG_SLOTS):
        t[i, j] = theta[k]
    for k, (i, j) in enumerate(_COMPLEX_SLOTS):
        t[i, j] = theta[4 + 2 * k] + 1j * theta[5 + 2 * k]
    return t


def _params_gradient(grad_t: np.ndarray) -> np.ndarray:
    g = np.empty(N_PARAMETERS)
    for k, (i, j) in enumerate(_DIAG_SLOTS):
        g[k] = grad_t[i, j].real
    for k, (i, j) in enumerate(_COMPLEX_SLOTS):
        g[4 + 2 * k] = grad_t[i, j].real
        g[5 + 2 * k] = grad_t[i, j].imag
    return g


class _PoissonModel:
    """Stacked Poisson means ``mu = scale * Tr[T T^dag E] + background``."""

    def __init__(self, dataset: TomographyDataset, mode: str):
        effects = []
        scales = []
        counts = []
        background = []
        for rec in dataset.records:
            setting = dataset.setting_for(rec.setting_id)
            ops = measurement_operators(setting)
            per_outcome_acc = rec.accidental_mean / 4.0
            for k in range(4):
                effects.append(ops[k])
                scales.append(rec.duration * DETECTION_FACTORS[k])
                if mode == "subtracted":
                    counts.append(max(0.0, float(rec.counts[k]) - per_outcome_acc))
                    background.append(0.0)
                else:
                    counts.append(float(rec.counts[k]))
                    background.append(per_outcome_acc)
        self.effects = np.array(effects)
        self.scales = np.array(scales)
        self.counts = np.array(counts)
        self.background = np.array(background)
        self.total_counts = max(self.counts.sum(), 1.0)

    def nll_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        t = _factor_from_params(theta)
        rho_unnorm = t @ t.conj().T
        p = np.einsum("mij,ji->m", self.effects, rho_unnorm).real
        mu = np.maximum(self.scales * p + self.background, 1e-300)
        nll = float(np.sum(mu - self.counts * np.log(mu)) / self.total_counts)
        weight = self.scales * (1.0 - self.counts / mu) / self.total_counts
        g_rho = np.einsum("m,mij->ij", weight, self.effects)
        g_rho = 0.5 * (g_rho + g_rho.conj().T)
        grad_t = 2.0 * (g_rho @ t)
        return nll, _params_gradient(grad_t)

    def initial_pair_rate(self) -> float:
        net = np.maximum(self.counts - self.background, 0.0).sum()
        exposure = 0.75 * self.scales.sum() / 3.0  # rough mean efficiency
        return max(net / max(exposure, 1e-12), 1e-6)


def _start_parameters(pair_rate: float, rng: np.random.Generator | None) -> np.ndarray:
    theta = np.zeros(N_PARAMETERS)
    theta[:4] = math.sqrt(pair_rate / 4.0)
    if rng is not None:
        scale = math.sqrt(pair_rate) / 2.0
        theta = theta + rng.normal(scale=scale, size=N_PARAMETERS)
        theta[:4] = np.abs(theta[:4]) + 0.1 * math.sqrt(pair_rate / 4.0)
    return theta


def mle_reconstruct(
    dataset: TomographyDataset,
    mode: str = "background",
    starts: int = 1,
    seed: int = 0,
    gradient_tol: float = 1e-8,
    max_iterations: int = 2000,
) -> tuple[PolarizationDensityMatrix, MleDiagnostics]:
    """Maximum-likelihood state estimate from coincidence counts.

    ``mode='background'`` keeps the raw counts and puts the expected
    accidentals into the likelihood as a known additive background;
    ``mode='subtracted'`` removes them from the counts first. The objective
    is the Poisson negative log-likelihood per count, minimized with
    L-BFGS-B to a gradient tolerance of ``gradient_tol``; extra ``starts``
    rerun the fit from random factors and must land on the same state.
    """
    if mode not in ("background", "subtracted"):
        raise ValueError(f"unknown mode {mode!r}")
    if starts < 1:
        raise ValueError("starts must be >= 1")
    if not dataset.records:
        raise ValueError("dataset has no records")
    completeness = check_completeness(dataset.settings)
    if not completeness.passes:
        raise IncompleteSettingsError(
            f"settings resolve only {completeness.rank} of {REQUIRED_RANK} "
            "state parameters; add analyzer settings"
        )
    model = _PoissonModel(dataset, mode)
    rng = np.random.default_rng(seed)
    pair_rate0 = model.initial_pair_rate()

    solutions = []
    for start in range(starts):
        theta0 = _start_parameters(pair_rate0, rng if start > 0 else None)
        result = optimize.minimize(
            model.nll_and_grad,
            theta0,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": max_iterations,
                "maxfun": 10 * max_iterations,
                # push well past the public tolerance so independent starts
                # land on the same state to better than 1e-6 trace distance
                "ftol": 1e-17,
                "gtol": 0.01 * gradient_tol,
            },
        )
        t = _factor_from_params(result.x)
        rho_unnorm = t @ t.conj().T
        scale = float(np.trace(rho_unnorm).real)
        rho = PolarizationDensityMatrix(rho_unnorm / scale)
        grad_norm = float(np.max(np.abs(result.jac)))
        solutions.append(
            {
                "rho": rho,
                "nll": float(result.fun),
                "grad": grad_norm,
                "iterations": int(result.nit),
                "pair_rate": scale,
            }
        )

    best = min(solutions, key=lambda s: s["nll"])
    spread = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            spread = max(
                spread, _trace_distance(solutions[i]["rho"], solutions[j]["rho"])
            )
    diagnostics = MleDiagnostics(
        log_likelihood=-best["nll"] * model.total_counts,
        iterations=best["iterations"],
        gradient_norm=best["grad"],
        converged=best["grad"] <= gradient_tol,
        n_starts=starts,
        start_spread=spread,
        settings_rank=completeness.rank,
        pair_rate_estimate=best["pair_rate"],
        mode=mode,
    )
    return best["rho"], diagnostics


def _trace_distance(a: PolarizationDensityMatrix, b: PolarizationDensityMatrix) -> float:
    diff = a.entries - b.entries
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def log_likelihood(
    dataset: TomographyDataset,
    rho: PolarizationDensityMatrix,
    pair_rate: float | None = None,
    mode: str = "background",
) -> float:
    """Poisson log-likelihood of ``rho`` (up to the fixed ln n! terms).

    When ``pair_rate`` is omitted it is profiled out by a scalar
    optimization, so states can be compared on likelihood alone.
    """
    ensure_physical(rho)
    model = _PoissonModel(dataset, mode)
    p = np.einsum("mij,ji->m", model.effects, rho.entries).real

    def nll_of_rate(rate: float) -> float:
        mu = np.maximum(model.scales * p * rate + model.background, 1e-300)
        return float(np.sum(mu - model.counts * np.log(mu)))

    if pair_rate is None:
        bracket = optimize.minimize_scalar(
            lambda lr: nll_of_rate(math.exp(lr)),
            bounds=(-5.0, 25.0),
            method="bounded",
            options={"xatol": 1e-12},
        )
        return -float(bracket.fun)
    return -nll_of_rate(pair_rate)


# --- built-in example states -------------------------------------------------

# Diagonals (hh, psi+, vv, psi-) and one optional coherence per label. The
# psi+/psi- populations follow measured pair states spanning the dip
# (nearly indistinguishable, partially distinguishable, fully
# distinguishable, and a variant with extra VV population coherent with
# psi+); the entries not fixed by those populations are illustrative.
_FIXTURES: dict[str, tuple[tuple[float, float, float, float], complex]] = {
    "a": ((0.01, 0.94, 0.01, 0.04), 0.0),
    "b": ((0.02, 0.68, 0.02, 0.28), 0.0),
    "c": ((0.005, 0.49, 0.005, 0.50), 0.0),
    "d": ((0.03, 0.66, 0.15, 0.16), 0.08),
}


def fixture_state(label: str) -> PolarizationDensityMatrix:
    """Built-in reference states ``a``..``d`` (see module notes)."""
    try:
        diag, psi_plus_vv = _FIXTURES[label]
    except KeyError:
        raise KeyError(
            f"unknown fixture {label!r}; choose from {sorted(_FIXTURES)}"
        ) from None
    m = np.diag(np.array(diag, dtype=complex))
    m[1, 2] = psi_plus_vv
    m[2, 1] = np.conj(psi_plus_vv)
    rho = PolarizationDensityMatrix(m)
    ensure_physical(rho, f"fixture {label}")
    return rho


def fixture_labels() -> tuple[str, ...]:
    return tuple(sorted(_FIXTURES))


# --- counts file format ------------------------------------------------------

COUNTS_CSV_HEADER = (
    "setting_id",
    "qwp_deg",
    "hwp_deg",
    "n_aa",
    "n_ab",
    "n_ba",
    "n_bb",
    "duration_s",
    "singles1_hz",
    "singles2_hz",
    "window_s",
)


def _format_count(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def write_counts_csv(dataset: TomographyDataset, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(COUNTS_CSV_HEADER)
        for rec in dataset.records:
            setting = dataset.setting_for(rec.setting_id)
            qwp_deg = (
                "" if setting.qwp_angle is None else repr(math.degrees(setting.qwp_angle))
            )
            writer.writerow(
                [
                    setting.setting_id,
                    qwp_deg,
                    repr(math.degrees(setting.hwp_angle)),
                    *(_format_count(c) for c in rec.counts),
                    repr(float(rec.duration)),
                    repr(float(rec.singles_rates[0])),
                    repr(float(rec.singles_rates[1])),
                    repr(float(rec.window)),
                ]
            )


def read_counts_csv(path: str | Path) -> TomographyDataset:
    settings: dict[int, WaveplateSetting] = {}
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != COUNTS_CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(COUNTS_CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(COUNTS_CSV_HEADER):
                raise ValueError(f"{path}:{lineno}: expected {len(COUNTS_CSV_HEADER)} fields")
            try:
                sid = int(row[0])
                qwp_angle = None if row[1] == "" else math.radians(float(row[1]))
                setting = WaveplateSetting(
                    setting_id=sid,
                    qwp_angle=qwp_angle,
                    hwp_angle=math.radians(float(row[2])),
                )
                counts = tuple(float(c) for c in row[3:7])
                record = CountRecord(
                    setting_id=sid,
                    counts=counts,
                    duration=float(row[7]),
                    singles_rates=(float(row[8]), float(row[9])),
                    window=float(row[10]),
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if sid in settings:
                prev = settings[sid]
                if (prev.qwp_angle, prev.hwp_angle) != (
                    setting.qwp_angle,
                    setting.hwp_angle,
                ):
                    raise ValueError(
                        f"{path}:{lineno}: setting {sid} redefined with different angles"
                    )
            else:
                settings[sid] = setting
            records.append(record)
    if not records:
        raise ValueError(f"{path}: no data rows")
    ordered = tuple(settings[i] for i in sorted(settings))
    return TomographyDataset(settings=ordered, records=tuple(records))
