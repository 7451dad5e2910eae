"""Coincidence probabilities, distinguishability, and the delay channel.

The analyzer model: both photons of a collinear pair pass a half-wave plate
and a polarizing beam splitter, so each photon is projected onto
``|alpha> = (|H> + e^{i phi}|V>)/sqrt(2)`` or
``|beta>  = (|H> - e^{i phi}|V>)/sqrt(2)``. A coincidence is one photon in
each port. In the symmetry basis the coincidence projector splits into the
singlet itself plus ``(|HH> - e^{2 i phi}|VV>)/sqrt(2)`` from the triplet,
which gives the closed form used below.

Relative delay between the H and V photons is modeled as a mixing channel
parameterized by an even overlap function ``O(tau)`` in [0, 1]; see
``docs/delay_model.md`` for the derivation of the population mixing and the
coherence scaling factors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .states import (
    PolarizationDensityMatrix,
    ensure_block_structured,
    ensure_physical,
    make_distinguishable,
)

OVERLAP_SHAPES = ("triangular", "double_exponential")


class DegenerateVisibilityError(ZeroDivisionError):
    """Dip and baseline coincidence are both zero; visibility is undefined."""


@dataclass(frozen=True)
class AnalyzerSetting:
    """Analyzer phase ``phi`` (radians): analysis basis (|H> +- e^{i phi}|V>)/sqrt(2)."""

    phi: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise ValueError("analyzer phase must be finite")


@dataclass(frozen=True)
class DelayModel:
    """Wave-packet overlap as a function of relative delay.

    ``triangular`` drops linearly to zero at ``coherence_width``;
    ``double_exponential`` decays as ``exp(-|tau|/coherence_width)``, the
    correlation shape of cavity-filtered pairs.
    """

    coherence_width: float
    overlap_shape: str = "triangular"

    def __post_init__(self):
        if not (math.isfinite(self.coherence_width) and self.coherence_width > 0):
            raise ValueError("coherence_width must be positive and finite")
        if self.overlap_shape not in OVERLAP_SHAPES:
            raise ValueError(
                f"overlap_shape must be one of {OVERLAP_SHAPES}, got {self.overlap_shape!r}"
            )

    def overlap(self, tau: float) -> float:
        if not math.isfinite(tau):
            raise ValueError("delay must be finite")
        x = abs(tau) / self.coherence_width
        if self.overlap_shape == "triangular":
            return max(0.0, 1.0 - x)
        return math.exp(-x)


@dataclass(frozen=True, eq=False)
class HomCurve:
    """Coincidence probability versus relative delay."""

    delays: tuple[float, ...]
    coincidence_probabilities: tuple[float, ...]
    visibility: float

    def __post_init__(self):
        if len(self.delays) != len(self.coincidence_probabilities):
            raise ValueError("delays and probabilities must have equal length")


def _coincidence_value(m: np.ndarray, phi: float) -> float:
    phase = np.exp(2j * phi)
    return float(
        m[3, 3].real + 0.5 * (m[0, 0].real + m[2, 2].real) - (phase * m[0, 2]).real
    )


def coincidence_probability(
    rho: PolarizationDensityMatrix, setting: AnalyzerSetting
) -> float:
    """Probability that the pair splits across the two analyzer ports.

    Closed form: ``p(psi-) + (p(HH) + p(VV))/2 - Re[e^{2 i phi} rho_{HH,VV}]``.
    """
    ensure_physical(rho)
    return _coincidence_value(rho.entries, setting.phi)


def coincidence_probability_distinguishable(
    rho: PolarizationDensityMatrix, setting: AnalyzerSetting
) -> float:
    """Coincidence probability after the pair is made fully distinguishable.

    Reduces to ``1/2 - Re[e^{2 i phi} rho_{HH,VV}]``; the identity with the
    population-equalized state is asserted (on its raw entries, since that
    state need not stay PSD).
    """
    ensure_physical(rho)
    phase = np.exp(2j * setting.phi)
    value = float(0.5 - (phase * rho.entries[0, 2]).real)
    direct = _coincidence_value(make_distinguishable(rho).entries, setting.phi)
    assert abs(value - direct) <= 1e-12
    return value


def hom_visibility(rho: PolarizationDensityMatrix, setting: AnalyzerSetting) -> float:
    """Dip visibility ``(C_dist - C)/(C_dist + C)``.

    Equals ``(p2 - p4)/(2 - (p2 - p4) - 4 Re[e^{2 i phi} rho_{HH,VV}])`` with
    p2, p4 the psi+ and psi- populations; both forms are evaluated and must
    agree to 1e-12.
    """
    c = coincidence_probability(rho, setting)
    c_dist = coincidence_probability_distinguishable(rho, setting)
    denom = c_dist + c
    if abs(denom) < 1e-15:
        raise DegenerateVisibilityError(
            "coincidence probability vanishes both in and out of the dip"
        )
    value = (c_dist - c) / denom
    m = rho.entries
    gap = m[1, 1].real - m[3, 3].real
    pop_form = gap / (2.0 - gap - 4.0 * (np.exp(2j * setting.phi) * m[0, 2]).real)
    assert abs(value - pop_form) <= 1e-12
    return float(value)


def hom_dip_depth(rho: PolarizationDensityMatrix, setting: AnalyzerSetting) -> float:
    """Dip depth relative to the distinguishable baseline: ``(C_dist - C)/C_dist``.

    Alternative normalization of the same dip; reported alongside
    :func:`hom_visibility` because published dip figures use either one.
    """
    c = coincidence_probability(rho, setting)
    c_dist = coincidence_probability_distinguishable(rho, setting)
    if abs(c_dist) < 1e-15:
        raise DegenerateVisibilityError("no coincidences out of the dip")
    return float((c_dist - c) / c_dist)


def interferometric_visibility_bound(rho: PolarizationDensityMatrix) -> float:
    """Largest fringe visibility any lifted unitary can produce: ``(1-p4)/(1+p4)``.

    The singlet population p4 is invariant under every lifted unitary, so the
    port-coincidence probability stays within [p4, 1]; the bound follows.
    """
    ensure_physical(rho)
    p4 = float(rho.entries[3, 3].real)
    return (1.0 - p4) / (1.0 + p4)


def port_coincidence_probability(rho: PolarizationDensityMatrix) -> float:
    """Probability the two photons leave through different H/V splitter ports."""
    ensure_physical(rho)
    return float(rho.entries[1, 1].real + rho.entries[3, 3].real)


def _apply_overlap(rho: PolarizationDensityMatrix, ov: float) -> PolarizationDensityMatrix:
    m = rho.entries.copy()
    p2, p4 = m[1, 1], m[3, 3]
    half_sum = 0.5 * (p2 + p4)
    half_gap = 0.5 * (p2 - p4)
    m[1, 1] = half_sum + ov * half_gap
    m[3, 3] = half_sum - ov * half_gap
    amp = math.sqrt(ov)
    m[0, 1] *= amp
    m[1, 0] *= amp
    m[1, 2] *= amp
    m[2, 1] *= amp
    m[0, 2] *= ov
    m[2, 0] *= ov
    return PolarizationDensityMatrix(m)


def apply_delay(
    rho: PolarizationDensityMatrix, tau: float, model: DelayModel
) -> PolarizationDensityMatrix:
    """Relative H/V delay as a mixing channel on a block-structured state.

    With overlap ``O = model.overlap(tau)``: the psi+/psi- populations mix
    through ``[[(1+O)/2, (1-O)/2], [(1-O)/2, (1+O)/2]]``, coherences of the
    HH/VV populations with psi+ scale by ``sqrt(O)``, the HH-VV coherence
    scales by ``O``, and the HH/VV populations are untouched. Trace- and
    PSD-preserving for every O in [0, 1].
    """
    ensure_physical(rho)
    ensure_block_structured(rho)
    return _apply_overlap(rho, model.overlap(tau))


def hom_scan(
    rho0: PolarizationDensityMatrix,
    delays,
    model: DelayModel,
    setting: AnalyzerSetting,
) -> HomCurve:
    """Coincidence probability across a set of relative delays.

    Visibility is computed from the curve minimum against the zero-overlap
    baseline, ``(C_base - C_min)/(C_base + C_min)``.
    """
    delays = [float(t) for t in delays]
    if not delays:
        raise ValueError("need at least one delay")
    ensure_physical(rho0)
    ensure_block_structured(rho0)
    probs = [
        coincidence_probability(_apply_overlap(rho0, model.overlap(t)), setting)
        for t in delays
    ]
    baseline = coincidence_probability(_apply_overlap(rho0, 0.0), setting)
    c_min = min(probs)
    if abs(baseline + c_min) < 1e-15:
        raise DegenerateVisibilityError(
            "coincidence probability vanishes both in and out of the dip"
        )
    visibility = (baseline - c_min) / (baseline + c_min)
    return HomCurve(
        delays=tuple(delays),
        coincidence_probabilities=tuple(probs),
        visibility=float(visibility),
    )


HOM_CSV_HEADER = ("delay", "coincidence_probability")


def write_hom_csv(curve: HomCurve, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HOM_CSV_HEADER)
        for tau, prob in zip(curve.delays, curve.coincidence_probabilities):
            writer.writerow([repr(float(tau)), repr(float(prob))])


def read_hom_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != HOM_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(HOM_CSV_HEADER)}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r]
    data = np.array(rows, dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]
