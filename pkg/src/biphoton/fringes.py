"""NOON-state fidelity and phase super-resolution fringes.

A half-wave plate scan in front of the polarizing beam splitter turns a
two-photon NOON state into coincidence fringes that oscillate at twice the
frequency of the single-photon fringes taken with one polarization blocked;
this module simulates both curves through the same Jones pipeline and fits
them with a common sinusoid model ``offset * (1 + visibility * cos(2 pi x /
period + phase))``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from .measurement import port_coincidence_probability
from .optics import apply_unitary, hwp, lift, qwp
from .states import FORMAT_VERSION, PolarizationDensityMatrix, ensure_physical

MIN_SCAN_POINTS = 8


@dataclass(frozen=True)
class SinusoidFit:
    offset: float
    visibility: float
    period: float
    phase: float
    residual_norm: float
    period_identifiable: bool
    converged: bool


@dataclass(frozen=True, eq=False)
class FringeScan:
    """Single and coincidence fringe curves over a half-wave-plate scan."""

    angles: np.ndarray
    singles: np.ndarray
    coincidences: np.ndarray
    singles_fit: SinusoidFit
    coincidence_fit: SinusoidFit

    def __post_init__(self):
        for name in ("angles", "singles", "coincidences"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.angles) == len(self.singles) == len(self.coincidences)):
            raise ValueError("curves must share the angle grid")
        for fit in (self.singles_fit, self.coincidence_fit):
            if not -1e-9 <= fit.visibility <= 1.0 + 1e-9:
                raise ValueError(f"fitted visibility {fit.visibility} outside [0, 1]")
            if not fit.period > 0:
                raise ValueError("fitted period must be positive")


def noon_fidelity(rho: PolarizationDensityMatrix) -> tuple[float, float]:
    """Best fidelity to the NOON family and the phase that attains it.

    ``F(phi) = (p_HH + p_VV)/2 + Re[e^{i phi} rho_{HH,VV}]`` is maximal at
    ``phi = -arg(rho_{HH,VV})``, where it equals
    ``(p_HH + p_VV)/2 + |rho_{HH,VV}|``.
    """
    ensure_physical(rho)
    m = rho.entries
    coh = m[0, 2]
    best_phi = 0.0 if coh == 0 else float(-np.angle(coh))
    best = float(0.5 * (m[0, 0].real + m[2, 2].real) + abs(coh))
    return min(best, 1.0), best_phi


def fringe_scan(
    rho: PolarizationDensityMatrix, angles, mode: str = "circular"
) -> FringeScan:
    """Simulate a half-wave-plate scan and fit both fringe curves.

    ``mode='circular'`` scans the state as given; this is the configuration
    for the symmetrized |HV> pair, which is a NOON state in the circular
    basis and picks up twice the rotation phase of a single photon. An H/V
    NOON state is invariant under the rotations a half-wave plate applies,
    so ``mode='hv'`` first undoes the basis conversion with a quarter-wave
    plate at -45 degrees and then runs the same scan.

    The coincidence curve is the probability that the pair splits across the
    beam-splitter ports; the singles curve is the transmitted-port
    probability for a single H photon sent through the same plate, the
    one-polarization-blocked configuration. Both go through the same Jones
    pipeline rather than an analytic shortcut.
    """
    ensure_physical(rho)
    angles = np.array([float(a) for a in np.atleast_1d(angles)], dtype=float)
    if angles.size < MIN_SCAN_POINTS:
        raise ValueError(f"need at least {MIN_SCAN_POINTS} scan angles")
    if mode not in ("circular", "hv"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "hv":
        rho = apply_unitary(rho, lift(qwp(-np.pi / 4)))
    h_in = np.array([1.0, 0.0], dtype=complex)
    singles = np.empty_like(angles)
    coincidences = np.empty_like(angles)
    for i, theta in enumerate(angles):
        plate = hwp(theta)
        singles[i] = abs(plate.entries[0, :] @ h_in) ** 2
        coincidences[i] = port_coincidence_probability(
            apply_unitary(rho, lift(plate))
        )
    return FringeScan(
        angles=angles,
        singles=singles,
        coincidences=coincidences,
        singles_fit=fit_sinusoid(angles, singles, constant_atol=1e-12),
        coincidence_fit=fit_sinusoid(angles, coincidences, constant_atol=1e-12),
    )


def _linear_fit_at_frequency(x, y, freq):
    design = np.column_stack(
        [np.ones_like(x), np.cos(2 * np.pi * freq * x), np.sin(2 * np.pi * freq * x)]
    )
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    return coef, float(resid @ resid)


def fit_sinusoid(xs, ys, constant_atol: float = 0.0) -> SinusoidFit:
    """Least-squares fit of ``offset * (1 + v cos(2 pi x / period + phase))``.

    The period is seeded from a dense frequency scan (each candidate solved
    as a linear problem) and refined together with the other parameters.
    Near-constant data gets ``visibility = 0`` and the flag
    ``period_identifiable=False`` with the scan span as a placeholder period;
    constancy is judged against ``constant_atol`` plus a relative term, so
    callers that know the physical scale of ``ys`` can keep numerical dust
    from being fit as a fringe.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("xs and ys must be equal-length 1-d arrays")
    if x.size < MIN_SCAN_POINTS:
        raise ValueError(f"need at least {MIN_SCAN_POINTS} samples")
    if np.any(y < -1e-12):
        raise ValueError("curve values must be non-negative")
    span = float(x.max() - x.min())
    if span <= 0:
        raise ValueError("xs must span a nonzero range")

    offset0 = float(y.mean())
    flat_rss = float(np.sum((y - offset0) ** 2))
    scale = max(float(np.max(np.abs(y))), 1e-300)
    flat_tol = constant_atol + 1e-12 * scale
    if flat_rss <= flat_tol * flat_tol * y.size:
        return SinusoidFit(
            offset=offset0,
            visibility=0.0,
            period=span,
            phase=0.0,
            residual_norm=math.sqrt(flat_rss),
            period_identifiable=False,
            converged=True,
        )

    min_gap = float(np.min(np.diff(np.sort(x))))
    freqs = np.linspace(0.5 / span, 0.5 / max(min_gap, 1e-12), 2048)
    best_freq, best_coef, best_rss = None, None, math.inf
    for freq in freqs:
        coef, rss = _linear_fit_at_frequency(x, y, freq)
        if rss < best_rss:
            best_freq, best_coef, best_rss = freq, coef, rss

    def residuals(params):
        c0, a, b, freq = params
        return c0 + a * np.cos(2 * np.pi * freq * x) + b * np.sin(2 * np.pi * freq * x) - y

    start = np.array([best_coef[0], best_coef[1], best_coef[2], best_freq])
    result = optimize.least_squares(
        residuals, start, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=5000
    )
    c0, a, b, freq = result.x
    amplitude = math.hypot(a, b)
    converged = bool(result.status > 0)
    if c0 <= 0 or amplitude <= max(1e-9 * max(abs(c0), scale), constant_atol):
        return SinusoidFit(
            offset=float(c0),
            visibility=0.0,
            period=span,
            phase=0.0,
            residual_norm=float(np.linalg.norm(result.fun)),
            period_identifiable=False,
            converged=converged,
        )
    visibility = amplitude / c0
    if visibility <= 1.0 + 1e-9:
        visibility = min(visibility, 1.0)  # clip float dust, keep real excess visible
    return SinusoidFit(
        offset=float(c0),
        visibility=float(visibility),
        period=float(1.0 / abs(freq)),
        phase=float(math.atan2(-b, a)),
        residual_norm=float(np.linalg.norm(result.fun)),
        period_identifiable=True,
        converged=converged,
    )


# --- file formats ------------------------------------------------------------

FRINGE_CSV_HEADER = ("angle_deg", "singles", "coincidences")


def write_fringe_csv(scan: FringeScan, path: str | Path) -> None:
    """Write the scan curves, normalized so each fitted offset becomes 1.

    Curves whose fitted offset is numerically tiny are written as-is rather
    than blown up by the normalization.
    """
    s_norm = scan.singles_fit.offset if scan.singles_fit.offset > 1e-9 else 1.0
    c_norm = scan.coincidence_fit.offset if scan.coincidence_fit.offset > 1e-9 else 1.0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRINGE_CSV_HEADER)
        for theta, s, c in zip(scan.angles, scan.singles, scan.coincidences):
            writer.writerow(
                [
                    repr(float(math.degrees(theta))),
                    repr(float(s / s_norm)),
                    repr(float(c / c_norm)),
                ]
            )


def read_fringe_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back a fringe CSV as (angles_deg, singles, coincidences)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != FRINGE_CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(FRINGE_CSV_HEADER)}")
        rows = [(float(r[0]), float(r[1]), float(r[2])) for r in reader if r]
    data = np.array(rows, dtype=float).reshape(-1, 3)
    return data[:, 0], data[:, 1], data[:, 2]


def _fit_dict(fit: SinusoidFit) -> dict:
    return {
        "offset": fit.offset,
        "visibility": fit.visibility,
        "period_deg": math.degrees(fit.period),
        "phase_rad": fit.phase,
        "residual_norm": fit.residual_norm,
        "period_identifiable": fit.period_identifiable,
        "converged": fit.converged,
    }


def write_fringe_fit_json(scan: FringeScan, path: str | Path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "singles_fit": _fit_dict(scan.singles_fit),
        "coincidence_fit": _fit_dict(scan.coincidence_fit),
        "period_ratio_singles_over_coincidences": (
            scan.singles_fit.period / scan.coincidence_fit.period
            if scan.coincidence_fit.period_identifiable
            and scan.singles_fit.period_identifiable
            else None
        ),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
