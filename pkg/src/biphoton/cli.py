"""Command-line interface.

Angles are degrees on the command line and converted to radians internally;
phases (``--phi``, NOON phase) are radians. Every stochastic command takes a
``--seed`` and is reproducible byte for byte. Exit codes: 0 success, 2
configuration or input error, 3 reconstruction did not converge.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import fringes, measurement, states, tomography
from .states import FORMAT_VERSION, InvalidStateError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3


class CliError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


def _named_state(name: str, phi: float) -> states.PolarizationDensityMatrix:
    if name == "noon":
        return states.ideal_noon(phi).as_density_matrix()
    if name == "psi-plus":
        return states.psi_plus_state().as_density_matrix()
    if name == "psi-minus":
        return states.psi_minus_state().as_density_matrix()
    if name == "mixed":
        return states.PolarizationDensityMatrix.maximally_mixed()
    if name.startswith("fixture-"):
        label = name.removeprefix("fixture-")
        try:
            return tomography.fixture_state(label)
        except KeyError as exc:
            raise CliError(str(exc)) from exc
    raise CliError(f"unknown state {name!r}")


def _resolve_state(args) -> states.PolarizationDensityMatrix:
    if getattr(args, "state_json", None):
        return states.load_state(args.state_json)
    if getattr(args, "state", None):
        return _named_state(args.state, getattr(args, "phi", 0.0))
    raise CliError("provide --state NAME or --state-json PATH")


_STATE_CHOICES = (
    "noon",
    "psi-plus",
    "psi-minus",
    "mixed",
    "fixture-a",
    "fixture-b",
    "fixture-c",
    "fixture-d",
)


def _add_state_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--state", choices=_STATE_CHOICES, help="built-in state")
    parser.add_argument(
        "--phi", type=float, default=0.0, help="NOON phase in radians (with --state noon)"
    )
    parser.add_argument("--state-json", help="density-matrix JSON file instead of --state")


def _parse_angle_grid(text: str) -> np.ndarray:
    """Parse ``start..stop/count`` (degrees, stop exclusive) into radians."""
    try:
        span, count = text.split("/")
        start, stop = span.split("..")
        start_deg, stop_deg, n = float(start), float(stop), int(count)
    except ValueError as exc:
        raise CliError(f"bad angle grid {text!r}; expected like 0..180/64") from exc
    if n < 1 or stop_deg <= start_deg:
        raise CliError(f"bad angle grid {text!r}")
    return np.radians(np.linspace(start_deg, stop_deg, n, endpoint=False))


def _write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    rho = _resolve_state(args)
    dataset = tomography.simulate_counts(
        rho,
        tomography.default_settings(),
        singles_rate=args.singles_rate,
        duration=args.duration,
        window=args.window,
        pair_rate=args.pair_rate,
        seed=args.seed,
    )
    tomography.write_counts_csv(dataset, args.out)
    truth_path = args.truth or str(args.out) + ".truth.json"
    states.save_state(truth_path, rho)
    print(f"wrote {args.out} and {truth_path}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    dataset = tomography.read_counts_csv(args.counts)
    try:
        rho, diag = tomography.mle_reconstruct(
            dataset, mode=args.mode, starts=args.starts, seed=args.seed
        )
    except tomography.IncompleteSettingsError as exc:
        raise CliError(str(exc)) from exc
    states.save_state(args.out, rho)
    diag_path = args.diagnostics or str(args.out) + ".diagnostics.json"
    _write_json(
        diag_path,
        {
            "format_version": FORMAT_VERSION,
            "log_likelihood": diag.log_likelihood,
            "iterations": diag.iterations,
            "gradient_norm": diag.gradient_norm,
            "converged": diag.converged,
            "n_starts": diag.n_starts,
            "start_spread_trace_distance": diag.start_spread,
            "settings_rank": diag.settings_rank,
            "pair_rate_estimate_hz": diag.pair_rate_estimate,
            "mode": diag.mode,
        },
    )
    if not diag.converged:
        print(
            f"reconstruction did not converge (gradient norm {diag.gradient_norm:.2e}); "
            f"outputs written to {args.out} and {diag_path}",
            file=sys.stderr,
        )
        return EXIT_NO_CONVERGENCE
    print(f"wrote {args.out} and {diag_path}")
    return EXIT_OK


def cmd_hom_scan(args) -> int:
    rho = _resolve_state(args)
    model = measurement.DelayModel(
        coherence_width=args.coherence_width, overlap_shape=args.shape
    )
    setting = measurement.AnalyzerSetting(phi=math.radians(args.analyzer_phi_deg))
    delays = np.linspace(args.tau_min, args.tau_max, args.steps)
    curve = measurement.hom_scan(rho, delays, model, setting)
    measurement.write_hom_csv(curve, args.out)
    report = {
        "format_version": FORMAT_VERSION,
        "scan_visibility": curve.visibility,
        "analyzer_phi_deg": args.analyzer_phi_deg,
    }
    try:
        report["hom_visibility"] = measurement.hom_visibility(rho, setting)
        report["hom_dip_depth"] = measurement.hom_dip_depth(rho, setting)
    except measurement.DegenerateVisibilityError as exc:
        report["hom_visibility"] = None
        report["hom_dip_depth"] = None
        report["note"] = str(exc)
    if args.report:
        _write_json(args.report, report)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_fringe(args) -> int:
    rho = states.load_state(args.state_json)
    angles = _parse_angle_grid(args.angles)
    scan = fringes.fringe_scan(rho, angles, mode=args.mode)
    fringes.write_fringe_csv(scan, args.out)
    fit_path = args.fit_out or str(args.out) + ".fit.json"
    fringes.write_fringe_fit_json(scan, fit_path)
    print(f"wrote {args.out} and {fit_path}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    rho = states.load_state(args.state_json)
    setting = measurement.AnalyzerSetting(phi=math.radians(args.analyzer_phi_deg))
    pops = states.populations(rho)
    fid, phase = fringes.noon_fidelity(rho)
    report = {
        "format_version": FORMAT_VERSION,
        "populations": {
            "hh": pops.hh,
            "psi_plus": pops.psi_plus,
            "vv": pops.vv,
            "psi_minus": pops.psi_minus,
        },
        "analyzer_phi_deg": args.analyzer_phi_deg,
        "coincidence_probability": measurement.coincidence_probability(rho, setting),
        "coincidence_probability_distinguishable": (
            measurement.coincidence_probability_distinguishable(rho, setting)
        ),
        "interferometric_visibility_bound": (
            measurement.interferometric_visibility_bound(rho)
        ),
        "noon_fidelity": fid,
        "noon_phase_rad": phase,
    }
    try:
        report["hom_visibility"] = measurement.hom_visibility(rho, setting)
        report["hom_dip_depth"] = measurement.hom_dip_depth(rho, setting)
    except measurement.DegenerateVisibilityError as exc:
        report["hom_visibility"] = None
        report["hom_dip_depth"] = None
        report["note"] = str(exc)
    if args.out:
        _write_json(args.out, report)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_fixtures(args) -> int:
    if args.list:
        for label in tomography.fixture_labels():
            print(f"fixture-{label}")
        return EXIT_OK
    if not args.id:
        raise CliError("provide --id LABEL or --list")
    try:
        rho = tomography.fixture_state(args.id)
    except KeyError as exc:
        raise CliError(str(exc)) from exc
    out = args.out or f"fixture-{args.id}.json"
    states.save_state(out, rho)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biphoton",
        description="Photon-pair polarization toolkit: simulate, reconstruct, analyze.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate tomography counts for a known state")
    _add_state_options(p)
    p.add_argument("--pair-rate", type=float, default=200.0, help="detected pairs per second")
    p.add_argument("--singles-rate", type=float, default=1e4, help="singles per second per arm")
    p.add_argument("--duration", type=float, default=60.0, help="seconds per setting")
    p.add_argument("--window", type=float, default=150e-9, help="coincidence window, seconds")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="counts CSV path")
    p.add_argument("--truth", help="ground-truth state JSON path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="maximum-likelihood state from counts CSV")
    p.add_argument("counts", help="counts CSV path")
    p.add_argument("--out", required=True, help="reconstructed state JSON path")
    p.add_argument("--diagnostics", help="diagnostics JSON path")
    p.add_argument("--mode", choices=("background", "subtracted"), default="background")
    p.add_argument("--starts", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("hom-scan", help="coincidence dip versus relative delay")
    _add_state_options(p)
    p.add_argument("--coherence-width", type=float, default=1.0)
    p.add_argument("--shape", choices=measurement.OVERLAP_SHAPES, default="triangular")
    p.add_argument("--tau-min", type=float, default=-2.0)
    p.add_argument("--tau-max", type=float, default=2.0)
    p.add_argument("--steps", type=int, default=81)
    p.add_argument("--analyzer-phi-deg", type=float, default=0.0)
    p.add_argument("--out", required=True, help="curve CSV path")
    p.add_argument("--report", help="visibility report JSON path (default: stdout)")
    p.set_defaults(func=cmd_hom_scan)

    p = sub.add_parser("fringe", help="half-wave-plate fringe scan of a state file")
    p.add_argument("state_json", help="density-matrix JSON path")
    p.add_argument("--angles", default="0..180/64", help="grid as start..stop/count, degrees")
    p.add_argument("--mode", choices=("circular", "hv"), default="circular")
    p.add_argument("--out", required=True, help="fringe CSV path")
    p.add_argument("--fit-out", help="fit JSON path (default: <out>.fit.json)")
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("metrics", help="populations, visibilities, NOON fidelity")
    p.add_argument("state_json", help="density-matrix JSON path")
    p.add_argument("--analyzer-phi-deg", type=float, default=0.0)
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("fixtures", help="write built-in reference states")
    p.add_argument("--id", help="fixture label (a, b, c, d)")
    p.add_argument("--out", help="output JSON path")
    p.add_argument("--list", action="store_true", help="list available fixtures")
    p.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidStateError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
