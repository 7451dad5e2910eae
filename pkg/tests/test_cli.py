"""End-to-end command-line workflows through ``cli.main``."""

import json

import numpy as np
import pytest

from biphoton import cli
from biphoton.fringes import read_fringe_csv
from biphoton.measurement import read_hom_csv
from biphoton.states import (
    PolarizationDensityMatrix,
    ideal_noon,
    load_state,
    populations,
    psi_plus_state,
    save_state,
    state_fidelity,
)
from biphoton.tomography import (
    MleDiagnostics,
    check_completeness,
    default_settings,
    fixture_state,
    read_counts_csv,
    simulate_counts,
    write_counts_csv,
)


@pytest.fixture(scope="module")
def psi_plus_counts(tmp_path_factory):
    path = tmp_path_factory.mktemp("counts") / "psi_plus.csv"
    code = cli.main(
        ["simulate", "--state", "psi-plus", "--seed", "11", "--out", str(path)]
    )
    assert code == 0
    return path


class TestSimulate:
    def test_writes_counts_and_truth(self, tmp_path):
        out = tmp_path / "counts.csv"
        assert (
            cli.main(["simulate", "--state", "psi-plus", "--seed", "7", "--out", str(out)])
            == 0
        )
        dataset = read_counts_csv(out)
        assert len(dataset.settings) == len(default_settings())
        truth = load_state(str(out) + ".truth.json")
        assert state_fidelity(truth, psi_plus_state().as_density_matrix()) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_same_seed_is_byte_identical(self, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"]
        for path, seed in zip(paths, ("7", "7", "8")):
            assert (
                cli.main(
                    ["simulate", "--state", "fixture-a", "--seed", seed, "--out", str(path)]
                )
                == 0
            )
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert paths[0].read_bytes() != paths[2].read_bytes()

    def test_noon_phase_recorded_in_truth(self, tmp_path):
        out = tmp_path / "counts.csv"
        truth = tmp_path / "truth.json"
        code = cli.main(
            [
                "simulate",
                "--state",
                "noon",
                "--phi",
                "0.2",
                "--seed",
                "1",
                "--out",
                str(out),
                "--truth",
                str(truth),
            ]
        )
        assert code == 0
        rho = load_state(truth)
        assert state_fidelity(rho, ideal_noon(0.2).as_density_matrix()) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_requires_some_state(self, tmp_path, capsys):
        code = cli.main(["simulate", "--seed", "1", "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestReconstruct:
    def test_round_trip_recovers_psi_plus(self, psi_plus_counts, tmp_path):
        out = tmp_path / "rho.json"
        assert cli.main(["reconstruct", str(psi_plus_counts), "--out", str(out)]) == 0
        rho = load_state(out)
        assert state_fidelity(rho, psi_plus_state().as_density_matrix()) >= 0.98
        diag = json.loads((tmp_path / "rho.json.diagnostics.json").read_text())
        assert diag["converged"] is True
        assert diag["settings_rank"] == 9
        assert diag["mode"] == "background"

    def test_mixed_state_round_trip_populations(self, tmp_path):
        counts = tmp_path / "mixed.csv"
        out = tmp_path / "mixed.json"
        assert cli.main(["simulate", "--state", "mixed", "--seed", "3", "--out", str(counts)]) == 0
        assert cli.main(["reconstruct", str(counts), "--out", str(out), "--mode", "subtracted"]) == 0
        pops = populations(load_state(out))
        for p in pops:
            assert p == pytest.approx(0.25, abs=0.02)

    def test_rank_deficient_counts_exit_with_config_error(self, tmp_path, capsys):
        few = default_settings()[:4]
        report = check_completeness(few)
        assert not report.passes
        dataset = simulate_counts(
            fixture_state("a"),
            few,
            singles_rate=1e4,
            duration=60.0,
            window=150e-9,
            pair_rate=200.0,
            seed=5,
        )
        counts = tmp_path / "few.csv"
        write_counts_csv(dataset, counts)
        code = cli.main(["reconstruct", str(counts), "--out", str(tmp_path / "r.json")])
        assert code == 2
        assert "add analyzer settings" in capsys.readouterr().err

    def test_nonconvergence_exits_3(self, psi_plus_counts, tmp_path, monkeypatch, capsys):
        diag = MleDiagnostics(
            log_likelihood=-1.0,
            iterations=2000,
            gradient_norm=1e-3,
            converged=False,
            n_starts=1,
            start_spread=0.0,
            settings_rank=9,
            pair_rate_estimate=200.0,
            mode="background",
        )
        monkeypatch.setattr(
            cli.tomography,
            "mle_reconstruct",
            lambda *a, **k: (PolarizationDensityMatrix.maximally_mixed(), diag),
        )
        out = tmp_path / "rho.json"
        code = cli.main(["reconstruct", str(psi_plus_counts), "--out", str(out)])
        assert code == 3
        assert "did not converge" in capsys.readouterr().err
        assert out.exists()
        written = json.loads((tmp_path / "rho.json.diagnostics.json").read_text())
        assert written["converged"] is False

    def test_missing_counts_file_exits_2(self, tmp_path, capsys):
        code = cli.main(
            ["reconstruct", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "r.json")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestHomScanCommand:
    def test_psi_plus_dip_report(self, tmp_path):
        out = tmp_path / "dip.csv"
        report_path = tmp_path / "dip.json"
        code = cli.main(
            [
                "hom-scan",
                "--state",
                "psi-plus",
                "--out",
                str(out),
                "--report",
                str(report_path),
            ]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["scan_visibility"] == pytest.approx(1.0, abs=1e-12)
        assert report["hom_visibility"] == pytest.approx(1.0, abs=1e-12)
        assert report["hom_dip_depth"] == pytest.approx(1.0, abs=1e-12)
        delays, probs = read_hom_csv(out)
        assert len(delays) == 81
        assert probs.min() == pytest.approx(0.0, abs=1e-12)
        assert probs[0] == pytest.approx(0.5, abs=1e-12)

    def test_degenerate_noon_reports_nulls(self, tmp_path):
        report_path = tmp_path / "noon.json"
        code = cli.main(
            [
                "hom-scan",
                "--state",
                "noon",
                "--out",
                str(tmp_path / "noon.csv"),
                "--report",
                str(report_path),
            ]
        )
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["scan_visibility"] == pytest.approx(1.0, abs=1e-12)
        assert report["hom_visibility"] is None
        assert report["hom_dip_depth"] is None
        assert "note" in report

    def test_report_on_stdout_by_default(self, tmp_path, capsys):
        code = cli.main(
            ["hom-scan", "--state", "fixture-b", "--out", str(tmp_path / "b.csv")]
        )
        assert code == 0
        out_text = capsys.readouterr().out
        body = out_text[: out_text.rfind("wrote ")]
        report = json.loads(body)
        assert report["hom_visibility"] == pytest.approx(0.25, abs=1e-12)

    def test_double_exponential_shape(self, tmp_path):
        code = cli.main(
            [
                "hom-scan",
                "--state",
                "fixture-a",
                "--shape",
                "double_exponential",
                "--out",
                str(tmp_path / "a.csv"),
                "--report",
                str(tmp_path / "a.json"),
            ]
        )
        assert code == 0
        _, probs = read_hom_csv(tmp_path / "a.csv")
        assert probs.min() > 0.04


class TestFringeCommand:
    def test_psi_plus_super_resolution(self, tmp_path):
        state_path = tmp_path / "psi.json"
        save_state(state_path, psi_plus_state().as_density_matrix())
        out = tmp_path / "fringe.csv"
        fit_path = tmp_path / "fit.json"
        code = cli.main(
            ["fringe", str(state_path), "--out", str(out), "--fit-out", str(fit_path)]
        )
        assert code == 0
        fit = json.loads(fit_path.read_text())
        assert fit["period_ratio_singles_over_coincidences"] == pytest.approx(2.0, rel=1e-6)
        assert fit["coincidence_fit"]["period_deg"] == pytest.approx(45.0, rel=1e-6)
        assert fit["coincidence_fit"]["visibility"] == pytest.approx(1.0, abs=1e-9)
        angles_deg, singles, coincidences = read_fringe_csv(out)
        assert len(angles_deg) == 64
        assert angles_deg[0] == 0.0
        assert np.mean(singles) == pytest.approx(1.0, rel=1e-6)

    def test_hv_mode_converts_noon_state(self, tmp_path):
        state_path = tmp_path / "noon.json"
        save_state(state_path, ideal_noon(0.0).as_density_matrix())
        fit_path = tmp_path / "fit.json"
        code = cli.main(
            [
                "fringe",
                str(state_path),
                "--mode",
                "hv",
                "--out",
                str(tmp_path / "f.csv"),
                "--fit-out",
                str(fit_path),
            ]
        )
        assert code == 0
        fit = json.loads(fit_path.read_text())
        assert fit["coincidence_fit"]["visibility"] == pytest.approx(1.0, abs=1e-9)
        assert fit["period_ratio_singles_over_coincidences"] == pytest.approx(2.0, rel=1e-6)

    def test_default_fit_path(self, tmp_path):
        state_path = tmp_path / "psi.json"
        save_state(state_path, psi_plus_state().as_density_matrix())
        out = tmp_path / "fringe.csv"
        assert cli.main(["fringe", str(state_path), "--out", str(out)]) == 0
        assert (tmp_path / "fringe.csv.fit.json").exists()

    @pytest.mark.parametrize("grid", ["junk", "0..180", "180..0/64", "0..180/0"])
    def test_bad_angle_grid_exits_2(self, tmp_path, capsys, grid):
        state_path = tmp_path / "psi.json"
        save_state(state_path, psi_plus_state().as_density_matrix())
        code = cli.main(
            ["fringe", str(state_path), "--angles", grid, "--out", str(tmp_path / "f.csv")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_state_file_exits_2(self, tmp_path, capsys):
        code = cli.main(
            ["fringe", str(tmp_path / "nope.json"), "--out", str(tmp_path / "f.csv")]
        )
        assert code == 2
        assert "error:" in capsys.readouterr().err


class TestMetricsCommand:
    def test_fixture_a_report(self, tmp_path):
        state_path = tmp_path / "a.json"
        assert cli.main(["fixtures", "--id", "a", "--out", str(state_path)]) == 0
        report_path = tmp_path / "metrics.json"
        assert cli.main(["metrics", str(state_path), "--out", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        assert report["populations"]["psi_plus"] == pytest.approx(0.94, abs=1e-12)
        assert report["coincidence_probability"] == pytest.approx(0.05, abs=1e-12)
        assert report["interferometric_visibility_bound"] == pytest.approx(
            0.96 / 1.04, abs=1e-12
        )
        assert report["hom_visibility"] == pytest.approx(0.9 / 1.1, abs=1e-12)
        assert report["hom_dip_depth"] == pytest.approx(0.9, abs=1e-12)

    def test_noon_fidelity_and_phase(self, tmp_path, capsys):
        state_path = tmp_path / "noon.json"
        save_state(state_path, ideal_noon(0.2).as_density_matrix())
        assert cli.main(["metrics", str(state_path)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["noon_fidelity"] == pytest.approx(1.0, abs=1e-12)
        assert report["noon_phase_rad"] == pytest.approx(0.2, abs=1e-12)


class TestFixturesCommand:
    def test_list(self, capsys):
        assert cli.main(["fixtures", "--list"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines == ["fixture-a", "fixture-b", "fixture-c", "fixture-d"]

    def test_written_file_matches_library_state(self, tmp_path):
        out = tmp_path / "d.json"
        assert cli.main(["fixtures", "--id", "d", "--out", str(out)]) == 0
        assert state_fidelity(load_state(out), fixture_state("d")) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_unknown_label_exits_2(self, tmp_path, capsys):
        code = cli.main(["fixtures", "--id", "zz", "--out", str(tmp_path / "z.json")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_requires_id_or_list(self, capsys):
        assert cli.main(["fixtures"]) == 2
        assert "provide --id" in capsys.readouterr().err
