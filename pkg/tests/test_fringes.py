"""NOON fidelity, super-resolution fringe scans, and the sinusoid fitter."""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from biphoton.fringes import (
    fit_sinusoid,
    fringe_scan,
    noon_fidelity,
    read_fringe_csv,
    write_fringe_csv,
    write_fringe_fit_json,
)
from biphoton.measurement import interferometric_visibility_bound
from biphoton.states import (
    PolarizationDensityMatrix,
    fidelity,
    ideal_noon,
    psi_minus_state,
    psi_plus_state,
)
from helpers import random_density_matrix

SCAN_ANGLES = np.radians(np.linspace(0.0, 180.0, 64, endpoint=False))


def mixed_exchange_state(singlet_weight):
    plus = psi_plus_state().as_density_matrix().entries
    minus = psi_minus_state().as_density_matrix().entries
    return PolarizationDensityMatrix(
        (1.0 - singlet_weight) * plus + singlet_weight * minus
    )


class TestNoonFidelity:
    def test_ideal_projector_recovers_its_phase(self):
        best, phi = noon_fidelity(ideal_noon(0.20).as_density_matrix())
        assert best == pytest.approx(1.0, abs=1e-12)
        assert phi == pytest.approx(0.20, abs=1e-12)

    def test_maximally_mixed(self):
        best, _ = noon_fidelity(PolarizationDensityMatrix.maximally_mixed())
        assert best == pytest.approx(0.25, abs=1e-15)

    def test_coherence_free_state_caps_at_half(self):
        rho = PolarizationDensityMatrix(np.diag([0.5, 0.0, 0.5, 0.0]).astype(complex))
        best, phi = noon_fidelity(rho)
        assert best == pytest.approx(0.5, abs=1e-15)
        assert phi == 0.0

    def test_closed_form_matches_dense_grid_search(self):
        rng = np.random.default_rng(3)
        grid = np.linspace(-math.pi, math.pi, 100_000)
        for _ in range(5):
            rho = random_density_matrix(rng)
            best, phi = noon_fidelity(rho)
            m = rho.entries
            grid_vals = 0.5 * (m[0, 0].real + m[2, 2].real) + (
                np.exp(1j * grid) * m[0, 2]
            ).real
            assert best == pytest.approx(float(grid_vals.max()), abs=1e-9)
            assert fidelity(rho, ideal_noon(phi)) >= float(grid_vals.max()) - 1e-9


class TestFringeScan:
    def test_circular_noon_gives_full_contrast_and_half_period(self):
        scan = fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES)
        assert scan.coincidence_fit.visibility == pytest.approx(1.0, abs=1e-9)
        assert scan.singles_fit.visibility == pytest.approx(1.0, abs=1e-9)
        ratio = scan.singles_fit.period / scan.coincidence_fit.period
        assert ratio == pytest.approx(2.0, rel=1e-6)
        assert scan.coincidence_fit.period == pytest.approx(math.pi / 4, rel=1e-9)

    def test_hv_noon_is_blind_to_plate_rotations_without_conversion(self):
        scan = fringe_scan(ideal_noon(0.0).as_density_matrix(), SCAN_ANGLES)
        assert_allclose(scan.coincidences, 0.0, atol=1e-12)

    def test_hv_mode_recovers_the_circular_scan(self):
        converted = fringe_scan(
            ideal_noon(0.0).as_density_matrix(), SCAN_ANGLES, mode="hv"
        )
        raw = fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES)
        assert_allclose(converted.coincidences, raw.coincidences, atol=1e-12)
        assert converted.coincidence_fit.visibility == pytest.approx(1.0, abs=1e-9)
        ratio = converted.singles_fit.period / converted.coincidence_fit.period
        assert ratio == pytest.approx(2.0, rel=1e-6)

    def test_singlet_admixture_limits_visibility(self):
        rho = mixed_exchange_state(0.05)
        scan = fringe_scan(rho, SCAN_ANGLES)
        bound = interferometric_visibility_bound(rho)
        assert scan.coincidence_fit.visibility == pytest.approx(0.95 / 1.05, abs=1e-9)
        assert scan.coincidence_fit.visibility <= bound + 1e-9

    def test_visibility_respects_singlet_bound_on_random_states(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            rho = random_density_matrix(rng, block=True)
            scan = fringe_scan(rho, SCAN_ANGLES)
            assert scan.coincidence_fit.visibility <= (
                interferometric_visibility_bound(rho) + 1e-9
            )

    def test_requires_enough_angles(self):
        with pytest.raises(ValueError, match="at least 8"):
            fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES[:5])

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES, mode="linear")


class TestFitSinusoid:
    def test_recovers_exact_cosine(self):
        x = np.linspace(0.0, 4.0, 200)
        y = 1.3 * (1.0 + 0.9 * np.cos(2 * math.pi * x / 0.8 + 0.4))
        fit = fit_sinusoid(x, y)
        assert fit.converged
        assert fit.period_identifiable
        assert fit.visibility == pytest.approx(0.9, abs=1e-9)
        assert fit.period == pytest.approx(0.8, abs=1e-9)
        assert fit.offset == pytest.approx(1.3, abs=1e-9)
        assert fit.phase == pytest.approx(0.4, abs=1e-6)
        assert fit.residual_norm <= 1e-9

    def test_constant_data_is_flagged(self):
        x = np.linspace(0.0, 1.0, 32)
        fit = fit_sinusoid(x, np.full_like(x, 0.7))
        assert fit.visibility == 0.0
        assert not fit.period_identifiable
        assert fit.offset == pytest.approx(0.7, abs=1e-12)

    def test_full_visibility_fringe(self):
        x = np.linspace(0.0, 2.0, 120)
        y = 0.5 * (1.0 + np.cos(2 * math.pi * x / 0.5))
        fit = fit_sinusoid(x, y)
        assert fit.visibility == pytest.approx(1.0, abs=1e-9)

    def test_rejects_short_input(self):
        with pytest.raises(ValueError, match="at least 8"):
            fit_sinusoid(np.arange(5.0), np.arange(5.0))

    def test_rejects_negative_values(self):
        x = np.linspace(0.0, 1.0, 16)
        with pytest.raises(ValueError, match="non-negative"):
            fit_sinusoid(x, np.cos(x) - 2.0)

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(ValueError, match="equal-length"):
            fit_sinusoid(np.arange(10.0), np.arange(12.0))


class TestFringeFiles:
    def test_csv_round_trip_and_normalization(self, tmp_path):
        scan = fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES)
        path = tmp_path / "fringe.csv"
        write_fringe_csv(scan, path)
        angles_deg, singles, coincidences = read_fringe_csv(path)
        assert_allclose(angles_deg, np.degrees(SCAN_ANGLES), atol=1e-12)
        assert np.mean(singles) == pytest.approx(1.0, abs=1e-6)
        assert np.mean(coincidences) == pytest.approx(1.0, abs=1e-6)

    def test_fit_json_reports_period_ratio(self, tmp_path):
        scan = fringe_scan(psi_plus_state().as_density_matrix(), SCAN_ANGLES)
        path = tmp_path / "fit.json"
        write_fringe_fit_json(scan, path)
        doc = json.loads(path.read_text())
        assert doc["format_version"] == "1"
        assert doc["period_ratio_singles_over_coincidences"] == pytest.approx(
            2.0, rel=1e-6
        )
        assert doc["coincidence_fit"]["period_deg"] == pytest.approx(45.0, rel=1e-9)
