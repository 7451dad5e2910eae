"""Shared generators for randomized tests.

Every generator takes an explicit ``numpy.random.Generator`` so individual
tests stay reproducible without global seeding.
"""

import numpy as np

from biphoton.states import PolarizationDensityMatrix, enforce_block_structure


def random_density_matrix(rng, block=False):
    """Random full-rank density matrix drawn from the Ginibre ensemble.

    With ``block=True`` the pair-exchange coherences are projected out so the
    result lies in the physically reachable block-structured family.
    """
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    state = PolarizationDensityMatrix(rho)
    if block:
        state = enforce_block_structure(state)
    return state


def random_pure_block_state(rng):
    """Random pure state supported on the exchange-symmetric subspace."""
    amp = rng.normal(size=4) + 1j * rng.normal(size=4)
    amp[3] = 0.0
    amp /= np.linalg.norm(amp)
    rho = np.outer(amp, amp.conj())
    return PolarizationDensityMatrix(rho)


def random_unitary(rng, dim=2):
    """Haar-distributed unitary via QR of a complex Gaussian matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def product_basis_coincidence(rho_prod, phi):
    """Brute-force two-detector coincidence probability in the product basis.

    Builds the interferometer output projectors from explicit single-photon
    kets and sums the exchange-symmetric and antisymmetric contributions.
    Used as an oracle against the closed-form expression.
    """
    sqrt_half = np.sqrt(0.5)
    hh = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    vv = np.array([0.0, 0.0, 0.0, 1.0], dtype=complex)
    hv = np.array([0.0, 1.0, 0.0, 0.0], dtype=complex)
    vh = np.array([0.0, 0.0, 1.0, 0.0], dtype=complex)
    s = sqrt_half * (hh - np.exp(2j * phi) * vv)
    psi_minus = sqrt_half * (hv - vh)
    proj = np.outer(s, s.conj()) + np.outer(psi_minus, psi_minus.conj())
    return float(np.real(np.trace(proj @ rho_prod)))
