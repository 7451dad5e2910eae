"""Wave plates and their lift to the two-photon symmetry basis.

Jones-matrix conventions, fixed here and used everywhere in the package:

* ``theta`` is the fast-axis angle from horizontal, in radians, and a
  retarder at angle theta is ``R(-theta) @ diag(1, e^{i delta}) @ R(theta)``
  with ``R(theta) = [[cos t, sin t], [-sin t, cos t]]``.
* Half-wave plate: ``hwp(theta) = [[cos 2t, sin 2t], [sin 2t, -cos 2t]]``
  (delta = pi, the global phase dropped).
* Quarter-wave plate: ``qwp(theta) = e^{-i pi/4} R(-theta) diag(1, i)
  R(theta)``; the leading phase makes the matrix symmetric at every angle.

Global phases never matter physically, so identities between plates are
asserted on the induced density-matrix action, not on raw matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .states import (
    PRODUCT_FROM_SYMMETRY,
    PolarizationDensityMatrix,
    PurePairState,
    ensure_physical,
    fidelity,
    ideal_noon,
    psi_plus_state,
)

UNITARITY_TOL = 1e-12
BLOCK_TOL = 1e-12

# Index pairs coupling the triplet block {0,1,2} to the singlet {3}.
_CROSS = tuple((i, 3) for i in range(3)) + tuple((3, i) for i in range(3))


@dataclass(frozen=True, eq=False)
class JonesMatrix:
    """Single-photon polarization transform; must be unitary."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"Jones matrix must be 2x2, got {m.shape}")
        defect = np.max(np.abs(m.conj().T @ m - np.eye(2)))
        if defect > UNITARITY_TOL:
            raise ValueError(f"Jones matrix is not unitary (defect {defect:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def __matmul__(self, other: "JonesMatrix") -> "JonesMatrix":
        return JonesMatrix(self.entries @ other.entries)


@dataclass(frozen=True, eq=False)
class TwoPhotonUnitary:
    """Pair transform in the symmetry-ordered basis.

    Any single-photon unitary applied to both photons is block-diagonal
    here: the triplet subspace maps to itself and the singlet only picks up
    the determinant phase. That structure is enforced on construction.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"pair unitary must be 4x4, got {m.shape}")
        defect = np.max(np.abs(m.conj().T @ m - np.eye(4)))
        if defect > UNITARITY_TOL:
            raise ValueError(f"pair transform is not unitary (defect {defect:.3e})")
        coupling = max(abs(m[i, j]) for i, j in _CROSS)
        if coupling > BLOCK_TOL:
            raise ValueError(
                f"pair transform couples triplet and singlet (magnitude {coupling:.3e})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)


def hwp(theta: float) -> JonesMatrix:
    """Half-wave plate with fast axis at ``theta`` radians from horizontal."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return JonesMatrix(np.array([[c, s], [s, -c]], dtype=complex))


def qwp(theta: float) -> JonesMatrix:
    """Quarter-wave plate with fast axis at ``theta`` radians from horizontal."""
    c, s = np.cos(theta), np.sin(theta)
    m = np.array(
        [
            [c * c + 1j * s * s, (1 - 1j) * s * c],
            [(1 - 1j) * s * c, s * s + 1j * c * c],
        ]
    )
    return JonesMatrix(np.exp(-1j * np.pi / 4) * m)


def lift(u: JonesMatrix) -> TwoPhotonUnitary:
    """Apply ``u`` to both photons: ``u (x) u`` in the symmetry basis.

    The result is block-diagonal with the singlet entry equal to ``det(u)``;
    sub-tolerance cross-block residue from the basis change is cleaned to
    exact zeros so downstream code preserves block structure exactly.
    """
    s = PRODUCT_FROM_SYMMETRY
    m = s.conj().T @ np.kron(u.entries, u.entries) @ s
    residue = max(abs(m[i, j]) for i, j in _CROSS)
    if residue > BLOCK_TOL:  # cannot happen for a true u (x) u
        raise ValueError(f"lift produced cross-block coupling {residue:.3e}")
    for i, j in _CROSS:
        m[i, j] = 0.0
    return TwoPhotonUnitary(m)


def apply_unitary(
    rho: PolarizationDensityMatrix, u: TwoPhotonUnitary
) -> PolarizationDensityMatrix:
    """Conjugate a pair state by a lifted unitary: ``U rho U^dag``."""
    ensure_physical(rho)
    out = u.entries @ rho.entries @ u.entries.conj().T
    return PolarizationDensityMatrix(0.5 * (out + out.conj().T))


def hv_noon_from_circular() -> PurePairState:
    """Convert the symmetrized |HV> pair into an H/V NOON state.

    The |HV> pair is a NOON state in the circular basis; a quarter-wave
    plate at 45 degrees maps it to ``(|HH> + |VV>)/sqrt(2)`` up to a global
    phase (relative phase 0 under this module's qwp convention).
    """
    u = lift(qwp(np.pi / 4))
    amps = u.entries @ psi_plus_state().amplitudes
    out = PurePairState(amps)
    check = fidelity(out.as_density_matrix(), ideal_noon(0.0))
    assert check >= 1.0 - 1e-10, "qwp conversion drifted from the NOON family"
    return out
