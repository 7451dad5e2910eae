"""Two-photon polarization states in the symmetry-ordered basis.

Conventions
-----------
* Symmetry-ordered basis, indices 0..3: ``|HH>``, ``|psi+>``, ``|VV>``,
  ``|psi->`` with ``|psi+-> = (|H1 V2> +- |V1 H2>)/sqrt(2)``. Indices 0..2
  span the exchange-symmetric (triplet) subspace; index 3 is the
  antisymmetric singlet.
* Product basis, indices 0..3: ``|H1 H2>``, ``|H1 V2>``, ``|V1 H2>``,
  ``|V1 V2>``.

Coherences between the triplet block and the singlet are unobservable in
coincidence measurements on a collinear pair, so physical pipelines keep
them at zero; :func:`enforce_block_structure` projects them away.

All containers are immutable value types; operations are pure functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
MIN_EIGENVALUE_TOL = 1e-10
BLOCK_COHERENCE_TOL = 1e-12
NORM_TOL = 1e-12

#: Version string embedded in every file artifact this package writes.
FORMAT_VERSION = "1"

_SQ2 = math.sqrt(0.5)

#: Columns are the symmetry-ordered basis states in product-basis
#: coordinates: ``v_product = PRODUCT_FROM_SYMMETRY @ v_symmetry``.
PRODUCT_FROM_SYMMETRY = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, _SQ2, 0.0, _SQ2],
        [0.0, _SQ2, 0.0, -_SQ2],
        [0.0, 0.0, 1.0, 0.0],
    ],
    dtype=complex,
)
PRODUCT_FROM_SYMMETRY.setflags(write=False)

# Triplet-singlet coherence slots (row, col), upper triangle.
_CROSS_BLOCK = ((0, 3), (1, 3), (2, 3))


class InvalidStateError(ValueError):
    """A matrix or amplitude vector violates a state invariant."""


def _frozen_complex(values, shape) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.shape != shape:
        raise InvalidStateError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise InvalidStateError("entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PolarizationDensityMatrix:
    """4x4 density matrix of a photon pair, symmetry-ordered basis."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_complex(self.entries, (4, 4)))

    @classmethod
    def from_pure(cls, state: "PurePairState") -> "PolarizationDensityMatrix":
        a = state.amplitudes
        return cls(np.outer(a, a.conj()))

    @classmethod
    def maximally_mixed(cls) -> "PolarizationDensityMatrix":
        return cls(np.eye(4) / 4.0)


@dataclass(frozen=True, eq=False)
class PurePairState:
    """Normalized two-photon amplitude vector, symmetry-ordered basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen_complex(self.amplitudes, (4,))
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"amplitudes must have unit norm, got {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    def as_density_matrix(self) -> PolarizationDensityMatrix:
        return PolarizationDensityMatrix.from_pure(self)


@dataclass(frozen=True, eq=False)
class ProductBasisMatrix:
    """4x4 density matrix of a photon pair, product (H/V per photon) basis."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_complex(self.entries, (4, 4)))


class Populations(NamedTuple):
    hh: float
    psi_plus: float
    vv: float
    psi_minus: float


@dataclass(frozen=True)
class ValidationReport:
    """Measured defects of a density matrix against the state invariants."""

    hermiticity_defect: float
    trace_defect: float
    min_eigenvalue: float
    block_coherence: float
    hermitian_ok: bool
    trace_ok: bool
    psd_ok: bool
    block_ok: bool
    passed: bool


def validate(rho: PolarizationDensityMatrix) -> ValidationReport:
    """Report how far ``rho`` is from a physical, block-structured state.

    ``passed`` requires Hermiticity and unit trace to 1e-12, smallest
    eigenvalue >= -1e-10, and triplet-singlet coherences below 1e-12.
    """
    m = rho.entries
    herm = float(np.max(np.abs(m - m.conj().T)))
    trace = float(abs(np.trace(m) - 1.0))
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    block = float(max(abs(m[i, j]) for i, j in _CROSS_BLOCK))
    hermitian_ok = herm <= HERMITICITY_TOL
    trace_ok = trace <= TRACE_TOL
    psd_ok = min_eig >= -MIN_EIGENVALUE_TOL
    block_ok = block <= BLOCK_COHERENCE_TOL
    return ValidationReport(
        hermiticity_defect=herm,
        trace_defect=trace,
        min_eigenvalue=min_eig,
        block_coherence=block,
        hermitian_ok=hermitian_ok,
        trace_ok=trace_ok,
        psd_ok=psd_ok,
        block_ok=block_ok,
        passed=hermitian_ok and trace_ok and psd_ok and block_ok,
    )


def _physical_defects(m: np.ndarray) -> list[str]:
    problems = []
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > HERMITICITY_TOL:
        problems.append(f"hermiticity defect {herm:.3e}")
    trace = abs(np.trace(m) - 1.0)
    if trace > TRACE_TOL:
        problems.append(f"trace defect {trace:.3e}")
    min_eig = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])
    if min_eig < -MIN_EIGENVALUE_TOL:
        problems.append(f"negative eigenvalue {min_eig:.3e}")
    return problems


def ensure_physical(state, what: str = "state") -> None:
    """Raise :class:`InvalidStateError` unless Hermitian, unit-trace, PSD."""
    problems = _physical_defects(state.entries)
    if problems:
        raise InvalidStateError(f"invalid {what}: " + "; ".join(problems))


def ensure_block_structured(rho: PolarizationDensityMatrix) -> None:
    """Raise unless the triplet-singlet coherences vanish (to tolerance)."""
    worst = max(abs(rho.entries[i, j]) for i, j in _CROSS_BLOCK)
    if worst > BLOCK_COHERENCE_TOL:
        raise InvalidStateError(
            f"state carries triplet-singlet coherence of magnitude {worst:.3e}"
        )


def to_symmetry_basis(m: ProductBasisMatrix) -> PolarizationDensityMatrix:
    """Change a product-basis density matrix to the symmetry-ordered basis."""
    ensure_physical(m, "product-basis matrix")
    s = PRODUCT_FROM_SYMMETRY
    return PolarizationDensityMatrix(s.conj().T @ m.entries @ s)


def to_product_basis(rho: PolarizationDensityMatrix) -> ProductBasisMatrix:
    """Change a symmetry-ordered density matrix to the product basis."""
    ensure_physical(rho)
    s = PRODUCT_FROM_SYMMETRY
    return ProductBasisMatrix(s @ rho.entries @ s.conj().T)


def enforce_block_structure(rho: PolarizationDensityMatrix) -> PolarizationDensityMatrix:
    """Zero the triplet-singlet coherences.

    This is a pinching onto the block-diagonal subalgebra, which can only
    raise the smallest eigenvalue; that is asserted rather than assumed.
    Requires Hermiticity and unit trace; PSD is not required on input so the
    function can be used to clean matrices mid-pipeline.
    """
    m = rho.entries
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > HERMITICITY_TOL:
        raise InvalidStateError(f"hermiticity defect {herm:.3e}")
    if abs(np.trace(m) - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace defect {abs(np.trace(m) - 1.0):.3e}")
    out = m.copy()
    for i, j in _CROSS_BLOCK:
        out[i, j] = 0.0
        out[j, i] = 0.0
    eig_in = float(np.linalg.eigvalsh(m)[0])
    eig_out = float(np.linalg.eigvalsh(out)[0])
    assert eig_out >= eig_in - 1e-12, "pinching lowered the smallest eigenvalue"
    return PolarizationDensityMatrix(out)


def make_distinguishable(rho: PolarizationDensityMatrix) -> PolarizationDensityMatrix:
    """Equalize the psi+ and psi- populations, leaving everything else alone.

    Models photon pairs whose wave packets no longer overlap: the exchange
    symmetry of the polarization part becomes unobservable and the two
    exchange sectors equilibrate. This is the algebraic device behind the
    distinguishable-baseline coincidence formula, not a quantum channel:
    because every coherence is kept, the output can leave the PSD cone when
    psi+ carries strong coherences to HH or VV. The physical counterpart
    that also damps those coherences is the delay channel at zero overlap.
    Requires a Hermitian, unit-trace input; idempotent.
    """
    m = rho.entries
    herm = float(np.max(np.abs(m - m.conj().T)))
    if herm > HERMITICITY_TOL:
        raise InvalidStateError(f"hermiticity defect {herm:.3e}")
    if abs(np.trace(m) - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace defect {abs(np.trace(m) - 1.0):.3e}")
    out = m.copy()
    mean = 0.5 * (out[1, 1] + out[3, 3])
    out[1, 1] = mean
    out[3, 3] = mean
    return PolarizationDensityMatrix(out)


def populations(rho: PolarizationDensityMatrix) -> Populations:
    """Diagonal of ``rho``: (HH, psi+, VV, psi-) populations."""
    ensure_physical(rho)
    d = np.real(np.diag(rho.entries))
    return Populations(float(d[0]), float(d[1]), float(d[2]), float(d[3]))


def fidelity(rho: PolarizationDensityMatrix, target: PurePairState) -> float:
    """Overlap ``<psi|rho|psi>`` with a pure target, clipped to [0, 1]."""
    ensure_physical(rho)
    a = target.amplitudes
    val = float(np.real(a.conj() @ rho.entries @ a))
    return min(max(val, 0.0), 1.0)


def state_fidelity(a: PolarizationDensityMatrix, b: PolarizationDensityMatrix) -> float:
    """Fidelity between two density matrices, ``(Tr|sqrt(a) sqrt(b)|)^2``."""
    ensure_physical(a)
    ensure_physical(b)
    sqrt_a = _psd_sqrt(a.entries)
    sqrt_b = _psd_sqrt(b.entries)
    sing = np.linalg.svd(sqrt_a @ sqrt_b, compute_uv=False)
    val = float(np.sum(sing) ** 2)
    return min(max(val, 0.0), 1.0)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def trace_distance(a: PolarizationDensityMatrix, b: PolarizationDensityMatrix) -> float:
    """Half the trace norm of the difference."""
    diff = a.entries - b.entries
    diff = 0.5 * (diff + diff.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def ideal_noon(phi: float) -> PurePairState:
    """The two-photon H/V NOON state ``(|HH> + e^{i phi}|VV>)/sqrt(2)``."""
    if not math.isfinite(phi):
        raise ValueError("phi must be finite")
    amps = np.zeros(4, dtype=complex)
    amps[0] = _SQ2
    amps[2] = _SQ2 * np.exp(1j * phi)
    return PurePairState(amps)


def psi_plus_state() -> PurePairState:
    """The symmetrized |HV> pair, ``(|H1 V2> + |V1 H2>)/sqrt(2)``."""
    return PurePairState(np.array([0.0, 1.0, 0.0, 0.0], dtype=complex))


def psi_minus_state() -> PurePairState:
    """The singlet pair, ``(|H1 V2> - |V1 H2>)/sqrt(2)``."""
    return PurePairState(np.array([0.0, 0.0, 0.0, 1.0], dtype=complex))


# --- file format -----------------------------------------------------------

_BASIS_LABEL = "symmetry-ordered"


def state_to_json_dict(rho: PolarizationDensityMatrix) -> dict:
    rows = [[[float(z.real), float(z.imag)] for z in row] for row in rho.entries]
    return {"format_version": FORMAT_VERSION, "basis": _BASIS_LABEL, "rows": rows}


def state_from_json_dict(data: dict) -> PolarizationDensityMatrix:
    if not isinstance(data, dict):
        raise InvalidStateError("state document must be a JSON object")
    if data.get("basis") != _BASIS_LABEL:
        raise InvalidStateError(f"unsupported basis {data.get('basis')!r}")
    rows = data.get("rows")
    try:
        m = np.array([[complex(re, im) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise InvalidStateError(f"malformed rows: {exc}") from exc
    rho = PolarizationDensityMatrix(m)
    ensure_physical(rho, "state file")
    return rho


def save_state(path: str | Path, rho: PolarizationDensityMatrix) -> None:
    Path(path).write_text(
        json.dumps(state_to_json_dict(rho), indent=2, sort_keys=True) + "\n"
    )


def load_state(path: str | Path) -> PolarizationDensityMatrix:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidStateError(f"{path}: not valid JSON ({exc})") from exc
    return state_from_json_dict(data)
