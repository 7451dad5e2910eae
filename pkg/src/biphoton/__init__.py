"""Polarization-entangled photon pairs: simulation, tomography, metrics."""

from .states import (
    FORMAT_VERSION,
    InvalidStateError,
    PolarizationDensityMatrix,
    Populations,
    ProductBasisMatrix,
    PurePairState,
    ValidationReport,
    enforce_block_structure,
    fidelity,
    ideal_noon,
    load_state,
    make_distinguishable,
    populations,
    psi_minus_state,
    psi_plus_state,
    save_state,
    state_fidelity,
    to_product_basis,
    to_symmetry_basis,
    trace_distance,
    validate,
)
from .optics import (
    JonesMatrix,
    TwoPhotonUnitary,
    apply_unitary,
    hv_noon_from_circular,
    hwp,
    lift,
    qwp,
)
from .measurement import (
    AnalyzerSetting,
    DegenerateVisibilityError,
    DelayModel,
    HomCurve,
    apply_delay,
    coincidence_probability,
    coincidence_probability_distinguishable,
    hom_dip_depth,
    hom_scan,
    hom_visibility,
    interferometric_visibility_bound,
    port_coincidence_probability,
)
from .tomography import (
    CompletenessReport,
    CountRecord,
    IncompleteSettingsError,
    MleDiagnostics,
    TomographyDataset,
    WaveplateSetting,
    check_completeness,
    default_settings,
    fixture_state,
    mle_reconstruct,
    simulate_counts,
    subtract_accidentals,
)
from .fringes import FringeScan, SinusoidFit, fit_sinusoid, fringe_scan, noon_fidelity

__version__ = "0.1.0"

__all__ = [
    "FORMAT_VERSION",
    "AnalyzerSetting",
    "CompletenessReport",
    "CountRecord",
    "DegenerateVisibilityError",
    "DelayModel",
    "FringeScan",
    "HomCurve",
    "IncompleteSettingsError",
    "InvalidStateError",
    "JonesMatrix",
    "MleDiagnostics",
    "PolarizationDensityMatrix",
    "Populations",
    "ProductBasisMatrix",
    "PurePairState",
    "SinusoidFit",
    "TomographyDataset",
    "TwoPhotonUnitary",
    "ValidationReport",
    "WaveplateSetting",
    "apply_delay",
    "apply_unitary",
    "check_completeness",
    "coincidence_probability",
    "coincidence_probability_distinguishable",
    "default_settings",
    "enforce_block_structure",
    "fidelity",
    "fit_sinusoid",
    "fixture_state",
    "fringe_scan",
    "hom_dip_depth",
    "hom_scan",
    "hom_visibility",
    "hv_noon_from_circular",
    "hwp",
    "ideal_noon",
    "interferometric_visibility_bound",
    "lift",
    "load_state",
    "make_distinguishable",
    "mle_reconstruct",
    "noon_fidelity",
    "populations",
    "port_coincidence_probability",
    "psi_minus_state",
    "psi_plus_state",
    "qwp",
    "save_state",
    "simulate_counts",
    "state_fidelity",
    "subtract_accidentals",
    "to_product_basis",
    "to_symmetry_basis",
    "trace_distance",
    "validate",
]
