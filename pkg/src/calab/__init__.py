"""Desk-scale laboratory for contractive-approximation entropy in Banach spaces."""

__version__ = "0.1.0"

from .approximation import (
    CoordinateShiftIsometry,
    GrowthSequence,
    IdentityIsometry,
    PowerIsometry,
    RcBound,
    fattened_probe,
    hc_growth,
    orbit_family,
    rc_lower,
    rc_upper,
)
from .intervals import Certificate, Interval
from .isometries import (
    Classification,
    PermutationSpec,
    PhaseSpec,
    classify_ell1,
    classify_linfty,
    empirical_corroboration,
    load_permutation_spec,
    load_phase_spec,
    orbit_census,
)
from .l1geometry import (
    BasisConstants,
    WitnessReport,
    basis_constants,
    equivalence_constant,
    find_l1_witness,
    lower_basis_constant,
    lower_basis_constant_exact,
    upper_basis_constant,
)
from .spaces import (
    COMPLEX,
    REAL,
    FiniteNormedSpace,
    Functional,
    VectorFamily,
    dual_ball_net,
    kron,
    load_space,
    load_vector_family,
    lp_space,
    matrix_space,
    spectral_norm_certified,
    sup_space,
)
from .spin import (
    CliffordFamily,
    PackingResult,
    car_generators,
    car_l2_identity,
    car_tensor_l1_identity,
    hamming_packing,
    pauli_span_norm,
    shift_growth_experiment,
)
from .subshifts import (
    SymbolicSystem,
    entropy_estimate,
    full_shift,
    golden_mean_shift,
    load_symbolic_system,
    sep_count,
    sft_entropy_oracle,
    spn_count,
)
