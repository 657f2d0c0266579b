"""Exact-diagonalization toolkit for fermionic and bosonic pair condensates.

Build states of the form (A^dag)^m |0> from arbitrary pair matrices,
analyze their conserved one-body operator families, assemble the
Hamiltonians that pin them as eigen- or ground states, and decide from
one- and two-body density matrices alone whether an arbitrary state is
an exact pair condensate, reconstructing the pair operator when it is.
"""

from .fock import (
    BOSON,
    FERMION,
    DensityMatrices,
    FockBasis,
    InvalidDensityError,
    SectorError,
    SolverError,
    SparseOperator,
    StateVector,
    Statistics,
    basis,
    basis_state,
    build_one_body,
    build_pair_creation,
    entropy,
    enumerate_basis,
    expectation,
    ground_state,
    pair_indices,
    reduced_dms,
    vacuum_state,
)
from .pairs import (
    CanonicalForm,
    DecompositionError,
    MixtureState,
    PairMatrix,
    RankError,
    StatisticsError,
    build_condensate,
    build_ghz_state,
    build_group_state,
    build_odd_state,
    build_paired_state,
    canonical_decompose,
    dual,
    hole_condensate,
    mixture_from_amplitudes,
    mixture_from_components,
    mixture_from_exponential,
    natural_pair_matrix,
    random_pair_matrix,
    scaling_state_map,
    uniform_pair_matrix,
)
from .conserved import (
    NullspaceResult,
    QFamily,
    conserved_count,
    covariance_C02,
    covariance_C11,
    covariance_C20,
    nullspace,
    q_ops,
    qbar_ops,
    su2_scaled_ops,
    verify_commutator_algebra,
)
from .hamiltonians import (
    ModelParams,
    ModelSystem,
    critical_couplings,
    h_A,
    h_bar,
    h_Q,
    h_Q_general,
    h_pairing_boson,
    h_pairing_fermion,
    m_A_op,
    model_boson,
    model_fermion,
    model_mixed,
)
from .detector import (
    DetectorReport,
    OddDetectorReport,
    detect,
    detect_general,
    detect_odd,
    modified_rho2,
    pair_energy,
    proximity,
)
from .sweep import SweepConfig, SweepRow, audit, run_sweep

__version__ = "0.1.0"
