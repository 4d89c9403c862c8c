"""Sequential CHSH violations: one Alice, many Bobs with unsharp measurements."""

from .bounds import Log2Scalar, coeff_sequences, d_closed_forms, d_sequences, envelopes, lemma2_upper_seq
from .errors import (
    DomainError,
    HypothesisViolated,
    InfeasibleAtPrecision,
    InvalidInstrument,
    NoConvergence,
    NonRealCorrelation,
    NotImplementing,
    NotPSD,
    SequentialChshError,
)
from .linalg import eig_sym3, sqrt_psd2
from .quantum import (
    Effect,
    Instrument,
    TwoQubitState,
    chsh_value,
    correlation_spectrum,
    joint_distribution,
    luders_update,
    make_bell_state,
    make_family_state,
    make_maximally_mixed,
    make_schmidt_state,
    residual_decomposition,
    t_matrix,
)
from .strategy import (
    UNREACHABLE,
    MeasurementPlan,
    SharpnessSeq,
    ViolationReport,
    build_plan,
    chsh_analytic,
    count_violations,
    find_theta,
    gamma_sequence,
    simulate_sequence,
)

__version__ = "0.1.0"
