"""Quasi-infinitely divisible lattice distributions: decision, triplet
extraction and derived quantities."""
from .analysis import (
    ConvergenceReport,
    ConvergenceVerdict,
    HMoment,
    Moments,
    SupportInfo,
    WeightFunction,
    convergence_diag,
    h_moment,
    integer_support_check,
    laplace_eval,
    moments,
    support_equation_residuals,
    support_info,
    synthesize,
)
from .cuppens import cuppens_series, factor_two_point, mixture_series
from .errors import (
    DominantAtomError,
    NotQidResultError,
    PhaseUnwrapError,
    QidError,
    ZeroCharacteristicFunctionError,
)
from .lattice import (
    DistinguishedLog,
    DpcpResult,
    LatticeDistribution,
    PolynomialRootSet,
    QidResult,
    Verdict,
    analyze,
    analyze_finite,
    analyze_z,
    distinguished_log,
    dpcp_check,
    katti_extract,
    qid_approximate,
    reconstruct_charfn,
    rescale,
)
from .signed_measure import (
    INTEGERS,
    Lattice,
    MeasureDecomposition,
    Region,
    SignedAtomicMeasure,
    convolve,
    convolve_power,
    exp_measure,
    fourier_eval,
    hahn_jordan,
    l1_distance,
    restrict,
)
from .triplet import (
    CharacteristicPair,
    CharacteristicTriplet,
    RepresentationKind,
    affine_transform,
    convolve_triplets,
    g_c,
    gaussian_variance_probe,
    pair_to_triplet,
    psi_eval,
    rebase_gamma,
    triplet_to_pair,
    validate_necessary,
)

__version__ = "0.1.0"
