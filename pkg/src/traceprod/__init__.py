"""Trace-of-products preservers on matrix spaces.

Tools for checking the identity tr(f1(A1) ... fm(Am)) = tr(A1 ... Am), for
building map tuples that satisfy it, for recovering their canonical
parameters, and for certifying when no such tuple into smaller matrices can
exist.
"""
from .decompose import (
    DecompositionResult,
    PowerMap,
    decompose,
    decompose_diag_chain,
    decompose_diag_pair,
    decompose_hermitian,
    decompose_mn_chain,
    decompose_pn_chain,
    decompose_pn_pair,
    decompose_symmetric,
    herm_power,
    nonextendable_best_fit_residual,
    power_map_apply,
    recover_conjugator,
    reshuffled_transfer_rank,
    verify_weighted,
    weighted_canonical_maps,
    weighted_reduction,
)
from .errors import (
    CanonicalStructureError,
    DimensionMismatchError,
    InconsistentSamplesError,
    InvalidParameterError,
    MembershipError,
    NotApplicableError,
    PositivityError,
    PreservationError,
    RankDeficientError,
    SingularMatrixError,
    TraceProdError,
)
from .extend import (
    CheckMode,
    InfeasibilityCertificate,
    PreservationReport,
    check_preservation,
    dualize,
    embed_extend_pair,
    extend_from_subset,
    infeasibility_certificate,
)
from .families import FAMILIES, Generated, GenSpec, gen_space_sample, generate
from .linmaps import (
    FORM_TAGS,
    CanonicalForm,
    DiagChain,
    DiagPair,
    Hadamard,
    HermEven,
    HermOdd,
    LinMap,
    MnChain,
    NonextendableTriple,
    PnPair,
    RankOneFrame,
    SymEven,
    SymOdd,
    apply,
    apply_batch,
    complexify,
    compose,
    from_canonical,
    identity_map,
    image_stack,
    is_hermitian_preserving,
    linmap_from_images,
    restrict_map,
    transpose_map,
)
from .spaces import (
    DEFAULT_TOL,
    Basis,
    Field,
    SpaceKind,
    SpaceTag,
    base_field,
    coords,
    gram_matrix,
    membership,
    random_batch,
    random_element,
    reassemble,
    space_basis,
    span_dim,
    span_of,
    trace_pair,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "CanonicalForm",
    "CanonicalStructureError",
    "CheckMode",
    "DEFAULT_TOL",
    "DecompositionResult",
    "DiagChain",
    "DiagPair",
    "DimensionMismatchError",
    "FAMILIES",
    "FORM_TAGS",
    "Field",
    "GenSpec",
    "Generated",
    "Hadamard",
    "HermEven",
    "HermOdd",
    "InconsistentSamplesError",
    "InfeasibilityCertificate",
    "InvalidParameterError",
    "LinMap",
    "MembershipError",
    "MnChain",
    "NonextendableTriple",
    "NotApplicableError",
    "PnPair",
    "PositivityError",
    "PowerMap",
    "PreservationError",
    "PreservationReport",
    "RankDeficientError",
    "RankOneFrame",
    "SingularMatrixError",
    "SpaceKind",
    "SpaceTag",
    "SymEven",
    "SymOdd",
    "TraceProdError",
    "apply",
    "apply_batch",
    "base_field",
    "check_preservation",
    "complexify",
    "compose",
    "coords",
    "decompose",
    "decompose_diag_chain",
    "decompose_diag_pair",
    "decompose_hermitian",
    "decompose_mn_chain",
    "decompose_pn_chain",
    "decompose_pn_pair",
    "decompose_symmetric",
    "dualize",
    "embed_extend_pair",
    "extend_from_subset",
    "from_canonical",
    "gen_space_sample",
    "generate",
    "gram_matrix",
    "herm_power",
    "identity_map",
    "image_stack",
    "infeasibility_certificate",
    "is_hermitian_preserving",
    "linmap_from_images",
    "membership",
    "nonextendable_best_fit_residual",
    "power_map_apply",
    "random_batch",
    "random_element",
    "reassemble",
    "recover_conjugator",
    "reshuffled_transfer_rank",
    "restrict_map",
    "space_basis",
    "span_dim",
    "span_of",
    "trace_pair",
    "transpose_map",
    "verify_weighted",
    "weighted_canonical_maps",
    "weighted_reduction",
]
