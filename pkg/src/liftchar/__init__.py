"""Finite-dimensional characteristic functions of contractive liftings of
row contractions, and verifiers for their factorization identities."""

__version__ = "0.1.0"

from .charfact import (
    CharFn,
    FactorizationReport,
    MinimalPart,
    SynthesisReport,
    assemble_factorization,
    lifting_char_fn,
    minimal_part,
    resolvent_identity_residual,
    row_char_fn,
    synthesize_lifting,
    verify_factorization,
    verify_minimal_product,
)
from .lifting import (
    IteratedLifting,
    JuliaHalmos,
    Lifting,
    defect_unitary,
    extract_gamma,
    is_minimal_lifting,
    is_resolving,
    iterate_liftings,
    julia_halmos,
    lifting_from_blocks,
    make_lifting,
    star_defect_unitary,
)
from .ncfock import (
    FockBasis,
    MultiAnalyticOp,
    ampliate,
    coeff_diff,
    creation,
    fock_basis,
    product,
    realize,
)
from .numlin import (
    Subspace,
    SubOperator,
    hermitian_sqrt,
    operator_norm,
    pinv,
    range_subspace,
    unitarity_residual,
)
from .rowcon import (
    DefectData,
    RowContraction,
    column_embed,
    defect,
    is_cnc,
    minimal_isometric_dilation,
    star_defect,
)

__all__ = [
    "CharFn",
    "DefectData",
    "FactorizationReport",
    "FockBasis",
    "IteratedLifting",
    "JuliaHalmos",
    "Lifting",
    "MinimalPart",
    "MultiAnalyticOp",
    "RowContraction",
    "SubOperator",
    "Subspace",
    "SynthesisReport",
    "ampliate",
    "assemble_factorization",
    "coeff_diff",
    "column_embed",
    "creation",
    "defect",
    "defect_unitary",
    "extract_gamma",
    "fock_basis",
    "hermitian_sqrt",
    "is_cnc",
    "is_minimal_lifting",
    "is_resolving",
    "iterate_liftings",
    "julia_halmos",
    "lifting_char_fn",
    "lifting_from_blocks",
    "make_lifting",
    "minimal_isometric_dilation",
    "minimal_part",
    "operator_norm",
    "pinv",
    "product",
    "range_subspace",
    "realize",
    "resolvent_identity_residual",
    "row_char_fn",
    "star_defect",
    "star_defect_unitary",
    "synthesize_lifting",
    "unitarity_residual",
    "verify_factorization",
    "verify_minimal_product",
]
