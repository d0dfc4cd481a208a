"""Minimum attainment and absolutely minimum attaining operators on l^2.

Operators are diagonal (with a symbolic spectrum description) or weighted
basis maps e_n -> w_n e_phi(n).  Scalars are exact; see ``exactreal``.
"""

from .amclass import (
    AMDecomposition,
    AMType,
    DecreasingAccumulation,
    Member,
    MixingPair,
    NotMember,
    NotPositiveCertificate,
    build_mixing_witness,
    check_partial_isometry,
    classify_AM_general,
    classify_AM_positive,
    decompose,
    synthesize,
)
from .dsl import load_operator, parse_operator
from .exactreal import compare, parse_real, real, sqrt
from .minattain import attains_minimum, check_M_equivalences, min_modulus
from .operators import (
    BasisMapOperator,
    DiagonalOperator,
    adjoint,
    diagonal,
    gram,
    modulus,
    operator_norm,
    polar,
    sqrt_positive,
)

__version__ = "0.1.0"
