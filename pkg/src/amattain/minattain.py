"""Minimum modulus and minimum attainment.

Every operator represented here is diagonal or a weighted basis map with
pairwise orthogonal images, so ``m(T)`` is the infimum of the entry moduli
and is attained exactly when some basis vector attains it.  No optimization
over the unit sphere is ever performed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import exactreal as xr
from . import spectra as sp
from .errors import EquivalenceViolation
from .exactreal import ExactReal
from .operators import BasisMapOperator, DiagonalOperator, Operator, gram, modulus_view
from .spectra import DEFAULT_NCHECK


@dataclass(frozen=True)
class MinModResult:
    value: ExactReal
    attained: bool
    witness_index: Optional[int] = None

    def __post_init__(self):
        if self.attained != (self.witness_index is not None):
            raise ValueError("attained iff a witness index is present")


def min_modulus(T: Operator, n_check: int = DEFAULT_NCHECK) -> MinModResult:
    """m(T) with an attaining basis index when one exists.

    For diagonals the index is the 1-based position in the canonical
    enumeration; for basis maps it is the domain index ``n`` of ``e_n``.
    """
    view = modulus_view(T, n_check)
    inf = sp.infimum(view.diagonal.spectrum)
    witness = view.to_domain(inf.witness) if inf.attained else None
    return MinModResult(inf.value, inf.attained, witness)


def attains_minimum(T: Operator, n_check: int = DEFAULT_NCHECK) -> bool:
    return min_modulus(T, n_check).attained


@dataclass(frozen=True)
class EquivalenceReport:
    attains_T: bool
    attains_modulus: bool
    attains_gram: bool
    m_T: ExactReal
    m_gram: ExactReal


def check_M_equivalences(T: Operator, n_check: int = DEFAULT_NCHECK) -> EquivalenceReport:
    """Compute attainment for T, |T| and T*T and check they agree.

    Also checks m(T*T) = m(T)^2 exactly.  A disagreement is an internal bug
    and raises EquivalenceViolation.
    """
    view = modulus_view(T, n_check)
    m_T = min_modulus(T, n_check)
    m_mod = min_modulus(view.diagonal, n_check)
    m_gram = min_modulus(gram(T, n_check), n_check)
    report = EquivalenceReport(m_T.attained, m_mod.attained, m_gram.attained, m_T.value, m_gram.value)
    if not (report.attains_T == report.attains_modulus == report.attains_gram):
        raise EquivalenceViolation(
            f"attainment differs: T={report.attains_T}, |T|={report.attains_modulus}, T*T={report.attains_gram}"
        )
    if not xr.eq(m_T.value, m_mod.value):
        raise EquivalenceViolation(f"m(T)={m_T.value} but m(|T|)={m_mod.value}")
    if not xr.eq(xr.Mul(m_T.value, m_T.value), m_gram.value):
        raise EquivalenceViolation(f"m(T*T)={m_gram.value} differs from m(T)^2 with m(T)={m_T.value}")
    return report
