"""Numerical cross-checks in double precision.

Exactness claims live on the symbolic side; this module only confirms them
on finite truncations.  Truncations of diagonals are exact compressions, so
convergence claims are restricted to diagonals.  Compressing a basis map
(e.g. the adjoint shift) creates spurious kernel vectors at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from . import exactreal as xr
from .amclass import Certificate, DecreasingAccumulation, MixingPair, NotPositiveCertificate
from .errors import CertificateMismatch, ConvergenceFailure, InvalidOperator
from .exactreal import ExactReal
from .minattain import min_modulus
from .operators import BasisMapOperator, DiagonalOperator, Operator

DEFAULT_DIMS = (4, 16, 64, 256, 1024)
DEFAULT_DEPTH = 64
DEFAULT_TOL = 1e-9
WITNESS_TOL = 1e-10


def to_float(e: ExactReal, precision: int = 64) -> float:
    """Midpoint of a rational enclosure; more reliable than float arithmetic on the tree."""
    lo, hi = xr.eval_interval(e, precision)
    return float((lo + hi) / 2)


def truncation_matrix(T: Operator, n: int) -> np.ndarray:
    """Compression of T to span(e_1..e_n) as a dense complex matrix."""
    if n < 1:
        raise ValueError("n must be >= 1")
    M = np.zeros((n, n), dtype=complex)
    if isinstance(T, DiagonalOperator):
        for k, v in enumerate(T.spectrum.enumerate_values(n)):
            M[k, k] = to_float(v)
        return M
    for k in range(1, n + 1):
        target = T.target_of(k)
        if target is None or target > n:
            continue
        w = T.weight_at(k)
        M[target - 1, k - 1] = complex(to_float(w.re), to_float(w.im))
    return M


def smallest_singular_value(M: np.ndarray, tol: float = 1e-12) -> float:
    """sigma_min of a dense matrix.

    Diagonal input is answered exactly from the entries; everything else uses
    LAPACK's SVD, whose backward error is far below ``tol`` at desk scale.
    """
    M = np.asarray(M)
    if M.size == 0:
        raise ValueError("empty matrix")
    rows, cols = M.shape
    if rows == cols and np.count_nonzero(M - np.diag(np.diagonal(M))) == 0:
        return float(np.min(np.abs(np.diagonal(M))))
    try:
        s = np.linalg.svd(M, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if rows < cols:
        return 0.0
    return float(s[-1])


@dataclass
class TruncationReport:
    dims: List[int]
    sigma_min: List[float]
    symbolic_m: float
    converged: bool
    max_gap: float
    attained: bool = False

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.dims, self.dims[1:])):
            raise ValueError("dims must be strictly increasing")
        if any(s < 0 for s in self.sigma_min):
            raise ValueError("singular values are non-negative")

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "sigma_min": list(self.sigma_min),
            "symbolic_m": self.symbolic_m,
            "converged": self.converged,
            "max_gap": self.max_gap,
            "attained": self.attained,
        }


def convergence_check(D: DiagonalOperator, dims: Sequence[int] = DEFAULT_DIMS, tol: float = DEFAULT_TOL) -> TruncationReport:
    """sigma_min of growing truncations against the exact m(D)."""
    if not isinstance(D, DiagonalOperator):
        raise InvalidOperator("convergence checks apply to diagonal operators only")
    dims = sorted(set(int(d) for d in dims))
    if not D.spectrum.is_infinite_dimensional:
        dims = [d for d in dims if d <= D.spectrum.finite_size] or [D.spectrum.finite_size]
    m = min_modulus(D)
    m_float = to_float(m.value)
    biggest = truncation_matrix(D, dims[-1])
    sigmas = [smallest_singular_value(biggest[:d, :d]) for d in dims]
    gaps = [abs(s - m_float) for s in sigmas]
    return TruncationReport(dims, sigmas, m_float, gaps[-1] <= tol, max(gaps), m.attained)


@dataclass
class CertificateReport:
    kind: str
    depth: int
    sigma_min: float
    expected: float
    bound: float

    def to_dict(self):
        return {
            "kind": self.kind,
            "depth": self.depth,
            "sigma_min": self.sigma_min,
            "expected": self.expected,
            "bound": self.bound,
        }


def _mixing_images(cert: MixingPair, depth: int) -> np.ndarray:
    """Columns D w_n for w_n = t_n f_n + sqrt(1 - t_n^2) g_n, in the basis f_1..f_d, g_1..g_d."""
    M = np.zeros((2 * depth, depth))
    for n in range(1, depth + 1):
        t = math.sqrt(min(max(to_float(cert.t_sq(n)), 0.0), 1.0))
        s = math.sqrt(max(1.0 - t * t, 0.0))
        M[n - 1, n - 1] = t * to_float(cert.a_n(n))
        M[depth + n - 1, n - 1] = s * to_float(cert.b_n(n))
    return M


def certificate_check(D: DiagonalOperator, cert: Certificate, depth: int = DEFAULT_DEPTH) -> CertificateReport:
    """Confirm a refutation numerically on its first ``depth`` witness vectors."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    s = D.spectrum
    if isinstance(cert, MixingPair):
        sigma = smallest_singular_value(_mixing_images(cert, depth))
        expected, bound = to_float(cert.c(depth)), to_float(cert.a)
        if abs(sigma - expected) > WITNESS_TOL or not sigma > bound:
            raise CertificateMismatch(f"sigma_min {sigma!r} but c_{depth} = {expected!r}, a = {bound!r}")
        return CertificateReport("MixingPair", depth, sigma, expected, bound)
    if isinstance(cert, DecreasingAccumulation):
        t = s.tails[cert.tail_id]
        values = [to_float(t.term(k)) for k in range(depth)]
        sigma = smallest_singular_value(np.diag(values))
        expected, bound = values[-1], to_float(cert.limit)
        if abs(sigma - expected) > WITNESS_TOL or not sigma > bound:
            raise CertificateMismatch(f"sigma_min {sigma!r} but tail term {expected!r}, limit {bound!r}")
        return CertificateReport("DecreasingAccumulation", depth, sigma, expected, bound)
    if isinstance(cert, NotPositiveCertificate):
        value = to_float(cert.value)
        if not value < 0:
            raise CertificateMismatch(f"entry {value!r} is not negative")
        return CertificateReport("NotPositive", depth, abs(value), value, 0.0)
    raise TypeError(f"unknown certificate {cert!r}")
