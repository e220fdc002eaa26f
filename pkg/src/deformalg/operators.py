"""Dense operator container and (anti)commutators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, NumericalConsistencyError

HERMITIAN = "hermitian"
SKEW = "skew-hermitian"
GENERAL = "general"

# Hermiticity is tested as max|A -/+ A^dagger| <= TOL * n * max(1, max|A|).
SYMMETRY_TOL = 1e-12


def _scale(a: np.ndarray) -> float:
    return a.shape[0] * max(1.0, float(np.max(np.abs(a))) if a.size else 1.0)


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def skew_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a + a.conj().T))) if a.size else 0.0


def classify(a: np.ndarray, tol: float = SYMMETRY_TOL) -> str:
    """Return the symmetry flag of a square matrix."""
    limit = tol * _scale(a)
    if hermitian_defect(a) <= limit:
        return HERMITIAN
    if skew_defect(a) <= limit:
        return SKEW
    return GENERAL


@dataclass(frozen=True, eq=False)
class HermitianOperator:
    """Square complex matrix tagged with a symmetry flag.

    The flag is checked on construction; ``symmetry=None`` classifies the
    matrix instead.
    """

    matrix: np.ndarray
    symmetry: str | None = None

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidParameterError(f"operator must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        if self.symmetry is None:
            object.__setattr__(self, "symmetry", classify(a))
            return
        limit = SYMMETRY_TOL * _scale(a)
        if self.symmetry == HERMITIAN and hermitian_defect(a) > limit:
            raise NumericalConsistencyError(
                f"flagged hermitian but max|A-A^+| = {hermitian_defect(a):.3e}")
        if self.symmetry == SKEW and skew_defect(a) > limit:
            raise NumericalConsistencyError(
                f"flagged skew-hermitian but max|A+A^+| = {skew_defect(a):.3e}")
        if self.symmetry not in (HERMITIAN, SKEW, GENERAL):
            raise InvalidParameterError(f"unknown symmetry flag {self.symmetry!r}")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def dagger(self) -> "HermitianOperator":
        flag = self.symmetry
        return HermitianOperator(self.matrix.conj().T, flag)

    def __matmul__(self, other):
        if isinstance(other, HermitianOperator):
            return HermitianOperator(self.matrix @ other.matrix, GENERAL)
        return self.matrix @ other

    def is_hermitian(self, tol: float = SYMMETRY_TOL) -> bool:
        return hermitian_defect(self.matrix) <= tol * _scale(self.matrix)

    def is_skew_hermitian(self, tol: float = SYMMETRY_TOL) -> bool:
        return skew_defect(self.matrix) <= tol * _scale(self.matrix)

    def to_json(self) -> list:
        """Row-major array of ``[re, im]`` pairs."""
        return [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix]


def as_matrix(a) -> np.ndarray:
    return a.matrix if isinstance(a, HermitianOperator) else np.asarray(a, dtype=complex)


def commutator(a, b, anti: bool = False) -> HermitianOperator:
    """``AB - BA`` (or ``AB + BA`` when ``anti``).

    For two hermitian inputs the result is flagged skew-hermitian
    (commutator) or hermitian (anticommutator); otherwise it is classified.
    """
    ma, mb = as_matrix(a), as_matrix(b)
    if ma.shape != mb.shape:
        raise InvalidParameterError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    out = ma @ mb + mb @ ma if anti else ma @ mb - mb @ ma
    both_hermitian = all(
        isinstance(x, HermitianOperator) and x.symmetry == HERMITIAN for x in (a, b))
    if both_hermitian:
        return HermitianOperator(out, HERMITIAN if anti else SKEW)
    return HermitianOperator(out)


def anticommutator(a, b) -> HermitianOperator:
    return commutator(a, b, anti=True)


def maxabs(a) -> float:
    m = as_matrix(a)
    return float(np.max(np.abs(m))) if m.size else 0.0
