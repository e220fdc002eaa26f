"""Spin-j realization of the nonlinear algebra and the deformed oscillator.

Position and momentum are built from angular-momentum matrices,
``X = lambda2 * Jx`` and ``P = lambda1 * Jy``, with the auxiliary generator
``F = lambda1 * lambda2 * Jz``.  With ``lambda1**2 lambda2**2 j(j+1) = 1`` the
triple closes linearly while ``[X, P]`` equals
``i sqrt(1 - lambda1**2 X**2 - lambda2**2 P**2)`` on the ``Jz >= 0`` sector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    ConstraintError,
    InvalidParameterError,
    NumericalConsistencyError,
    ResourceLimitError,
    UnsupportedCaseError,
)
from .operators import HERMITIAN, HermitianOperator, commutator, maxabs
from .reports import SpectrumReport

DEFAULT_SPIN_CAP = 5000
CONSTRAINT_RTOL = 1e-10
# eigenvalues of the square-root argument inside this band are roundoff zeros
SQRT_CLAMP = 1e-10


def spin_value(j) -> Fraction:
    """Validate a spin label and return it as an exact fraction."""
    try:
        jf = Fraction(j)
    except (TypeError, ValueError, OverflowError) as exc:
        raise InvalidParameterError(f"spin label {j!r} is not a number") from exc
    if (2 * jf).denominator != 1 or jf <= 0:
        raise InvalidParameterError(f"j={j} must be a positive integer or half-integer")
    return jf


@dataclass(frozen=True, eq=False)
class SpinRep:
    j: Fraction
    Jx: HermitianOperator
    Jy: HermitianOperator
    Jz: HermitianOperator

    @property
    def dim(self) -> int:
        return int(2 * self.j) + 1

    @property
    def m(self) -> np.ndarray:
        """Jz eigenvalues in basis order (descending)."""
        return float(self.j) - np.arange(self.dim)


def build_spin_rep(j, cap=DEFAULT_SPIN_CAP) -> SpinRep:
    """Dense ``(2j+1)``-dimensional angular-momentum matrices, basis ``m = j, ..., -j``.

    ``J+ |j,m> = sqrt(j(j+1) - m(m+1)) |j,m+1>`` sits on the superdiagonal.
    """
    jf = spin_value(j)
    if jf > cap:
        raise ResourceLimitError(f"j={jf} exceeds the spin cap {cap}")
    jj = float(jf)
    dim = int(2 * jf) + 1
    m = jj - np.arange(dim)
    # J+ maps basis index k (m_k) to index k-1 (m_k + 1)
    up = np.sqrt(jj * (jj + 1.0) - m[1:] * (m[1:] + 1.0))
    jplus = np.diag(up, 1).astype(complex)
    jminus = jplus.conj().T
    jx = 0.5 * (jplus + jminus)
    jy = -0.5j * (jplus - jminus)
    jz = np.diag(m).astype(complex)
    return SpinRep(jf, HermitianOperator(jx, HERMITIAN), HermitianOperator(jy, HERMITIAN),
                   HermitianOperator(jz, HERMITIAN))


def casimir_spin(rep: SpinRep) -> HermitianOperator:
    jx, jy, jz = rep.Jx.matrix, rep.Jy.matrix, rep.Jz.matrix
    return HermitianOperator(jx @ jx + jy @ jy + jz @ jz, HERMITIAN)


def su2_residuals(rep: SpinRep) -> dict:
    """Max-abs defects of the su(2) brackets and of ``J^2 = j(j+1) I``."""
    jx, jy, jz = rep.Jx, rep.Jy, rep.Jz
    c2 = casimir_spin(rep)
    jj = float(rep.j)
    eye = np.eye(rep.dim)
    return {
        "[Jx,Jy]-iJz": maxabs(commutator(jx, jy).matrix - 1j * jz.matrix),
        "[Jz,Jx]-iJy": maxabs(commutator(jz, jx).matrix - 1j * jy.matrix),
        "[Jy,Jz]-iJx": maxabs(commutator(jy, jz).matrix - 1j * jx.matrix),
        "J2-j(j+1)I": maxabs(c2.matrix - jj * (jj + 1.0) * eye),
        "[J2,Jx]": maxabs(commutator(c2, jx)),
        "[J2,Jy]": maxabs(commutator(c2, jy)),
        "[J2,Jz]": maxabs(commutator(c2, jz)),
    }


def constrained_lambdas(j, ratio: float = 1.0) -> tuple[float, float]:
    """``(lambda1, lambda2)`` with ``lambda1 = ratio * lambda2`` on the constraint surface."""
    jj = float(spin_value(j))
    if ratio <= 0:
        raise InvalidParameterError("ratio must be positive")
    lam2 = (ratio * ratio * jj * (jj + 1.0)) ** -0.25
    return ratio * lam2, lam2


@dataclass(frozen=True, eq=False)
class DeformedTriple:
    X: HermitianOperator
    P: HermitianOperator
    F: HermitianOperator
    lambda1: float
    lambda2: float
    j: Fraction
    rep: SpinRep

    @property
    def dim(self) -> int:
        return self.rep.dim


def constraint_residual(j, lambda1: float, lambda2: float) -> float:
    jj = float(spin_value(j))
    return lambda1 ** 2 * lambda2 ** 2 * jj * (jj + 1.0) - 1.0


def build_deformed_triple(rep: SpinRep, lambda1: float, lambda2: float) -> DeformedTriple:
    if not (lambda1 > 0 and lambda2 > 0):
        raise InvalidParameterError("lambda1 and lambda2 must be positive")
    res = constraint_residual(rep.j, lambda1, lambda2)
    if abs(res) > CONSTRAINT_RTOL:
        raise ConstraintError(
            f"lambda1^2 lambda2^2 j(j+1) - 1 = {res:.6g} (j={rep.j})", residual=res)
    return DeformedTriple(
        X=HermitianOperator(lambda2 * rep.Jx.matrix, HERMITIAN),
        P=HermitianOperator(lambda1 * rep.Jy.matrix, HERMITIAN),
        F=HermitianOperator(lambda1 * lambda2 * rep.Jz.matrix, HERMITIAN),
        lambda1=float(lambda1),
        lambda2=float(lambda2),
        j=rep.j,
        rep=rep,
    )


def linear_relation_residuals(t: DeformedTriple) -> dict:
    """Defects of ``[X,P]=iF``, ``[X,F]=-i lambda2^2 P``, ``[P,F]=i lambda1^2 X``."""
    x, p, f = t.X, t.P, t.F
    return {
        "[X,P]-iF": maxabs(commutator(x, p).matrix - 1j * f.matrix),
        "[X,F]+i*l2^2*P": maxabs(commutator(x, f).matrix + 1j * t.lambda2 ** 2 * p.matrix),
        "[P,F]-i*l1^2*X": maxabs(commutator(p, f).matrix - 1j * t.lambda1 ** 2 * x.matrix),
    }


def psd_sqrt(a: np.ndarray, clamp: float = SQRT_CLAMP) -> np.ndarray:
    """Principal square root of a hermitian PSD matrix via eigendecomposition.

    Eigenvalues with ``|w| <= clamp`` are set to zero; anything below
    ``-clamp`` raises.
    """
    w, v = np.linalg.eigh(a)
    if w.size and w[0] < -clamp:
        raise NumericalConsistencyError(
            f"square-root argument is indefinite: smallest eigenvalue {w[0]:.3e}")
    w = np.where(np.abs(w) <= clamp, 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def nonlinear_relation_defect(t: DeformedTriple) -> np.ndarray:
    """``[X,P] - i sqrt(1 - lambda1^2 X^2 - lambda2^2 P^2)`` on the full space."""
    x, p = t.X.matrix, t.P.matrix
    arg = np.eye(t.dim) - t.lambda1 ** 2 * (x @ x) - t.lambda2 ** 2 * (p @ p)
    arg = 0.5 * (arg + arg.conj().T)
    s = psd_sqrt(arg)
    return commutator(t.X, t.P).matrix - 1j * s


def verify_nonlinear_relation(t: DeformedTriple, include_m_zero: bool = True,
                              project: bool = True) -> float:
    """Max-abs residual of the deformed commutator restricted to ``m > 0`` (or ``m >= 0``).

    ``project=False`` returns the unprojected residual, which does not vanish:
    on the ``m < 0`` sector ``Jz`` and ``|Jz|`` differ by ``2|m|``.
    """
    defect = nonlinear_relation_defect(t)
    if not project:
        return maxabs(defect)
    m = t.rep.m
    keep = m >= 0 if include_m_zero else m > 0
    return maxabs(defect[np.ix_(keep, keep)])


def oscillator_levels(j) -> list[float]:
    """``E_n = (j(j+1) - (j-n)^2) / (2 sqrt(j(j+1)))`` for ``n = 0 .. floor(j)``."""
    jf = spin_value(j)
    jj1 = jf * (jf + 1)
    root = math.sqrt(jj1)
    n_max = math.floor(jf)
    return [float(jj1 - (jf - n) ** 2) / (2.0 * root) for n in range(n_max + 1)]


def _level_from_m(jf: Fraction, m: Fraction) -> float:
    jj1 = jf * (jf + 1)
    return float(jj1 - m * m) / (2.0 * math.sqrt(jj1))


def oscillator_lambda(j) -> float:
    jf = spin_value(j)
    return float(jf * (jf + 1)) ** -0.25


def oscillator_spectrum_analytic(j) -> SpectrumReport:
    """Deformed-oscillator levels from the closed form, cross-checked in ``m`` form."""
    jf = spin_value(j)
    levels = oscillator_levels(jf)
    # m = j - n form: m = j, j-1, ..., 0 or 1/2
    by_m = [_level_from_m(jf, jf - n) for n in range(len(levels))]
    return SpectrumReport(
        computed=levels,
        reference=sorted(by_m),
        labels=list(range(len(levels))),
        context={"j": str(jf), "lambda": oscillator_lambda(jf), "source": "analytic"},
    )


def oscillator_spectrum_matrix(t: DeformedTriple) -> SpectrumReport:
    """Diagonalize ``H = (P^2 + X^2)/2`` and compare with ``{E_|m| : m = -j..j}``."""
    if not math.isclose(t.lambda1, t.lambda2, rel_tol=1e-12):
        raise UnsupportedCaseError("the oscillator is only defined here for lambda1 == lambda2")
    x, p = t.X.matrix, t.P.matrix
    h = 0.5 * (p @ p + x @ x)
    evals = np.linalg.eigvalsh(0.5 * (h + h.conj().T))
    jf = t.j
    ms = [jf - k for k in range(t.dim)]
    reference = sorted(_level_from_m(jf, abs(m)) for m in ms)
    labels = [str(abs(m)) for m in sorted(ms, key=lambda m: _level_from_m(jf, abs(m)))]
    return SpectrumReport(
        computed=evals.tolist(),
        reference=reference,
        labels=labels,
        context={"j": str(jf), "lambda": t.lambda1, "source": "matrix", "dim": t.dim},
    )


def degeneracy_pattern(j) -> dict[str, int]:
    """Multiplicity of each oscillator level keyed by ``|m|``: 2 for ``m > 0``, 1 for ``m = 0``."""
    jf = spin_value(j)
    out: dict[str, int] = {}
    for k in range(int(2 * jf) + 1):
        key = str(abs(jf - k))
        out[key] = out.get(key, 0) + 1
    return out


def contraction_deviation(j, n: int) -> float:
    """``|E_n - (n + 1/2)|``; vanishes as ``j -> infinity``."""
    jf = spin_value(j)
    if n < 0 or n > jf:
        raise InvalidParameterError(f"level n={n} outside 0..{math.floor(jf)}")
    jj1 = jf * (jf + 1)
    return abs(float(jj1 - (jf - n) ** 2) / (2.0 * math.sqrt(jj1)) - (n + 0.5))


def contraction_bound(j, n: int) -> float:
    """Asymptotic ``(2n^2+2n+1)/(4j)`` inflated by a safety factor of two."""
    return (2 * n * n + 2 * n + 1) / (2.0 * float(spin_value(j)))


def structure_constant_lambda1_sq(j) -> float:
    """``lambda1**2`` of ``[P,F] = i lambda1**2 X`` at ``lambda1 = lambda2``."""
    jf = spin_value(j)
    return 1.0 / math.sqrt(float(jf * (jf + 1)))
