"""Closure of ``{X, P, F = f(P)}`` into a Lie algebra and its expansion.

``[X, F] = i f f'`` stays inside ``span{X, P, F}`` only if
``f f' = alpha + beta p + gamma f``.  For even ``f`` the odd left side forces
``alpha = gamma = 0``, leaving ``f = sqrt(c + beta p^2)``.  The expansion
rebuilds three-generator simple algebras from the iso(1,1)/iso(2)
realizations through ``Pi_pm = [A3^2, P_pm]``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericalConsistencyError, RepresentationError
from .grid import (
    FLAT,
    TABULATED,
    DeformationSpec,
    GridRep,
    check_state,
    default_states,
    fourier_second_derivative,
    iso_generators,
)
from .operators import HERMITIAN, SKEW, HermitianOperator, classify
from .reports import ResidualReport

RANK_RTOL = 1e-12
# sampled f: stencil derivatives carry roundoff of order eps * max|f| / h, which the fit
# amplifies by 1/sigma_min; columns below this relative size are not identifiable
RANK_RTOL_SAMPLED = 1e-6
DEFAULT_WINDOW = 2.0


@dataclass
class ClosureFit:
    alpha: float
    beta: float
    gamma: float
    residual: float
    grid: np.ndarray = field(repr=False)
    dropped: tuple = ()

    @property
    def rank_deficient(self) -> bool:
        return bool(self.dropped)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "residual": self.residual, "samples": int(self.grid.size),
                "window": [float(self.grid[0]), float(self.grid[-1])],
                "dropped": list(self.dropped)}


def stencil_derivative(x: np.ndarray, y: np.ndarray, width: int = 5) -> np.ndarray:
    """First derivative from ``width``-point Lagrange stencils (4th order for 5 points).

    Stencils are centred in the interior and shifted one-sided near the ends;
    weights come from the Vandermonde system, so spacing may be non-uniform.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    if n < width:
        raise InvalidParameterError(f"need at least {width} samples, got {n}")
    half = width // 2
    out = np.empty(n)
    powers = np.arange(width)
    rhs = np.zeros(width)
    rhs[1] = 1.0
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        dx = x[lo:lo + width] - x[i]
        scale = np.max(np.abs(dx))
        vander = (dx / scale)[None, :] ** powers[:, None]
        w = np.linalg.solve(vander, rhs) / scale
        out[i] = w @ y[lo:lo + width]
    return out


def closure_samples(spec: DeformationSpec, M: int = 201, window: float | None = None):
    """Abscissae, ``f`` and ``f'`` used by the closure fit."""
    if spec.family == TABULATED:
        p, f = spec.p_samples, spec.f_samples
        df = stencil_derivative(p, f)
        p, f, df = p[2:-2], f[2:-2], df[2:-2]
        if window is not None:
            keep = np.abs(p) <= window
            p, f, df = p[keep], f[keep], df[keep]
        if p.size < 50:
            raise InvalidParameterError(f"only {p.size} interior samples; need >= 50")
        return p, f, df
    if M < 50:
        raise InvalidParameterError(f"M={M} too small; need >= 50")
    bound = window if window is not None else (spec.a if math.isfinite(spec.a) else DEFAULT_WINDOW)
    bound = min(bound, spec.a)
    p = np.linspace(-bound, bound, M + 2)[1:-1]
    return p, spec.f(p), spec.df(p)


def fit_closure_coefficients(spec: DeformationSpec, M: int = 201,
                             window: float | None = None,
                             rank_rtol: float | None = None) -> ClosureFit:
    """Least-squares fit of ``f f'`` onto ``span{1, p, f}``.

    Columns are normalized and added in the order ``1, p, f`` only while they
    raise the numerical rank (smallest singular value above ``rank_rtol``
    times the largest; ``1e-12`` for analytic ``f``, ``1e-6`` for sampled
    ``f``); a skipped column keeps a zero coefficient and is named in
    ``dropped``.
    """
    if rank_rtol is None:
        rank_rtol = RANK_RTOL_SAMPLED if spec.family == TABULATED else RANK_RTOL
    p, f, df = closure_samples(spec, M, window)
    if np.any(f <= 0):
        raise InvalidParameterError("f must be positive on the sample window")
    target = f * df
    columns = {"alpha": np.ones_like(p), "beta": p, "gamma": f}
    kept: list[str] = []
    dropped: list[str] = []
    for name, col in columns.items():
        trial = np.column_stack([columns[k] / np.linalg.norm(columns[k]) for k in kept + [name]])
        sv = np.linalg.svd(trial, compute_uv=False)
        if sv[-1] > rank_rtol * sv[0]:
            kept.append(name)
        else:
            dropped.append(name)
    norms = np.array([np.linalg.norm(columns[k]) for k in kept])
    design = np.column_stack([columns[k] for k in kept]) / norms
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    coef = coef / norms
    values = dict.fromkeys(columns, 0.0)
    values.update(zip(kept, (float(c) for c in coef)))
    resid = target - sum(values[k] * columns[k] for k in columns)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if not all(math.isfinite(v) for v in values.values()):
        raise NumericalConsistencyError(f"non-finite closure coefficients {values}")
    return ClosureFit(values["alpha"], values["beta"], values["gamma"], rms, p, tuple(dropped))


def solve_closure_ode(beta: float, c: float = 1.0, samples: int = 101) -> DeformationSpec:
    """Even positive solution ``f = sqrt(c + beta p^2)`` of ``f f' = beta p``."""
    if not c > 0:
        raise InvalidParameterError(f"c={c} must be positive so that f(0) > 0")
    if beta < 0:
        spec = DeformationSpec.trig(math.sqrt(-beta), c)
    elif beta > 0:
        spec = DeformationSpec.hyper(beta, c)
    else:
        spec = DeformationSpec.flat(c=c)
    bound = spec.a if math.isfinite(spec.a) else DEFAULT_WINDOW
    p = np.linspace(-bound, bound, samples + 2)[1:-1]
    defect = np.max(np.abs(spec.f(p) * spec.df(p) - beta * p))
    if defect > 1e-12:
        raise NumericalConsistencyError(f"ODE residual {defect:.3e} exceeds 1e-12")
    return spec


# ---------------------------------------------------------------------------
# expansion


@dataclass(frozen=True, eq=False)
class ExpansionSet:
    epsilon: int
    beta_sign: int
    lam: float
    A3: HermitianOperator
    Pplus: HermitianOperator
    Pminus: HermitianOperator
    PiPlus: HermitianOperator
    PiMinus: HermitianOperator
    PtildePlus: HermitianOperator
    PtildeMinus: HermitianOperator
    Atilde1: HermitianOperator
    Atilde2: HermitianOperator
    Atilde3: HermitianOperator
    casimir_value: float
    scale: complex
    grid: GridRep = field(repr=False)

    @property
    def hermiticity_flags(self) -> dict[str, str]:
        return {name: getattr(self, name).symmetry for name in
                ("PiPlus", "PiMinus", "PtildePlus", "PtildeMinus",
                 "Atilde1", "Atilde2", "Atilde3")}

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "beta_sign": self.beta_sign, "lambda": self.lam,
                "casimir_value": self.casimir_value,
                "scale": [self.scale.real, self.scale.imag],
                "hermiticity_flags": self.hermiticity_flags}


def iso_casimir(g: GridRep, Pplus: np.ndarray, Pminus: np.ndarray) -> np.ndarray:
    """Diagonal of ``C2(+lam^2) = P+ P- / lam^2`` or ``C2(-lam^2) = (P+^2 + P-^2)/(2 lam^2)``."""
    lam2 = g.lam ** 2
    pp, pm = np.diag(Pplus).real, np.diag(Pminus).real
    if g.spec.beta > 0:
        return pp * pm / lam2
    return (pp ** 2 + pm ** 2) / (2 * lam2)


def _diagonal_commutator(a: np.ndarray, d: np.ndarray) -> HermitianOperator:
    """``[A, diag(d)]`` for hermitian ``A``: skew-hermitian, formed without cancellation."""
    return HermitianOperator(a * (d[None, :] - d[:, None]), SKEW)


def build_expansion(g: GridRep, epsilon: int) -> ExpansionSet:
    """``Pi_pm = [A3^2, P_pm]`` rescaled by ``2 sqrt(eps lam^2 C2)`` (principal branch)."""
    if epsilon not in (1, -1):
        raise InvalidParameterError(f"epsilon must be +1 or -1, got {epsilon}")
    if g.spec.family == FLAT:
        raise InvalidParameterError("the expansion needs beta != 0")
    a3, pp, pm = iso_generators(g)
    c2 = iso_casimir(g, pp.matrix, pm.matrix)
    c2_value = float(np.mean(c2))
    spread = float(np.max(np.abs(c2 - c2_value)))
    if spread > 1e-12 * max(1.0, abs(c2_value)):
        raise RepresentationError(f"iso Casimir is not scalar on the grid (spread {spread:.3e})")
    # A3^2 = -(1/lam^2) d^2/dvar^2; with diagonal P, [A3^2, P]_jk = (A3^2)_jk (p_k - p_j)
    a3sq = -fourier_second_derivative(g.N, g.length) / g.lam ** 2
    pi_plus, pi_minus = (_diagonal_commutator(a3sq, np.diag(op.matrix).real) for op in (pp, pm))
    scale = 2.0 * np.sqrt(complex(epsilon * g.lam ** 2 * c2_value))
    pt_plus = pi_plus.matrix / scale
    pt_minus = pi_minus.matrix / scale
    at1 = 0.5 * (pt_plus - pt_minus)
    at2 = 0.5 * (pt_plus + pt_minus)
    return ExpansionSet(
        epsilon=epsilon,
        beta_sign=1 if g.spec.beta > 0 else -1,
        lam=g.lam,
        A3=a3, Pplus=pp, Pminus=pm,
        PiPlus=pi_plus, PiMinus=pi_minus,
        PtildePlus=HermitianOperator(pt_plus, classify(pt_plus)),
        PtildeMinus=HermitianOperator(pt_minus, classify(pt_minus)),
        Atilde1=HermitianOperator(at1, classify(at1)),
        Atilde2=HermitianOperator(at2, classify(at2)),
        Atilde3=a3,
        casimir_value=c2_value,
        scale=complex(scale),
        grid=g,
    )


# hermiticity of (Atilde1, Atilde2, Atilde3) as stated for each (beta sign, epsilon)
STATED_FLAGS = {
    (1, 1): (HERMITIAN, HERMITIAN, HERMITIAN),
    (1, -1): (SKEW, SKEW, HERMITIAN),
    (-1, 1): (HERMITIAN, HERMITIAN, HERMITIAN),
    (-1, -1): ("nonhermitian", "nonhermitian", HERMITIAN),
}


def flag_table(e: ExpansionSet) -> dict:
    """Observed generator flags next to the stated ones for this case."""
    observed = (e.Atilde1.symmetry, e.Atilde2.symmetry, e.Atilde3.symmetry)
    stated = STATED_FLAGS[(e.beta_sign, e.epsilon)]

    def agrees(o, s):
        return o != HERMITIAN if s == "nonhermitian" else o == s

    return {"observed": list(observed), "stated": list(stated),
            "match": all(agrees(o, s) for o, s in zip(observed, stated))}


def expansion_states(g: GridRep) -> dict[str, np.ndarray]:
    """Test states for the expanded brackets.

    On ``xi`` grids the multipliers ``exp(+-lam xi)`` reach ``exp(lam L)`` at the
    window edge and the periodic wrap couples the two edges, so both roundoff and
    the state's edge value are amplified by about ``exp(2 lam L)``.  Narrow
    Gaussians let the window shrink; ``theta`` grids reuse the default states.
    """
    if g.variable != "xi":
        return default_states(g)
    x = g.nodes
    return {
        "gauss": np.exp(-x ** 2) + 0j,
        "gauss-shifted": np.exp(-(x - 0.5) ** 2) + 0j,
        "gauss-wave": np.exp(-x ** 2) * np.exp(1j * x),
    }


def verify_expansion_relations(e: ExpansionSet, beta_sign: int | None = None,
                               states: dict | None = None, tol_scalar: float = 1e-8) -> ResidualReport:
    """State-wise residuals of the expanded brackets and of the Casimir ``C2~(eps)``.

    Residuals are ``||(LHS - RHS) psi|| / ||psi||``; the Casimir entry is the
    deviation of ``C2~ psi`` from ``kappa psi`` relative to ``|kappa| ||psi||``
    with ``kappa`` taken from the first state.
    """
    if beta_sign is not None and beta_sign != e.beta_sign:
        raise InvalidParameterError(f"beta_sign {beta_sign} does not match the grid ({e.beta_sign})")
    g = e.grid
    states = expansion_states(g) if states is None else states
    A = e.A3.matrix
    Pi_p, Pi_m = e.PiPlus.matrix, e.PiMinus.matrix
    Tp, Tm = e.PtildePlus.matrix, e.PtildeMinus.matrix
    A1, A2 = e.Atilde1.matrix, e.Atilde2.matrix
    eps, lam2, c2 = e.epsilon, e.lam ** 2, e.casimir_value
    rep = ResidualReport(context={"epsilon": eps, "beta_sign": e.beta_sign, "N": g.N,
                                  "lambda": e.lam, "variable": g.variable})
    kappa = None
    mirrored: dict[str, list[float]] = defaultdict(list)
    for name, psi in states.items():
        psi = check_state(g, name, psi, band_fraction=0.125)

        def comm(a, b, v=psi):
            return a @ (b @ v) - b @ (a @ v)

        def add(rel, vec):
            rep.add(rel, name, float(np.linalg.norm(vec) / np.linalg.norm(psi)))

        if e.beta_sign > 0:
            add("[A3,Pi+]=iPi+", comm(A, Pi_p) - 1j * (Pi_p @ psi))
            add("[A3,Pi-]=-iPi-", comm(A, Pi_m) + 1j * (Pi_m @ psi))
            add("[Pi+,Pi-]=-8i lam^2 A3 C2", comm(Pi_p, Pi_m) + 8j * lam2 * c2 * (A @ psi))
            add("[A3,P~+]=iP~+", comm(A, Tp) - 1j * (Tp @ psi))
            add("[A3,P~-]=-iP~-", comm(A, Tm) + 1j * (Tm @ psi))
            add("[P~+,P~-]=-2i eps A3", comm(Tp, Tm) + 2j * eps * (A @ psi))
            add("[A~1,A~2]=-i eps A~3", comm(A1, A2) + 1j * eps * (A @ psi))
        else:
            add("[A3,Pi+]=iPi-", comm(A, Pi_p) - 1j * (Pi_m @ psi))
            add("[A3,Pi-]=-iPi+", comm(A, Pi_m) + 1j * (Pi_p @ psi))
            add("[Pi+,Pi-]=8i lam^2 A3 C2", comm(Pi_p, Pi_m) - 8j * lam2 * c2 * (A @ psi))
            add("[A3,P~+]=iP~-", comm(A, Tp) - 1j * (Tm @ psi))
            add("[A3,P~-]=-iP~+", comm(A, Tm) + 1j * (Tp @ psi))
            add("[P~+,P~-]=2i eps A3", comm(Tp, Tm) - 2j * eps * (A @ psi))
            add("[A~1,A~2]=i eps A~3", comm(A1, A2) - 1j * eps * (A @ psi))
        add("[P~+,P~-]+[P~-,P~+]=0", comm(Tp, Tm) + comm(Tm, Tp))
        add("[A~3,A~1]=iA~2", comm(A, A1) - 1j * (A2 @ psi))
        a1sq, a2sq, a3sq = A1 @ (A1 @ psi), A2 @ (A2 @ psi), A @ (A @ psi)
        if e.beta_sign > 0:
            # [A3, P~pm] = pm i P~pm with P~pm = A~2 pm A~1 fixes this sign and the
            # Casimir below; the mirrored forms are kept as informational entries
            add("[A~2,A~3]=-iA~1", comm(A2, A) + 1j * (A1 @ psi))
            c2t = a1sq - a2sq + eps * a3sq
            mirrored["[A~2,A~3]=iA~1"].append(_rel(comm(A2, A) - 1j * (A1 @ psi), psi))
            c2_mirror = a1sq + a2sq - eps * a3sq
            mirrored["A~1^2+A~2^2-eps A~3^2 scalar"].append(_scalar_defect(c2_mirror, psi))
        else:
            add("[A~2,A~3]=iA~1", comm(A2, A) - 1j * (A1 @ psi))
            c2t = a1sq + a2sq + eps * a3sq
        if kappa is None:
            kappa = complex(np.vdot(psi, c2t) / np.vdot(psi, psi))
        rep.add("C2~ scalar", name,
                float(np.linalg.norm(c2t - kappa * psi) / (max(abs(kappa), 1.0) * np.linalg.norm(psi))))
    rep.context["casimir_tilde"] = [kappa.real, kappa.imag] if kappa is not None else None
    if mirrored:
        rep.context["mirrored_forms"] = {k: max(v) for k, v in mirrored.items()}
    return rep


def _rel(vec: np.ndarray, psi: np.ndarray) -> float:
    return float(np.linalg.norm(vec) / np.linalg.norm(psi))


def _scalar_defect(c: np.ndarray, psi: np.ndarray) -> float:
    kappa = np.vdot(psi, c) / np.vdot(psi, psi)
    return float(np.linalg.norm(c - kappa * psi) / (max(abs(kappa), 1.0) * np.linalg.norm(psi)))
