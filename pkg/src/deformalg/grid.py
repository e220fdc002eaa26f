"""Discretized momentum-space representations of ``[X, P] = i f(P)``.

All position-operator numerics run in a variable where ``X`` is a plain
derivative.  For ``f = sqrt(c - lambda^2 p^2)`` that variable is ``theta``
with ``lambda p = sqrt(c) sin(lambda theta)``; for ``f = sqrt(c + lambda^2 p^2)``
it is ``xi`` with ``lambda p = sqrt(c) sinh(lambda xi)``.  In both cases
``f d/dp = d/dvar``, so ``X = i d/dvar`` and the weighted ``dp / f`` inner
product becomes the flat one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, interpolate, linalg, optimize

from .errors import (
    InvalidParameterError,
    NumericalConsistencyError,
    PreconditionError,
    UnsupportedCaseError,
)
from .operators import HERMITIAN, SKEW, HermitianOperator
from .reports import ResidualReport, SpectrumReport, match_nearest

TRIG, HYPER, FLAT, TABULATED = "trig", "hyper", "flat", "tabulated"
PERIODIC, ANTIPERIODIC, DIRICHLET = "periodic", "antiperiodic", "dirichlet"

BAND_TOL = 1e-12
DECAY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DeformationSpec:
    """Even, positive deformation function ``f(p)``.

    Parametric members are ``f = sqrt(c + beta p^2)``: ``trig`` (beta < 0,
    parametrized by ``lam = sqrt(-beta)``), ``hyper`` (beta > 0) and ``flat``
    (beta = 0).  ``tabulated`` wraps sampled ``(p, f)`` pairs.
    """

    family: str
    param: float = 0.0
    c: float = 1.0
    a: float | None = None
    p_samples: np.ndarray | None = field(default=None, repr=False)
    f_samples: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.family not in (TRIG, HYPER, FLAT, TABULATED):
            raise InvalidParameterError(f"unknown deformation family {self.family!r}")
        if self.family == TABULATED:
            self._init_tabulated()
            return
        if not self.c > 0:
            raise InvalidParameterError(f"integration constant c={self.c} must be positive")
        if self.family in (TRIG, HYPER) and not self.param > 0:
            raise InvalidParameterError(f"{self.family} family needs a positive parameter")
        natural = math.sqrt(self.c) / self.param if self.family == TRIG else math.inf
        a = natural if self.a is None else float(self.a)
        if not a > 0 or (self.family == TRIG and a > natural * (1 + 1e-15)):
            raise InvalidParameterError(f"domain bound a={a} invalid for {self.family}")
        object.__setattr__(self, "a", a)

    def _init_tabulated(self):
        p = np.asarray(self.p_samples, dtype=float)
        f = np.asarray(self.f_samples, dtype=float)
        if p.ndim != 1 or p.shape != f.shape or p.size < 5:
            raise InvalidParameterError("tabulated f needs matching 1-D arrays with >= 5 samples")
        if np.any(np.diff(p) <= 0):
            raise InvalidParameterError("tabulated p must be strictly increasing")
        if not np.all(np.isfinite(f)):
            raise InvalidParameterError("tabulated f contains non-finite values")
        p.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "p_samples", p)
        object.__setattr__(self, "f_samples", f)
        object.__setattr__(self, "a", float(min(-p[0], p[-1])) if self.a is None else float(self.a))

    # constructors -------------------------------------------------------
    @classmethod
    def trig(cls, lam: float, c: float = 1.0) -> "DeformationSpec":
        return cls(TRIG, float(lam), float(c))

    @classmethod
    def hyper(cls, beta: float, c: float = 1.0, a: float | None = None) -> "DeformationSpec":
        return cls(HYPER, float(beta), float(c), a)

    @classmethod
    def flat(cls, a: float | None = None, c: float = 1.0) -> "DeformationSpec":
        return cls(FLAT, 0.0, float(c), a)

    @classmethod
    def tabulated(cls, p, f) -> "DeformationSpec":
        return cls(TABULATED, p_samples=p, f_samples=f)

    @classmethod
    def from_file(cls, path) -> "DeformationSpec":
        """Read two-column ``p f(p)`` text; ``#`` starts a comment."""
        try:
            data = np.loadtxt(Path(path), comments="#", ndmin=2, encoding="utf-8")
        except ValueError as exc:
            raise InvalidParameterError(f"cannot parse tabulated f from {path}: {exc}") from exc
        if data.shape[1] != 2:
            raise InvalidParameterError(f"{path}: expected two columns, got {data.shape[1]}")
        return cls.tabulated(data[:, 0], data[:, 1])

    # parameters ---------------------------------------------------------
    @property
    def beta(self) -> float:
        if self.family == TRIG:
            return -self.param ** 2
        if self.family == HYPER:
            return self.param
        if self.family == FLAT:
            return 0.0
        raise UnsupportedCaseError("tabulated f has no closure parameter")

    @property
    def lam(self) -> float:
        return math.sqrt(abs(self.beta))

    # evaluation ---------------------------------------------------------
    def f(self, p):
        p = np.asarray(p, dtype=float)
        if self.family == TABULATED:
            return self._spline()(p)
        return np.sqrt(self.c + self.beta * p * p)

    def df(self, p):
        p = np.asarray(p, dtype=float)
        if self.family == TABULATED:
            return self._spline().derivative()(p)
        if self.family == FLAT:
            return np.zeros_like(p)
        return self.beta * p / self.f(p)

    def _spline(self):
        return interpolate.CubicSpline(self.p_samples, self.f_samples)

    def check_even(self, samples: int = 101, rtol: float = 1e-9) -> bool:
        """Sample ``f(-p) == f(p)`` and ``f > 0`` on the open domain."""
        if self.family == TABULATED:
            p = self.p_samples
            if not np.allclose(p, -p[::-1], rtol=0, atol=1e-12 * max(1.0, abs(p[-1]))):
                return bool(np.allclose(self.f(p[p > 0]), self.f(-p[p > 0]), rtol=rtol))
            ok = np.allclose(self.f_samples, self.f_samples[::-1], rtol=rtol, atol=0)
            return bool(ok and np.all(self.f_samples[1:-1] > 0))
        bound = self.a if math.isfinite(self.a) else 10.0
        p = np.linspace(-bound, bound, samples + 2)[1:-1]
        fp = self.f(p)
        return bool(np.all(fp > 0) and np.allclose(fp, self.f(-p), rtol=rtol, atol=0))


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class GridRep:
    spec: DeformationSpec
    variable: str  # "theta", "xi" or "p"
    N: int
    nodes: np.ndarray = field(repr=False)
    bc: str
    weights: np.ndarray = field(repr=False)
    length: float
    span: str = "half"
    map: str = ""

    @property
    def lam(self) -> float:
        return self.spec.lam

    @property
    def p_nodes(self) -> np.ndarray:
        """Momentum image of the nodes."""
        lam, rc = self.spec.lam, math.sqrt(self.spec.c)
        if self.variable == "theta":
            return rc * np.sin(lam * self.nodes) / lam
        if self.variable == "xi":
            return rc * np.sinh(lam * self.nodes) / lam
        return self.nodes.copy()

    @property
    def jacobian(self) -> np.ndarray:
        """``dp / dvar``; equals ``f(p)`` on the one-to-one chart."""
        lam, rc = self.spec.lam, math.sqrt(self.spec.c)
        if self.variable == "theta":
            return rc * np.cos(lam * self.nodes)
        if self.variable == "xi":
            return rc * np.cosh(lam * self.nodes)
        return np.ones_like(self.nodes)

    @property
    def p_weights(self) -> np.ndarray:
        return self.weights * np.abs(self.jacobian)

    @property
    def mode_unit(self) -> float:
        """Wavenumber spacing ``2 pi / length`` of the periodic Fourier basis."""
        return 2.0 * math.pi / self.length


def build_grid(spec: DeformationSpec, N: int, L: float | None = None,
               bc: str = PERIODIC, span: str = "half") -> GridRep:
    """Uniform grid in the variable where ``X`` is a derivative.

    ``trig`` uses ``theta`` on ``[-pi/(2 lam), pi/(2 lam))``; ``span="full"``
    doubles this to ``[-pi/lam, pi/lam)``, which carries the periodic and the
    antiperiodic sector at once.  ``hyper`` uses ``xi`` on ``[-L, L)`` and
    ``flat`` uses ``p`` on ``[-L, L)``.  Dirichlet grids include both
    endpoints; the ``N - 2`` interior nodes carry the unknowns.
    """
    if not isinstance(N, (int, np.integer)) or N < 8 or N % 2:
        raise InvalidParameterError(f"N={N} must be an even integer >= 8")
    if bc not in (PERIODIC, ANTIPERIODIC, DIRICHLET):
        raise InvalidParameterError(f"unknown boundary condition {bc!r}")
    if span not in ("half", "full"):
        raise InvalidParameterError(f"span must be 'half' or 'full', got {span!r}")
    if spec.family == TRIG:
        if span == "full" and bc == DIRICHLET:
            raise InvalidParameterError("Dirichlet conditions apply on the half span only")
        half = math.pi / (2.0 * spec.lam) * (2.0 if span == "full" else 1.0)
        variable = "theta"
        chart = "lambda p = sqrt(c) sin(lambda theta)"
    elif spec.family in (HYPER, FLAT):
        if L is None:
            raise InvalidParameterError(f"{spec.family} grids need an explicit half-width L")
        if not L > 0:
            raise InvalidParameterError(f"L={L} must be positive")
        half = float(L)
        variable = "xi" if spec.family == HYPER else "p"
        chart = "lambda p = sqrt(c) sinh(lambda xi)" if spec.family == HYPER else "identity"
    else:
        raise UnsupportedCaseError("grids are built for parametric families only")
    length = 2.0 * half
    if bc == DIRICHLET:
        nodes = np.linspace(-half, half, N)
        h = length / (N - 1)
        weights = np.full(N, h)
        weights[[0, -1]] = h / 2
    else:
        h = length / N
        nodes = -half + h * np.arange(N)
        weights = np.full(N, h)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GridRep(spec, variable, int(N), nodes, bc, weights, length, span, chart)


def fourier_derivative(N: int, length: float, bc: str = PERIODIC) -> np.ndarray:
    """Real antisymmetric pseudospectral first-derivative matrix.

    Periodic: cardinal derivative ``(1/2)(-1)^k cot(k h / 2)`` (Nyquist mode
    mapped to zero).  Antiperiodic: half-integer modes, giving
    ``(1/2)(-1)^k csc(k h / 2)``.  Both are scaled to the domain length.
    """
    h = 2.0 * math.pi / N
    k = np.arange(1, N)
    sign = np.where(k % 2, -1.0, 1.0)
    if bc == PERIODIC:
        col = 0.5 * sign / np.tan(k * h / 2)
    elif bc == ANTIPERIODIC:
        col = 0.5 * sign / np.sin(k * h / 2)
    else:
        raise UnsupportedCaseError(f"no Fourier derivative for {bc!r} boundary conditions")
    col = np.concatenate(([0.0], col)) * (2.0 * math.pi / length)
    return linalg.toeplitz(col, -col)


def fourier_second_derivative(N: int, length: float) -> np.ndarray:
    """Periodic pseudospectral second-derivative matrix, built entrywise.

    Agrees with ``D @ D`` on every mode below Nyquist; entries are accurate to
    roundoff individually, which avoids the cancellation of a matrix product.
    """
    h = 2.0 * math.pi / N
    k = np.arange(1, N)
    sign = np.where(k % 2, -1.0, 1.0)
    col = -0.5 * sign / np.sin(k * h / 2) ** 2
    col = np.concatenate(([-math.pi ** 2 / (3 * h ** 2) - 1.0 / 6.0], col))
    return linalg.toeplitz(col) * (2.0 * math.pi / length) ** 2


def derivative_matrix(g: GridRep) -> HermitianOperator:
    if g.bc == DIRICHLET:
        raise UnsupportedCaseError(
            "Dirichlet grids use dirichlet_first_derivative/dirichlet_second_derivative")
    return HermitianOperator(fourier_derivative(g.N, g.length, g.bc), SKEW)


def position_operator(g: GridRep) -> HermitianOperator:
    """``X = i d/dvar``; hermitian in the flat inner product of the variable."""
    return HermitianOperator(1j * fourier_derivative(g.N, g.length, g.bc), HERMITIAN)


def position_levels(g: GridRep) -> tuple[list[int], list[float]]:
    """Quantum numbers ``n`` with ``|n| < N/4`` and the exact levels.

    On the half-span ``theta`` chart these are ``2 n lam`` (periodic) and
    ``(2n + 1) lam`` (antiperiodic).
    """
    unit = g.mode_unit
    shift = 0.5 if g.bc == ANTIPERIODIC else 0.0
    ns = list(range(-(g.N // 4) + 1, g.N // 4))
    return ns, [(n + shift) * unit for n in ns]


def analytic_eigenfunction(g: GridRep, level: float) -> np.ndarray:
    """Exact eigenfunction of ``X`` with eigenvalue ``level`` sampled on the nodes.

    On the trig chart this is ``sqrt(lam/pi) exp(-i (l/lam) arcsin(lam p))``
    evaluated at the momentum image of each node.
    """
    if g.variable == "theta" and g.span == "half":
        lam, rc = g.lam, math.sqrt(g.spec.c)
        arg = np.clip(lam * g.p_nodes / rc, -1.0, 1.0)
        return math.sqrt(lam / math.pi) * np.exp(-1j * (level / lam) * np.arcsin(arg))
    return np.exp(-1j * level * g.nodes) / math.sqrt(g.length)


def eigenvector_overlaps(g: GridRep, evals: np.ndarray, evecs: np.ndarray,
                         levels, cluster: float = 1e-8) -> list[float]:
    """``|<phi, V>| / |phi|`` for each level, ``V`` spanning its (possibly degenerate) eigenspace."""
    out = []
    for lev in levels:
        sub = np.abs(evals - lev) <= cluster * max(1.0, abs(lev))
        if not np.any(sub):
            out.append(0.0)
            continue
        phi = analytic_eigenfunction(g, lev) * np.sqrt(g.weights)
        proj = evecs[:, sub].conj().T @ phi
        out.append(float(np.linalg.norm(proj) / np.linalg.norm(phi)))
    return out


def position_spectrum(g: GridRep) -> SpectrumReport:
    """Eigenvalues of ``X`` matched against the exact discrete levels.

    Reference rows are ordered ``n = 0, 1, -1, 2, -2, ...``.

    ``context["min_overlap"]`` is the worst eigenvector fidelity against the
    analytic eigenfunctions over the retained levels.
    """
    x = position_operator(g).matrix
    evals, evecs = np.linalg.eigh(x)
    ns, levels = position_levels(g)
    order = sorted(range(len(ns)), key=lambda i: (abs(ns[i]), ns[i] < 0))
    ns, levels = [ns[i] for i in order], [levels[i] for i in order]
    matched = match_nearest(evals, levels)
    overlaps = eigenvector_overlaps(g, evals, evecs, levels)
    return SpectrumReport(
        computed=evals.tolist(),
        reference=levels,
        matched=matched,
        labels=ns,
        context={
            "family": g.spec.family,
            "lambda": g.lam,
            "N": g.N,
            "bc": g.bc,
            "span": g.span,
            "variable": g.variable,
            "min_overlap": min(overlaps),
        },
    )


# ---------------------------------------------------------------------------
# minimal length


def minimal_length_quadrature(spec: DeformationSpec) -> float:
    """``l0 = (pi/2) / integral_0^a dp / f(p)``; zero when the integral diverges."""
    if spec.family == TABULATED:
        return _tabulated_minimal_length(spec)
    if not math.isfinite(spec.a):
        # 1/f decays no faster than 1/p for flat and hyper members
        return 0.0
    if spec.family == TRIG and math.isclose(spec.a, math.sqrt(spec.c) / spec.lam, rel_tol=1e-15):
        # 1/f = (1/lam) (a - p)^(-1/2) (a + p)^(-1/2): the edge singularity goes into
        # quad's algebraic weight
        lam, a = spec.lam, spec.a
        value, _ = integrate.quad(lambda p: 1.0 / (lam * math.sqrt(a + p)), 0.0, a,
                                  weight="alg", wvar=(0.0, -0.5), epsabs=1e-15, epsrel=1e-14)
    else:
        value, _ = integrate.quad(lambda p: 1.0 / float(spec.f(p)), 0.0, spec.a,
                                  epsabs=1e-14, epsrel=1e-13)
    return 0.5 * math.pi / value


def _tabulated_minimal_length(spec: DeformationSpec) -> float:
    p, f = spec.p_samples, spec.f_samples
    keep = (p >= 0) & (p <= spec.a)
    pk, fk = p[keep], f[keep]
    if pk.size < 3 or pk[0] > 1e-12 * max(1.0, spec.a):
        raise NumericalConsistencyError("tabulated samples must cover [0, a] starting at p=0")
    bad = ~(fk > 0)
    if np.any(bad):
        raise NumericalConsistencyError(
            f"1/f is not integrable on the samples: f <= 0 at p = {pk[bad].tolist()}")
    value = integrate.simpson(1.0 / fk, x=pk)
    if not np.isfinite(value) or value <= 0:
        raise NumericalConsistencyError(f"integral of 1/f evaluated to {value}")
    return 0.5 * math.pi / float(value)


@dataclass
class UncertaintyReport:
    min_uncertainty: float
    analytic_l0: float
    optimizer_state: dict

    @property
    def error(self) -> float:
        return abs(self.min_uncertainty - self.analytic_l0)

    def to_dict(self) -> dict:
        return {"min_uncertainty": self.min_uncertainty, "analytic_l0": self.analytic_l0,
                "error": self.error, "optimizer_state": self.optimizer_state}


def dirichlet_first_derivative(g: GridRep) -> np.ndarray:
    """Central-difference ``d/dvar`` on interior nodes with zero boundary values (banded form)."""
    _require_dirichlet(g)
    n, h = g.N - 2, g.nodes[1] - g.nodes[0]
    return np.diag(np.full(n - 1, 0.5 / h), 1) - np.diag(np.full(n - 1, 0.5 / h), -1)


def dirichlet_second_derivative(g: GridRep) -> np.ndarray:
    """Three-point ``-d^2/dvar^2`` on interior nodes with zero boundary values."""
    _require_dirichlet(g)
    n, h = g.N - 2, g.nodes[1] - g.nodes[0]
    off = np.full(n - 1, -1.0 / h ** 2)
    return np.diag(np.full(n, 2.0 / h ** 2)) + np.diag(off, 1) + np.diag(off, -1)


def _require_dirichlet(g: GridRep):
    if g.bc != DIRICHLET:
        raise InvalidParameterError("grid is not built with Dirichlet boundary conditions")


def shifted_variance_floor(g: GridRep, x0: float) -> float:
    """Lowest eigenvalue of the Dirichlet-discretized ``(X - x0)^2``.

    ``X^2`` uses the three-point stencil, ``X = i d/dvar`` the central one;
    the result is a hermitian tridiagonal matrix.
    """
    n, h = g.N - 2, g.nodes[1] - g.nodes[0]
    diag = np.full(n, 2.0 / h ** 2 + x0 * x0, dtype=complex)
    # upper band entry (k, k+1): -1/h^2 from X^2 and -2 x0 * (i/(2h)) from the cross term
    upper = np.full(n, -1.0 / h ** 2 - 1j * x0 / h, dtype=complex)
    upper[0] = 0.0
    band = np.vstack([upper, diag])
    w = linalg.eigvals_banded(band, lower=False, select="i", select_range=(0, 0))
    return float(w[0])


def dirichlet_min_uncertainty(spec: DeformationSpec, N: int, xtol: float = 1e-8) -> "UncertaintyReport":
    """Minimize ``<psi|(X - x0)^2|psi>`` over Dirichlet states and shifts ``x0``.

    The state minimization is the lowest eigenvalue at fixed ``x0``; the shift
    is searched on ``[-0.5/lam, 0.5/lam]`` with Brent's bounded method and
    compared against the seed ``x0 = 0``.
    """
    if spec.family != TRIG:
        raise UnsupportedCaseError("the Dirichlet minimal-length problem is posed for the trig family")
    if N < 32:
        raise InvalidParameterError(f"N={N} too small; need N >= 32")
    g = build_grid(spec, int(N), bc=DIRICHLET)
    width = 0.5 / spec.lam
    res = optimize.minimize_scalar(lambda x: shifted_variance_floor(g, x),
                                   bounds=(-width, width), method="bounded",
                                   options={"xatol": xtol})
    seed_value = shifted_variance_floor(g, 0.0)
    h = g.nodes[1] - g.nodes[0]
    # values closer than the eigensolver roundoff (eps * ||M||) are ties; the seed wins them
    roundoff = 8 * np.finfo(float).eps * 4.0 / h ** 2
    if seed_value <= res.fun + roundoff:
        x0, value = 0.0, seed_value
    else:
        x0, value = float(res.x), float(res.fun)
    if value < 0:
        raise NumericalConsistencyError(f"negative variance floor {value}")
    # refinement check: the searched optimum and the seed agree to 1e-6 relative
    delta = float(abs(res.fun - seed_value) / max(abs(seed_value), 1e-300))
    converged = bool(res.success) and delta < 1e-6
    if not converged:
        raise NumericalConsistencyError(
            f"shift search did not settle (success={res.success}, relative change {delta:.3e})")
    state = {"x0": x0, "N": int(N), "nfev": int(res.nfev) + 1, "converged": converged,
             "relative_change": delta, "min_variance": value}
    return UncertaintyReport(math.sqrt(value), spec.lam, state)


# ---------------------------------------------------------------------------
# ISO(1,1) / ISO(2) generators


def iso_generators(g: GridRep) -> tuple[HermitianOperator, HermitianOperator, HermitianOperator]:
    """``A3 = (i/lam) d/dvar`` and the diagonal translations ``P+`` and ``P-``.

    ``theta``: ``P+- = sqrt(c)(cos(lam theta) +- sin(lam theta))``;
    ``xi``: ``P+- = sqrt(c) exp(+-lam xi)``.

    Multiplication by ``cos`` or ``sin`` of ``lam theta`` swaps the periodic and
    antiperiodic sectors of the half span, so ``theta`` grids must use the
    full span where both sectors live on one periodic grid.
    """
    if g.bc != PERIODIC:
        raise PreconditionError("ISO generators are built on periodic grids")
    if g.variable == "theta" and g.span != "full":
        raise PreconditionError(
            "P+- map the periodic sector onto the antiperiodic one; build the theta grid "
            "with span='full'")
    if g.variable not in ("theta", "xi"):
        raise UnsupportedCaseError("ISO generators need a deformed (trig or hyper) grid")
    lam, rc = g.lam, math.sqrt(g.spec.c)
    a3 = HermitianOperator((1j / lam) * fourier_derivative(g.N, g.length, g.bc), HERMITIAN)
    u = lam * g.nodes
    if g.variable == "theta":
        plus, minus = rc * (np.cos(u) + np.sin(u)), rc * (np.cos(u) - np.sin(u))
    else:
        plus, minus = rc * np.exp(u), rc * np.exp(-u)
    return a3, HermitianOperator(np.diag(plus), HERMITIAN), HermitianOperator(np.diag(minus), HERMITIAN)


def default_states(g: GridRep) -> dict[str, np.ndarray]:
    """Band-limited (and for ``xi`` grids, decaying) test states."""
    if g.variable == "theta":
        u = g.lam * g.nodes
        return {
            "constant": np.ones(g.N, dtype=complex),
            "cos^2": np.cos(u) ** 2 + 0j,
            "cos2": np.cos(2 * u) + 0j,
            "mixed": np.sin(u) + 0.5 * np.exp(3j * u),
        }
    x = g.nodes
    return {
        "gauss": np.exp(-x ** 2 / 2) + 0j,
        "gauss-shifted": np.exp(-(x - 1.0) ** 2 / 2) + 0j,
        "gauss-wave": np.exp(-x ** 2 / 4) * np.exp(1j * x),
    }


def check_state(g: GridRep, name: str, psi: np.ndarray, band_fraction: float = 0.25):
    """Raise ``PreconditionError`` unless ``psi`` is band-limited (and decays on ``xi`` grids)."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (g.N,):
        raise PreconditionError(f"state {name!r} has shape {psi.shape}, expected ({g.N},)")
    peak = np.max(np.abs(psi))
    if peak == 0:
        raise PreconditionError(f"state {name!r} is zero")
    coeffs = np.abs(np.fft.fft(psi)) / g.N
    k = np.abs(np.fft.fftfreq(g.N, 1.0 / g.N))
    tail = coeffs[k > band_fraction * g.N]
    if tail.size and tail.max() > BAND_TOL * coeffs.max():
        raise PreconditionError(
            f"state {name!r} is not band-limited below N*{band_fraction}: "
            f"tail coefficient {tail.max() / coeffs.max():.2e}")
    if g.variable in ("xi", "p"):
        edge = max(abs(psi[0]), abs(psi[-1]))
        if edge > DECAY_TOL * peak:
            raise PreconditionError(
                f"state {name!r} does not decay inside the domain: boundary/peak {edge / peak:.2e}")
    return psi


def _rel(r: np.ndarray, psi: np.ndarray) -> float:
    return float(np.linalg.norm(r) / np.linalg.norm(psi))


def verify_iso_relations(g: GridRep, states: dict | None = None) -> ResidualReport:
    """State-wise residuals of the iso(2) (beta < 0) or iso(1,1) (beta > 0) brackets.

    Returns ``||(LHS - RHS) psi|| / ||psi||`` per relation and state.
    """
    a3, pp, pm = iso_generators(g)
    A, Pp, Pm = a3.matrix, pp.matrix, pm.matrix
    states = default_states(g) if states is None else states
    sign = 1 if g.spec.beta > 0 else -1
    rep = ResidualReport(context={"variable": g.variable, "N": g.N, "lambda": g.lam,
                                  "beta_sign": sign})
    for name, psi in states.items():
        psi = check_state(g, name, psi)

        def comm(a, b):
            return a @ (b @ psi) - b @ (a @ psi)

        if sign > 0:
            rep.add("[A3,P+]=iP+", name, _rel(comm(A, Pp) - 1j * (Pp @ psi), psi))
            rep.add("[A3,P-]=-iP-", name, _rel(comm(A, Pm) + 1j * (Pm @ psi), psi))
        else:
            rep.add("[A3,P+]=iP-", name, _rel(comm(A, Pp) - 1j * (Pm @ psi), psi))
            rep.add("[A3,P-]=-iP+", name, _rel(comm(A, Pm) + 1j * (Pp @ psi), psi))
        rep.add("[P+,P-]=0", name, _rel(comm(Pp, Pm), psi))
    return rep


def casimir_k(g: GridRep) -> np.ndarray:
    """``K = P^2 - F^2/beta`` as a diagonal on the grid (``P = p``, ``F = f(p)``)."""
    p = g.p_nodes
    lam, rc = g.lam, math.sqrt(g.spec.c)
    if g.variable == "theta":
        f = rc * np.cos(lam * g.nodes)
    elif g.variable == "xi":
        f = rc * np.cosh(lam * g.nodes)
    else:
        raise UnsupportedCaseError("K is undefined for beta = 0")
    return p * p - f * f / g.spec.beta
