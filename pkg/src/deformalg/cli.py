"""``deformalg`` command line: sweeps, checks and deterministic reports.

Every command evaluates one or more parameter points, attaches pass/fail
checks with the tolerances used, and writes a JSON (default) or CSV report to
stdout or ``--output``.  Exit status is 0 when every check passes, 2 when a
check fails (the report is still written) and 1 on usage or parameter errors.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .algebra import (
    build_deformed_triple,
    build_spin_rep,
    constrained_lambdas,
    contraction_bound,
    contraction_deviation,
    degeneracy_pattern,
    oscillator_levels,
    oscillator_spectrum_analytic,
    oscillator_spectrum_matrix,
    spin_value,
    su2_residuals,
    verify_nonlinear_relation,
)
from .errors import DeformAlgError
from .grid import (
    ANTIPERIODIC,
    FLAT,
    HYPER,
    PERIODIC,
    TABULATED,
    TRIG,
    DeformationSpec,
    build_grid,
    dirichlet_min_uncertainty,
    minimal_length_quadrature,
    position_spectrum,
    verify_iso_relations,
)
from .linearizer import (
    build_expansion,
    expansion_states,
    fit_closure_coefficients,
    flag_table,
    solve_closure_ode,
    verify_expansion_relations,
)
from .reports import SpectrumReport, to_csv, to_json

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2

COMMANDS = ("spectrum-oscillator", "spectrum-position", "minimal-length", "verify-algebra",
            "closure-fit", "expansion-check", "contraction-study")


class UsageError(Exception):
    """Bad flags or parameter keys; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# parameter handling


def parse_spin(text) -> Fraction:
    """``"7/2"``, ``"3.5"`` or ``7`` -> ``Fraction(7, 2)`` (validated)."""
    try:
        value = Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse spin {text!r}") from exc
    return spin_value(value)


def parse_spin_list(text: str) -> list[Fraction]:
    """Comma list of spins; ``a:b`` expands to ``a, a+1/2, ..., b``."""
    out: list[Fraction] = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        if ":" in item:
            lo, hi = (parse_spin(x) for x in item.split(":", 1))
            k = lo
            while k <= hi:
                out.append(k)
                k += Fraction(1, 2)
        else:
            out.append(parse_spin(item))
    if not out:
        raise UsageError("empty spin list")
    return out


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def _spin_str(j: Fraction) -> str:
    return str(j)


# key -> converter; the per-command ALLOWED sets below pick from these
CONVERTERS = {
    "j": lambda v: _spin_str(parse_spin(v)),
    "ratio": float,
    "family": str,
    "lambda": float,
    "beta": float,
    "c": float,
    "a": float,
    "N": int,
    "L": float,
    "bc": str,
    "span": str,
    "epsilon": int,
    "method": str,
    "relation": str,
    "file": str,
    "M": int,
    "window": float,
    "n-max": int,
}

ALLOWED = {
    "spectrum-oscillator": {"j"},
    "spectrum-position": {"family", "lambda", "c", "N", "bc", "span"},
    "minimal-length": {"family", "lambda", "beta", "c", "a", "N", "method", "file"},
    "verify-algebra": {"relation", "j", "ratio", "family", "lambda", "beta", "c", "N", "L"},
    "closure-fit": {"family", "lambda", "beta", "c", "a", "file", "M", "window"},
    "expansion-check": {"family", "lambda", "beta", "c", "N", "L", "epsilon"},
    "contraction-study": {"j", "n-max"},
}

DEFAULTS = {
    "spectrum-oscillator": {"j": "1"},
    "spectrum-position": {"family": TRIG, "lambda": 0.5, "c": 1.0, "N": 32, "bc": PERIODIC,
                          "span": "half"},
    "minimal-length": {"family": TRIG, "c": 1.0, "N": 400, "method": "quadrature"},
    "verify-algebra": {"relation": "su2", "j": "1", "ratio": 1.0, "c": 1.0, "N": 256},
    "closure-fit": {"family": HYPER, "c": 1.0, "M": 201},
    "expansion-check": {"family": TRIG, "c": 1.0, "N": 256, "epsilon": 1},
    "contraction-study": {"j": "100", "n-max": 3},
}

TOLERANCES = {
    "spectrum-oscillator": {"max_dev": 1e-10, "analytic_cross_check": 1e-12},
    "spectrum-position": {"max_dev": 1e-10, "overlap_defect": 1e-10},
    "minimal-length": {"quadrature": 1e-10, "dirichlet": 1e-3, "ratio_low": 0.2, "ratio_high": 0.3},
    "verify-algebra": {"su2_per_dim": 1e-12, "nonlinear_per_dim": 1e-10,
                       "unprojected_floor": 1e-3, "iso": 1e-8},
    "closure-fit": {"odd_coefficients": 1e-8, "family_residual": 1e-10,
                    "nonfamily_residual_floor": 1e-3, "ode_beta": 1e-8},
    "expansion-check": {"relations": 1e-8, "casimir": 1e-10},
    "contraction-study": {},
}

# tolerances that are lower bounds or brackets; --tol leaves them alone
NOT_UPPER = {"unprojected_floor", "nonfamily_residual_floor", "ratio_low", "ratio_high"}


def _normalize_key(key: str) -> str:
    key = str(key).replace("_", "-")
    return {"n-max": "n-max", "lam": "lambda"}.get(key, key)


def convert_point(command: str, raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        k = _normalize_key(key)
        if k not in ALLOWED[command]:
            raise UsageError(f"unknown parameter {key!r} for {command}; allowed: "
                             f"{', '.join(sorted(ALLOWED[command]))}")
        try:
            out[k] = CONVERTERS[k](value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value {value!r} for {key!r}: {exc}") from exc
    return out


def expand_sweep(obj) -> list[dict]:
    """``--params-json`` payload -> list of points.

    A list of objects is taken as explicit points; an object whose values are
    lists is expanded as a Cartesian product in key order.
    """
    if isinstance(obj, list):
        if not all(isinstance(p, dict) for p in obj):
            raise UsageError("--params-json list entries must be objects")
        return [dict(p) for p in obj]
    if not isinstance(obj, dict):
        raise UsageError("--params-json must be an object or a list of objects")
    keys = list(obj)
    axes = [v if isinstance(v, list) else [v] for v in obj.values()]
    return [dict(zip(keys, combo)) for combo in itertools.product(*axes)]


# ---------------------------------------------------------------------------
# checks


def check(name: str, computed, reference, tol: float, kind: str = "le", point: int = 0) -> dict:
    """One pass/fail entry.

    ``kind`` selects the comparison: ``le`` (deviation <= tol), ``gt``
    (computed > tol), ``lt`` (computed < tol), ``in`` (computed inside
    ``tol = (low, high)``) and ``eq`` (exact equality).
    """
    computed_f = float(computed)
    reference_f = float(reference)
    deviation = abs(computed_f - reference_f)
    if kind == "le":
        ok = deviation <= tol
    elif kind == "gt":
        ok = computed_f > tol
    elif kind == "lt":
        ok = computed_f < tol
    elif kind == "in":
        ok = tol[0] <= computed_f <= tol[1]
    elif kind == "eq":
        ok = computed_f == reference_f
    else:
        raise ValueError(kind)
    return {"name": name, "point": point, "computed": computed_f, "reference": reference_f,
            "deviation": deviation, "kind": kind,
            "tol": list(tol) if isinstance(tol, tuple) else tol, "pass": bool(ok)}


def _spec_from_point(p: dict) -> DeformationSpec:
    family = p.get("family", TRIG)
    c = p.get("c", 1.0)
    if family == TRIG:
        lam = p.get("lambda")
        if lam is None and "beta" in p:
            lam = math.sqrt(-p["beta"]) if p["beta"] < 0 else None
        if lam is None:
            raise UsageError("trig family needs lambda (or a negative beta)")
        return DeformationSpec.trig(lam, c)
    if family == HYPER:
        beta = p.get("beta")
        if beta is None and "lambda" in p:
            beta = p["lambda"] ** 2
        if beta is None:
            raise UsageError("hyper family needs beta (or lambda)")
        return DeformationSpec.hyper(beta, c, p.get("a"))
    if family == FLAT:
        return DeformationSpec.flat(p.get("a"), c)
    if family == TABULATED:
        if "file" not in p:
            raise UsageError("tabulated family needs --file")
        return DeformationSpec.from_file(p["file"])
    raise UsageError(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# commands; each returns (result dict, checks, spectra for CSV)


def cmd_spectrum_oscillator(p: dict, tol: dict, idx: int):
    j = parse_spin(p["j"])
    rep = build_spin_rep(j)
    l1, l2 = constrained_lambdas(j)
    triple = build_deformed_triple(rep, l1, l2)
    analytic = oscillator_spectrum_analytic(j)
    matrix = oscillator_spectrum_matrix(triple)
    observed = {}
    for label in matrix.labels:
        observed[label] = observed.get(label, 0) + 1
    expected = degeneracy_pattern(j)
    mismatches = sum(observed.get(k, 0) != v for k, v in expected.items())
    checks = [
        check("matrix_vs_analytic", matrix.max_dev, 0.0, tol["max_dev"], point=idx),
        check("analytic_cross_check", analytic.max_dev, 0.0, tol["analytic_cross_check"], point=idx),
        check("degeneracy_mismatches", mismatches, 0, 0, kind="eq", point=idx),
    ]
    result = {"j": _spin_str(j), "lambda": l1, "analytic": analytic.computed,
              "matrix": matrix.computed, "degeneracy": expected,
              "max_dev": matrix.max_dev, "spectrum": matrix}
    return result, checks, [(f"j={j}", matrix)]


def cmd_spectrum_position(p: dict, tol: dict, idx: int):
    spec = _spec_from_point(p)
    if p["bc"] not in (PERIODIC, ANTIPERIODIC):
        raise UsageError("spectrum-position needs bc periodic or antiperiodic")
    g = build_grid(spec, p["N"], L=p.get("L"), bc=p["bc"], span=p["span"])
    rep = position_spectrum(g)
    checks = [
        check("eigenvalues", rep.max_dev, 0.0, tol["max_dev"], point=idx),
        check("overlap_defect", 1.0 - rep.context["min_overlap"], 0.0, tol["overlap_defect"], point=idx),
    ]
    label = f"lambda={p.get('lambda')},N={p['N']},bc={p['bc']}"
    return {"spectrum": rep, "max_dev": rep.max_dev}, checks, [(label, rep)]


def _hyper_l0(spec: DeformationSpec) -> float:
    if not math.isfinite(spec.a):
        return 0.0
    rb, rc = math.sqrt(spec.beta), math.sqrt(spec.c)
    return (math.pi / 2) * rb / math.asinh(rb * spec.a / rc)


def cmd_minimal_length(p: dict, tol: dict, idx: int):
    spec = _spec_from_point(p)
    method = p["method"]
    if method not in ("quadrature", "dirichlet", "both"):
        raise UsageError(f"unknown method {method!r}")
    result: dict = {"family": spec.family}
    checks = []
    if method in ("quadrature", "both"):
        l0 = minimal_length_quadrature(spec)
        result["l0"] = l0
        if spec.family == TRIG:
            checks.append(check("quadrature_l0", l0, spec.lam, tol["quadrature"], point=idx))
        elif spec.family in (HYPER, FLAT):
            ref = _hyper_l0(spec) if spec.family == HYPER else (
                0.0 if not math.isfinite(spec.a) else (math.pi / 2) * math.sqrt(spec.c) / spec.a)
            kind = "eq" if ref == 0.0 else "le"
            checks.append(check("quadrature_l0", l0, ref, tol["quadrature"] if kind == "le" else 0,
                                kind=kind, point=idx))
    if method in ("dirichlet", "both"):
        if spec.family != TRIG:
            raise UsageError("the Dirichlet variational minimum is defined for the trig family")
        coarse = dirichlet_min_uncertainty(spec, p["N"])
        fine = dirichlet_min_uncertainty(spec, 2 * p["N"])
        ratio = fine.error / coarse.error if coarse.error > 0 else float("nan")
        result["dirichlet"] = {"coarse": coarse, "fine": fine, "convergence_ratio": ratio}
        checks.append(check("dirichlet_min_uncertainty", coarse.min_uncertainty, spec.lam,
                            tol["dirichlet"], point=idx))
        checks.append(check("convergence_ratio", ratio, 0.25,
                            (tol["ratio_low"], tol["ratio_high"]), kind="in", point=idx))
    return result, checks, []


def cmd_verify_algebra(p: dict, tol: dict, idx: int):
    relation = p["relation"]
    if relation == "su2":
        j = parse_spin(p["j"])
        rep = build_spin_rep(j)
        res = su2_residuals(rep)
        bound = tol["su2_per_dim"] * rep.dim
        checks = [check(name, value, 0.0, bound, point=idx) for name, value in res.items()]
        return {"j": _spin_str(j), "dim": rep.dim, "residuals": res}, checks, []
    if relation == "nonlinear":
        j = parse_spin(p["j"])
        rep = build_spin_rep(j)
        l1, l2 = constrained_lambdas(j, p["ratio"])
        t = build_deformed_triple(rep, l1, l2)
        projected = verify_nonlinear_relation(t)
        full = verify_nonlinear_relation(t, project=False)
        checks = [check("projected", projected, 0.0, tol["nonlinear_per_dim"] * rep.dim, point=idx)]
        if j >= 1:
            checks.append(check("unprojected_floor", full, 0.0, tol["unprojected_floor"],
                                kind="gt", point=idx))
        return {"j": _spin_str(j), "ratio": p["ratio"], "lambda1": l1, "lambda2": l2,
                "projected": projected, "unprojected": full}, checks, []
    if relation == "iso":
        spec = _spec_from_point(p)
        span = "full" if spec.family == TRIG else "half"
        g = build_grid(spec, p["N"], L=p.get("L"), span=span)
        rep = verify_iso_relations(g)
        checks = [check(name, value, 0.0, tol["iso"], point=idx)
                  for name, value in rep.by_relation().items()]
        return {"residuals": rep}, checks, []
    raise UsageError(f"unknown relation {relation!r}; choose su2, nonlinear or iso")


def closure_corpus() -> list[tuple[str, DeformationSpec, str]]:
    """Built-in test functions: ``(name, spec, role)`` with role ``family`` or ``even``."""
    p = np.linspace(-2.0, 2.0, 401)
    return [
        ("trig lambda=0.5", DeformationSpec.trig(0.5), "family"),
        ("trig lambda=1 c=2", DeformationSpec.trig(1.0, 2.0), "family"),
        ("hyper beta=0.25", DeformationSpec.hyper(0.25), "family"),
        ("hyper beta=1", DeformationSpec.hyper(1.0), "family"),
        ("hyper beta=0.5 c=2", DeformationSpec.hyper(0.5, 2.0), "family"),
        ("flat", DeformationSpec.flat(), "family"),
        ("1+0.3p^2", DeformationSpec.tabulated(p, 1 + 0.3 * p ** 2), "nonfamily"),
        ("cosh p", DeformationSpec.tabulated(p, np.cosh(p)), "even"),
        ("1+exp(-p^2)", DeformationSpec.tabulated(p, 1 + np.exp(-p ** 2)), "even"),
        ("sampled sqrt(1+0.5p^2)", DeformationSpec.tabulated(p, np.sqrt(1 + 0.5 * p ** 2)), "even"),
    ]


ODE_BETAS = (-1.0, -0.25, 0.0, 0.25, 1.0)


def cmd_closure_fit(p: dict, tol: dict, idx: int, corpus: bool = False):
    if not corpus:
        spec = _spec_from_point(p)
        fit = fit_closure_coefficients(spec, p["M"], p.get("window"))
        checks = []
        if spec.check_even():
            checks.append(check("alpha", abs(fit.alpha), 0.0, tol["odd_coefficients"], point=idx))
            checks.append(check("gamma", abs(fit.gamma), 0.0, tol["odd_coefficients"], point=idx))
        if spec.family != TABULATED:
            checks.append(check("family_residual", fit.residual, 0.0, tol["family_residual"], point=idx))
        return {"fit": fit}, checks, []
    fits, checks = {}, []
    for name, spec, role in closure_corpus():
        fit = fit_closure_coefficients(spec)
        fits[name] = fit
        checks.append(check(f"{name}: alpha", abs(fit.alpha), 0.0, tol["odd_coefficients"], point=idx))
        checks.append(check(f"{name}: gamma", abs(fit.gamma), 0.0, tol["odd_coefficients"], point=idx))
        if role == "family":
            checks.append(check(f"{name}: residual", fit.residual, 0.0, tol["family_residual"], point=idx))
        elif role == "nonfamily":
            checks.append(check(f"{name}: residual", fit.residual, 0.0,
                                tol["nonfamily_residual_floor"], kind="gt", point=idx))
    round_trip = {}
    for beta in ODE_BETAS:
        fit = fit_closure_coefficients(solve_closure_ode(beta))
        round_trip[repr(beta)] = fit.beta
        checks.append(check(f"ode beta={beta}", fit.beta, beta, tol["ode_beta"], point=idx))
    return {"fits": fits, "ode_round_trip": round_trip}, checks, []


# the four (beta sign, epsilon) cases checked by ``expansion-check --all``
EXPANSION_CASES = (
    {"family": TRIG, "lambda": 1.0, "N": 256, "epsilon": 1},
    {"family": TRIG, "lambda": 1.0, "N": 256, "epsilon": -1},
    {"family": HYPER, "lambda": 0.5, "N": 256, "L": 8.0, "epsilon": 1},
    {"family": HYPER, "lambda": 0.5, "N": 256, "L": 8.0, "epsilon": -1},
)


def cmd_expansion_check(p: dict, tol: dict, idx: int):
    spec = _spec_from_point(p)
    if spec.family not in (TRIG, HYPER):
        raise UsageError("expansion-check needs the trig or hyper family")
    if spec.family == HYPER and "L" not in p:
        raise UsageError("hyper grids need L")
    span = "full" if spec.family == TRIG else "half"
    g = build_grid(spec, p["N"], L=p.get("L"), span=span)
    iso = verify_iso_relations(g, expansion_states(g))
    e = build_expansion(g, p["epsilon"])
    rel = verify_expansion_relations(e)
    flags = flag_table(e)
    checks = [check(f"iso {name}", value, 0.0, tol["relations"], point=idx)
              for name, value in iso.by_relation().items()]
    checks += [check(name, value, 0.0, tol["relations"], point=idx)
               for name, value in rel.by_relation().items()]
    c2_ref = spec.c / g.lam ** 2
    checks.append(check("casimir C2 = c/lambda^2", e.casimir_value, c2_ref, tol["casimir"] * c2_ref,
                        point=idx))
    checks.append(check("hermiticity flags match stated table", float(flags["match"]), 1.0, 0,
                        kind="eq", point=idx))
    result = {"expansion": e, "iso": iso, "relations": rel, "flags": flags}
    return result, checks, []


def cmd_contraction_study(p: dict, tol: dict, idx: int):
    j = parse_spin(p["j"])
    n_max = p["n-max"]
    if n_max < 0 or n_max > j:
        raise UsageError(f"n-max={n_max} outside 0..{math.floor(j)}")
    levels = oscillator_levels(j)[: n_max + 1]
    rows = []
    checks = []
    for n, e_n in enumerate(levels):
        dev = contraction_deviation(j, n)
        bound = contraction_bound(j, n)
        rows.append({"n": n, "E_n": e_n, "deviation": dev, "bound": bound})
        checks.append(check(f"j={j} n={n} bound", dev, 0.0, bound, point=idx))
    spectrum = SpectrumReport(computed=levels, reference=[n + 0.5 for n in range(len(levels))],
                              matched=levels, labels=list(range(len(levels))))
    return {"j": _spin_str(j), "levels": rows}, checks, [(f"j={j}", spectrum)]


HANDLERS = {
    "spectrum-oscillator": cmd_spectrum_oscillator,
    "spectrum-position": cmd_spectrum_position,
    "minimal-length": cmd_minimal_length,
    "verify-algebra": cmd_verify_algebra,
    "closure-fit": cmd_closure_fit,
    "expansion-check": cmd_expansion_check,
    "contraction-study": cmd_contraction_study,
}


def _monotone_checks(results: list[dict], points: list[dict]) -> list[dict]:
    """Contraction: deviations shrink as j grows (for every n present at both j)."""
    out = []
    pairs = sorted(((parse_spin(r["j"]), r) for r in results), key=lambda t: t[0])
    for (j_a, r_a), (j_b, r_b) in zip(pairs, pairs[1:]):
        for lev_a, lev_b in zip(r_a["levels"], r_b["levels"]):
            n = lev_a["n"]
            out.append(check(f"n={n}: dev(j={j_b}) < dev(j={j_a})", lev_b["deviation"],
                             lev_a["deviation"], lev_a["deviation"], kind="lt", point=-1))
    return out


# ---------------------------------------------------------------------------
# argument parsing and dispatch


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="deformalg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"deformalg {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")
        sp.add_argument("--params-json", metavar="JSON",
                        help="sweep: a list of parameter objects, or an object of value lists")
        sp.add_argument("--tol", type=float, help="override every upper-bound tolerance")
        sp.add_argument("--workers", type=int, default=1, help="threads for sweep points")

    sp = sub.add_parser("spectrum-oscillator", help="deformed oscillator spectrum at spin j")
    sp.add_argument("--j")
    sp.add_argument("--j-list")
    common(sp)

    sp = sub.add_parser("spectrum-position", help="discrete position spectrum on a momentum grid")
    sp.add_argument("--family", choices=(TRIG,))
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--bc", choices=(PERIODIC, ANTIPERIODIC))
    sp.add_argument("--span", choices=("half", "full"))
    common(sp)

    sp = sub.add_parser("minimal-length", help="minimal length by quadrature or Dirichlet variation")
    sp.add_argument("--family", choices=(TRIG, HYPER, FLAT, TABULATED))
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--method", choices=("quadrature", "dirichlet", "both"))
    sp.add_argument("--file")
    common(sp)

    sp = sub.add_parser("verify-algebra", help="su(2), projected nonlinear or iso relations")
    sp.add_argument("--relation", choices=("su2", "nonlinear", "iso"))
    sp.add_argument("--j")
    sp.add_argument("--j-list")
    sp.add_argument("--ratio", type=float)
    sp.add_argument("--ratio-list")
    sp.add_argument("--family", choices=(TRIG, HYPER))
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--L", type=float)
    common(sp)

    sp = sub.add_parser("closure-fit", help="fit f f' onto span{1, p, f}")
    sp.add_argument("--family", choices=(TRIG, HYPER, FLAT, TABULATED))
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--file", help="two-column (p, f) text file; implies the tabulated family")
    sp.add_argument("--M", type=int)
    sp.add_argument("--window", type=float)
    sp.add_argument("--corpus", action="store_true", help="run the built-in test-function corpus")
    common(sp)

    sp = sub.add_parser("expansion-check", help="expanded brackets, Casimir and hermiticity flags")
    sp.add_argument("--family", choices=(TRIG, HYPER))
    sp.add_argument("--lambda", dest="lambda_", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--L", type=float)
    sp.add_argument("--epsilon", type=int, choices=(1, -1))
    sp.add_argument("--all", action="store_true", help="run the four (sign beta, epsilon) cases")
    common(sp)

    sp = sub.add_parser("contraction-study", help="|E_n - (n + 1/2)| against the 1/j bound")
    sp.add_argument("--j")
    sp.add_argument("--j-list")
    sp.add_argument("--n-max", type=int)
    common(sp)
    return parser


FLAG_KEYS = {"j": "j", "lambda_": "lambda", "beta": "beta", "c": "c", "a": "a", "N": "N",
             "L": "L", "bc": "bc", "span": "span", "epsilon": "epsilon", "method": "method",
             "relation": "relation", "ratio": "ratio", "family": "family", "file": "file",
             "M": "M", "window": "window", "n_max": "n-max"}


def collect_points(args) -> list[dict]:
    command = args.command
    base = {}
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            base[key] = value
    if command == "closure-fit" and "file" in base:
        base.setdefault("family", TABULATED)
    axes: dict[str, list] = {}
    if getattr(args, "j_list", None):
        axes["j"] = [str(j) for j in parse_spin_list(args.j_list)]
    if getattr(args, "ratio_list", None):
        axes["ratio"] = _float_list(args.ratio_list)
    if getattr(args, "all", False):
        points = [dict(case) for case in EXPANSION_CASES]
    else:
        points = [dict(zip(axes, combo)) for combo in itertools.product(*axes.values())] or [{}]
    if args.params_json:
        try:
            payload = json.loads(args.params_json)
        except json.JSONDecodeError as exc:
            raise UsageError(f"--params-json is not valid JSON: {exc}") from exc
        sweep = expand_sweep(payload)
        points = [{**pt, **sw} for pt in points for sw in sweep]
    out = []
    for pt in points:
        merged = {**DEFAULTS[command], **convert_point(command, base), **convert_point(command, pt)}
        out.append(merged)
    return out


def run(args) -> tuple[dict, list, int]:
    """Evaluate every point; returns (report, csv spectra, exit status)."""
    command = args.command
    tol = dict(TOLERANCES[command])
    if args.tol is not None:
        tol = {k: (v if k in NOT_UPPER else args.tol) for k, v in tol.items()}
    points = collect_points(args)
    handler = HANDLERS[command]
    corpus = bool(getattr(args, "corpus", False))

    def evaluate(item):
        idx, point = item
        if command == "closure-fit":
            return handler(point, tol, idx, corpus=corpus)
        return handler(point, tol, idx)

    if args.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(evaluate, enumerate(points)))
    else:
        outcomes = [evaluate(item) for item in enumerate(points)]
    results = [o[0] for o in outcomes]
    checks = [c for o in outcomes for c in o[1]]
    spectra = [s for o in outcomes for s in o[2]]
    if command == "contraction-study" and len(results) > 1:
        checks += _monotone_checks(results, points)
    passed = all(c["pass"] for c in checks)
    report = {
        "command": command,
        "version": __version__,
        "params": points,
        "tolerances": tol,
        "results": results,
        "checks": checks,
        "pass": passed,
    }
    if command == "minimal-length" and len(results) == 1 and "l0" in results[0]:
        report["l0"] = results[0]["l0"]
    return report, spectra, EXIT_OK if passed else EXIT_TOLERANCE


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        report, spectra, status = run(args)
    except UsageError as exc:
        print(f"deformalg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DeformAlgError, ValueError, OSError) as exc:
        print(f"deformalg: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "csv":
        if spectra:
            text = to_csv(spectra)
        else:
            text = to_csv([(c["point"], _check_rows(c)) for c in report["checks"]]) \
                if report["checks"] else to_csv([])
    else:
        text = to_json(report)
    try:
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"deformalg: error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for c in report["checks"]:
        if not c["pass"]:
            print(f"deformalg: check failed: {c['name']} (point {c['point']}): "
                  f"computed {c['computed']:.6g}, tol {c['tol']}", file=sys.stderr)
    return status


def _check_rows(c: dict) -> SpectrumReport:
    return SpectrumReport(computed=[c["computed"]], reference=[c["reference"]], labels=[c["name"]])


if __name__ == "__main__":
    sys.exit(main())
