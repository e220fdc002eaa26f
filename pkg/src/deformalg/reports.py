"""Spectrum reports and deterministic JSON/CSV serialization."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class SpectrumReport:
    """Computed eigenvalues next to their analytic reference values.

    ``computed`` holds every eigenvalue found (sorted). ``reference`` lists
    the analytic values that were checked (in the producer's row order),
    ``matched`` the computed value paired with each reference entry and
    ``labels`` the quantum number of each reference entry.
    """

    computed: list[float]
    reference: list[float]
    matched: list[float] | None = None
    labels: list | None = None
    context: dict = field(default_factory=dict)

    def __post_init__(self):
        self.computed = sorted(float(x) for x in self.computed)
        self.reference = [float(x) for x in self.reference]
        if self.matched is None:
            if len(self.computed) != len(self.reference):
                raise ValueError("matched values are required for a reference subset")
            self.matched = list(self.computed)
        self.matched = [float(x) for x in self.matched]
        if len(self.matched) != len(self.reference):
            raise ValueError("matched and reference lengths differ")
        if self.labels is None:
            self.labels = list(range(len(self.reference)))

    @property
    def deviations(self) -> list[float]:
        return [abs(c - r) for c, r in zip(self.matched, self.reference)]

    @property
    def max_dev(self) -> float:
        dev = self.deviations
        return max(dev) if dev else 0.0

    def to_dict(self) -> dict:
        return {
            "computed": self.computed,
            "reference": self.reference,
            "matched": self.matched,
            "labels": self.labels,
            "deviations": self.deviations,
            "max_dev": self.max_dev,
            "context": self.context,
        }

    def rows(self):
        for label, c, r, d in zip(self.labels, self.matched, self.reference, self.deviations):
            yield label, c, r, d


def match_nearest(computed, reference) -> list[float]:
    """Pair each reference value with the nearest unused computed value."""
    pool = sorted(float(x) for x in computed)
    used = np.zeros(len(pool), dtype=bool)
    arr = np.asarray(pool)
    out = []
    for r in reference:
        dist = np.where(used, np.inf, np.abs(arr - r))
        k = int(np.argmin(dist))
        used[k] = True
        out.append(pool[k])
    return out


def _plain(obj):
    """Convert numpy scalars/arrays and dataclass-like reports into JSON primitives."""
    if isinstance(obj, SpectrumReport):
        return _plain(obj.to_dict())
    if hasattr(obj, "to_dict"):
        return _plain(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    text = format(x, ".17g")
    # keep integral values recognizably floating point ("0.0", "2.0")
    return text if any(ch in text for ch in ".e") else text + ".0"


def _encode(obj, indent: int, level: int) -> str:
    import json

    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def to_json(report) -> str:
    """Stable JSON: sorted keys, 17 significant digits per float."""
    return _encode(_plain(report), 2, 0) + "\n"


def to_csv(spectra) -> str:
    """One row per ``(index, computed, reference, deviation)``.

    ``spectra`` is a list of ``(point_label, SpectrumReport)``; a ``point``
    column is prepended when more than one spectrum is written.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    multi = len(spectra) > 1
    header = ["index", "computed", "reference", "deviation"]
    writer.writerow((["point"] if multi else []) + header)
    for point, rep in spectra:
        for label, c, r, d in rep.rows():
            row = [str(label), _fmt_float(c), _fmt_float(r), _fmt_float(d)]
            writer.writerow(([str(point)] if multi else []) + row)
    return buf.getvalue()


@dataclass
class ResidualReport:
    """Per-relation, per-state relative residuals."""

    entries: list[dict] = field(default_factory=list)
    context: dict = field(default_factory=dict)

    def add(self, relation: str, state: str, residual: float):
        self.entries.append({"relation": relation, "state": state, "residual": float(residual)})

    @property
    def max_residual(self) -> float:
        return max((e["residual"] for e in self.entries), default=0.0)

    def by_relation(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for e in self.entries:
            out[e["relation"]] = max(out.get(e["relation"], 0.0), e["residual"])
        return out

    def passed(self, tol: float) -> bool:
        return self.max_residual <= tol

    def to_dict(self) -> dict:
        return {"entries": self.entries, "max_residual": self.max_residual,
                "by_relation": self.by_relation(), "context": self.context}
