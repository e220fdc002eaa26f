"""Numerical toolkit for deformed Heisenberg algebras ``[X, P] = i f(P)``.

Submodules:

* :mod:`deformalg.algebra` -- spin-j matrices, the deformed triple, the
  projected nonlinear relation and the deformed oscillator.
* :mod:`deformalg.grid` -- momentum-space grids, the position spectrum, the
  minimal length and the iso(2) / iso(1,1) realizations.
* :mod:`deformalg.linearizer` -- closure fit of ``f f'`` and the expansion to
  three-generator simple algebras.
* :mod:`deformalg.cli` -- the ``deformalg`` command line.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConstraintError,
    DeformAlgError,
    InvalidParameterError,
    NumericalConsistencyError,
    PreconditionError,
    RepresentationError,
    ResourceLimitError,
    UnsupportedCaseError,
)
from .operators import HermitianOperator, anticommutator, commutator  # noqa: E402
from .reports import ResidualReport, SpectrumReport, to_csv, to_json  # noqa: E402

__all__ = [
    "__version__",
    "ConstraintError",
    "DeformAlgError",
    "HermitianOperator",
    "InvalidParameterError",
    "NumericalConsistencyError",
    "PreconditionError",
    "RepresentationError",
    "ResidualReport",
    "ResourceLimitError",
    "SpectrumReport",
    "UnsupportedCaseError",
    "anticommutator",
    "commutator",
    "to_csv",
    "to_json",
]
