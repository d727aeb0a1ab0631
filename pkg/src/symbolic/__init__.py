"""
Symbolic conversion: operator library, edge fits and hazard formulas.
"""

from .library import SymbolicOperator, get_operator, operator_library  # noqa: F401
from .edges import SymbolicEdge  # noqa: F401
from .fitting import (  # noqa: F401
    auto_symbolic,
    export_edge_samples,
    finetune_affine,
    fit_affine,
    fit_linear,
    load_edge_samples,
    set_symbolic,
)
from .formula import Formula, render_formula, term_importance  # noqa: F401
