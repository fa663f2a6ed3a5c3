"""Reductions from set splitting to Weaver-style vector discrepancy,
with exhaustive and numerical verification of every construction step."""

__version__ = "0.1.0"

from .setsplit import (  # noqa: F401
    SetSplitInstance,
    brute_force_satisfiable,
    check_322,
    equality_gadget,
    gadget_witness,
    to_three_occurrence,
    unsatisfied_count,
)
from .weaver import (  # noqa: F401
    WeaverInstance,
    SolveResult,
    check_alpha_weaver,
    diag_stats,
    exact_w,
    frobenius_norm,
    heuristic_w,
    operator_norm,
    signed_sum,
)
from .quarter import q3_frame, reduce_quarter, witness_signing_quarter  # noqa: F401
from .general import (  # noqa: F401
    build_g,
    q4_frame,
    reduce_stage1,
    reduce_stage2,
    verify_pad_diagonal_bound,
    witness_signing_stage1,
    witness_signing_stage2,
)
from .satreduce import CnfFormula, full_pipeline, parse_dimacs  # noqa: F401
