"""Symmetric outer product decomposition of third- and fourth-order tensors.

Two solver families over structured random or user-supplied tensors: a
column-wise least-squares method that exploits the index symmetries
(pcls3, pcls4_case1, pcls4_case2, pcls4_full) and the alternating
least-squares baselines it is compared against (als3, als3_sym, als4_sym).
"""
from ._kernels import NUMBA_ENABLED
from .core import (
    SUPPORTED_ORDERS,
    FactorModel,
    SymmetryPattern,
    khatri_rao,
    mode_n_matricize,
    fold_mode_n,
    reconstruct,
    residual_sq,
    square_matricize,
    symmetry_check,
    symmetry_defect,
    unvec,
)
from .harness import (
    AggregateStats,
    ExperimentSpec,
    RunRecord,
    RunSummary,
    gen_full_sym4,
    gen_partial_sym3,
    gen_partial_sym4_case1,
    gen_partial_sym4_case2,
    generate_problem,
    init_shapes,
    iterations_to_threshold,
    read_trace_csv,
    run_experiment,
    solve_problem,
    supported_solvers,
    thread_count,
    write_summary_json,
    write_trace_csv,
)
from .io import read_model, read_tensor, write_model, write_tensor
from .numerics import (
    ClippedEigenvaluesWarning,
    PinvOptions,
    QuarticCoefficients,
    build_coordinate_quartic,
    least_squares,
    pseudoinverse,
    qr_orthogonal_factor,
    quartic_global_min,
    real_cubic_roots,
    symmetric_psd_factor,
)
from .solvers import (
    ConvergenceTrace,
    InitKind,
    InitStrategy,
    SolverConfig,
    StopReason,
    als3,
    als3_sym,
    als4_sym,
    initialize,
    pcls3,
    pcls4_case1,
    pcls4_case2,
    pcls4_full,
)

__version__ = "0.1.0"

__all__ = [
    "NUMBA_ENABLED",
    "SUPPORTED_ORDERS",
    "FactorModel",
    "SymmetryPattern",
    "khatri_rao",
    "mode_n_matricize",
    "fold_mode_n",
    "reconstruct",
    "residual_sq",
    "square_matricize",
    "symmetry_check",
    "symmetry_defect",
    "unvec",
    "AggregateStats",
    "ExperimentSpec",
    "RunRecord",
    "RunSummary",
    "gen_full_sym4",
    "gen_partial_sym3",
    "gen_partial_sym4_case1",
    "gen_partial_sym4_case2",
    "generate_problem",
    "init_shapes",
    "iterations_to_threshold",
    "read_trace_csv",
    "run_experiment",
    "solve_problem",
    "supported_solvers",
    "thread_count",
    "write_summary_json",
    "write_trace_csv",
    "read_model",
    "read_tensor",
    "write_model",
    "write_tensor",
    "ClippedEigenvaluesWarning",
    "PinvOptions",
    "QuarticCoefficients",
    "build_coordinate_quartic",
    "least_squares",
    "pseudoinverse",
    "qr_orthogonal_factor",
    "quartic_global_min",
    "real_cubic_roots",
    "symmetric_psd_factor",
    "ConvergenceTrace",
    "InitKind",
    "InitStrategy",
    "SolverConfig",
    "StopReason",
    "als3",
    "als3_sym",
    "als4_sym",
    "initialize",
    "pcls3",
    "pcls4_case1",
    "pcls4_case2",
    "pcls4_full",
    "__version__",
]
