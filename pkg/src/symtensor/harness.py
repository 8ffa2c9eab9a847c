"""Synthetic problem generation, experiment orchestration, and trace I/O.

An experiment runs one problem kind over many seeds, each seed solved by one
or more solvers from a shared starting point, and aggregates iteration and
wall-time statistics over the converged runs. Per-run histories go to CSV,
the aggregate summary to JSON.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import FactorModel, SymmetryPattern, reconstruct
from .solvers import (
    ConvergenceTrace,
    InitStrategy,
    SolverConfig,
    StopReason,
    als3_sym,
    als4_sym,
    initialize,
    pcls3,
    pcls4_case1,
    pcls4_case2,
    pcls4_full,
)

__all__ = [
    "KIND_PATTERNS",
    "gen_partial_sym3",
    "gen_full_sym4",
    "gen_partial_sym4_case1",
    "gen_partial_sym4_case2",
    "generate_problem",
    "init_shapes",
    "solve_problem",
    "supported_solvers",
    "ExperimentSpec",
    "RunRecord",
    "AggregateStats",
    "RunSummary",
    "run_experiment",
    "iterations_to_threshold",
    "thread_count",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary_json",
]

KIND_PATTERNS = {
    "psym3": SymmetryPattern.PSYM3,
    "psym4-case1": SymmetryPattern.PSYM4_CASE1,
    "psym4-case2": SymmetryPattern.PSYM4_CASE2,
    "fsym4": SymmetryPattern.FSYM4,
}


def _draw_factor(rng: np.random.Generator, rows: int, r: int, collinearity: float) -> np.ndarray:
    """Random factor with a tunable shared component across columns.

    collinearity 0 gives i.i.d. standard normal entries. A value c in (0, 1)
    mixes in a constant direction so distinct columns have expected cosine
    similarity c, which is what makes alternating least squares prone to
    long swamp plateaus.
    """
    g = rng.standard_normal((rows, r))
    if collinearity == 0.0:
        return g
    if not 0.0 <= collinearity < 1.0:
        raise ValueError("collinearity must lie in [0, 1)")
    return np.sqrt(collinearity) + np.sqrt(1.0 - collinearity) * g


def gen_partial_sym3(
    i: int, k: int, r: int, rng: np.random.Generator, collinearity: float = 0.0
) -> tuple[np.ndarray, FactorModel]:
    """Random I x I x K tensor symmetric in modes 1-2, plus its generating model."""
    model = FactorModel(
        SymmetryPattern.PSYM3,
        [_draw_factor(rng, i, r, collinearity), _draw_factor(rng, k, r, collinearity)],
    )
    return reconstruct(model), model


def gen_full_sym4(
    i: int, r: int, rng: np.random.Generator, collinearity: float = 0.0
) -> tuple[np.ndarray, FactorModel]:
    """Random fully symmetric I^4 tensor; its square matricization is PSD."""
    model = FactorModel(SymmetryPattern.FSYM4, [_draw_factor(rng, i, r, collinearity)])
    return reconstruct(model), model


def gen_partial_sym4_case1(
    i: int, j: int, r: int, rng: np.random.Generator, collinearity: float = 0.0
) -> tuple[np.ndarray, FactorModel]:
    """Random I x J x I x J tensor invariant under the (1,3) and (2,4) swaps."""
    model = FactorModel(
        SymmetryPattern.PSYM4_CASE1,
        [_draw_factor(rng, i, r, collinearity), _draw_factor(rng, j, r, collinearity)],
    )
    return reconstruct(model), model


def gen_partial_sym4_case2(
    i: int, j: int, k: int, r: int, rng: np.random.Generator, collinearity: float = 0.0
) -> tuple[np.ndarray, FactorModel]:
    """Random I x J x I x K tensor invariant under the (1,3) swap."""
    model = FactorModel(
        SymmetryPattern.PSYM4_CASE2,
        [
            _draw_factor(rng, i, r, collinearity),
            _draw_factor(rng, j, r, collinearity),
            _draw_factor(rng, k, r, collinearity),
        ],
    )
    return reconstruct(model), model


def generate_problem(
    kind: str,
    dims: tuple[int, ...],
    rank: int,
    rng: np.random.Generator,
    collinearity: float = 0.0,
) -> tuple[np.ndarray, FactorModel]:
    """Dispatch to the generator for ``kind``, validating dims against it."""
    pattern = KIND_PATTERNS.get(kind)
    if pattern is None:
        raise ValueError(f"unknown problem kind {kind!r} (known: {sorted(KIND_PATTERNS)})")
    rows = pattern.factor_rows(tuple(dims))
    if kind == "psym3":
        return gen_partial_sym3(rows[0], rows[1], rank, rng, collinearity)
    if kind == "fsym4":
        return gen_full_sym4(rows[0], rank, rng, collinearity)
    if kind == "psym4-case1":
        return gen_partial_sym4_case1(rows[0], rows[1], rank, rng, collinearity)
    return gen_partial_sym4_case2(rows[0], rows[1], rows[2], rank, rng, collinearity)


def init_shapes(kind: str, dims: tuple[int, ...], rank: int) -> list[tuple[int, int]]:
    """Shapes of the starting factors shared by every solver for ``kind``."""
    pattern = KIND_PATTERNS[kind]
    return [(rows, rank) for rows in pattern.factor_rows(tuple(dims))]


def supported_solvers(kind: str) -> tuple[str, ...]:
    """Solver names runnable on ``kind`` ("pcls" always; "als" where defined)."""
    if kind in ("psym3", "fsym4"):
        return ("pcls", "als")
    if kind in ("psym4-case1", "psym4-case2"):
        return ("pcls",)
    raise ValueError(f"unknown problem kind {kind!r}")


def solve_problem(
    kind: str,
    solver: str,
    x: np.ndarray,
    rank: int,
    init: list[np.ndarray],
    cfg: SolverConfig,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Run the named solver on a tensor of the given kind."""
    if solver not in supported_solvers(kind):
        raise ValueError(f"solver {solver!r} is not available for kind {kind!r}")
    if kind == "psym3":
        fn = pcls3 if solver == "pcls" else als3_sym
        return fn(x, rank, init, cfg)
    if kind == "fsym4":
        fn4 = pcls4_full if solver == "pcls" else als4_sym
        return fn4(x, rank, init[0], cfg)
    if kind == "psym4-case1":
        return pcls4_case1(x, rank, init, cfg)
    return pcls4_case2(x, rank, init, cfg)


@dataclass(frozen=True)
class ExperimentSpec:
    """One problem family, a seed range, and the solvers to compare."""

    kind: str
    dims: tuple[int, ...]
    rank: int
    solvers: tuple[str, ...] = ("pcls", "als")
    n_seeds: int = 10
    base_seed: int = 0
    init: str = "random"  # "random" or "perturbed"
    init_sigma: float = 0.1
    collinearity: float = 0.0
    config: SolverConfig = field(default_factory=SolverConfig)
    out_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KIND_PATTERNS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 1 for d in self.dims):
            raise ValueError("dims must be positive")
        KIND_PATTERNS[self.kind].factor_rows(self.dims)
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.n_seeds < 1:
            raise ValueError("need at least one seed")
        if self.init not in ("random", "perturbed"):
            raise ValueError(f"init must be 'random' or 'perturbed', got {self.init!r}")
        allowed = supported_solvers(self.kind)
        for s in self.solvers:
            if s not in allowed:
                raise ValueError(f"solver {s!r} not available for kind {self.kind!r}")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one (seed, solver) run."""

    seed_index: int
    solver: str
    iterations: int
    final_residual: float
    wall_time: float
    stop_reason: str
    trace_path: str | None = None


@dataclass(frozen=True)
class AggregateStats:
    """Statistics for one solver over the declared run population.

    population records the censoring rule: "converged" means the means and
    medians cover converged runs only; non-converged runs show up solely in
    the convergence fraction. With zero converged runs the statistics are
    None.
    """

    solver: str
    population: str
    n_runs: int
    n_converged: int
    convergence_fraction: float
    mean_iterations: float | None
    median_iterations: float | None
    mean_wall_time: float | None
    median_wall_time: float | None


@dataclass(frozen=True)
class RunSummary:
    spec: ExperimentSpec
    runs: list[RunRecord]
    aggregates: dict[str, AggregateStats]


def thread_count() -> int:
    """Worker count from SYMTENSOR_THREADS: unset = 1, 0 = all cores, N = N."""
    raw = os.environ.get("SYMTENSOR_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError("SYMTENSOR_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _seed_for(base: int, namespace: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((base, namespace, index)))


def _aggregate(solver: str, records: list[RunRecord]) -> AggregateStats:
    converged = [r for r in records if r.stop_reason == StopReason.CONVERGED.value]
    stats: dict[str, float | None] = {
        "mean_iterations": None,
        "median_iterations": None,
        "mean_wall_time": None,
        "median_wall_time": None,
    }
    if converged:
        its = [r.iterations for r in converged]
        wall = [r.wall_time for r in converged]
        stats = {
            "mean_iterations": statistics.fmean(its),
            "median_iterations": float(statistics.median(its)),
            "mean_wall_time": statistics.fmean(wall),
            "median_wall_time": float(statistics.median(wall)),
        }
    return AggregateStats(
        solver=solver,
        population="converged",
        n_runs=len(records),
        n_converged=len(converged),
        convergence_fraction=len(converged) / len(records),
        **stats,
    )


def run_experiment(spec: ExperimentSpec) -> RunSummary:
    """Generate, solve, and aggregate one experiment.

    Each seed gets its own problem instance and one shared set of starting
    factors handed to every solver in the comparison. Seeds may execute on a
    thread pool (SYMTENSOR_THREADS); records are joined in (seed, solver)
    order, so the output is schedule independent.
    """
    if spec.out_dir:
        os.makedirs(spec.out_dir, exist_ok=True)

    def one_seed(idx: int) -> list[RunRecord]:
        x, truth = generate_problem(
            spec.kind, spec.dims, spec.rank, _seed_for(spec.base_seed, 0, idx), spec.collinearity
        )
        if spec.init == "perturbed":
            strategy = InitStrategy.perturbed_truth(spec.init_sigma, truth)
        else:
            strategy = InitStrategy.random_gaussian()
        init = initialize(
            strategy, init_shapes(spec.kind, spec.dims, spec.rank), _seed_for(spec.base_seed, 1, idx)
        )
        redraw_seed = int(
            np.random.SeedSequence((spec.base_seed, 2, idx)).generate_state(1)[0]
        )
        cfg = dataclasses.replace(spec.config, seed=redraw_seed)
        out = []
        for solver in spec.solvers:
            _, trace = solve_problem(
                spec.kind, solver, x, spec.rank, [f.copy() for f in init], cfg
            )
            path = None
            if spec.out_dir:
                path = os.path.join(spec.out_dir, f"trace_{solver}_seed{idx:03d}.csv")
                write_trace_csv(trace, path)
            out.append(
                RunRecord(
                    seed_index=idx,
                    solver=solver,
                    iterations=trace.iterations,
                    final_residual=trace.final_residual,
                    wall_time=float(sum(trace.elapsed)),
                    stop_reason=trace.stop_reason.value,
                    trace_path=path,
                )
            )
        return out

    workers = thread_count()
    if workers == 1:
        per_seed = [one_seed(i) for i in range(spec.n_seeds)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(one_seed, range(spec.n_seeds)))

    runs = [record for seed_runs in per_seed for record in seed_runs]
    aggregates = {
        solver: _aggregate(solver, [r for r in runs if r.solver == solver])
        for solver in spec.solvers
    }
    summary = RunSummary(spec=spec, runs=runs, aggregates=aggregates)
    if spec.out_dir:
        write_summary_json(summary, os.path.join(spec.out_dir, "summary.json"))
    return summary


def iterations_to_threshold(residuals, threshold: float) -> int | None:
    """1-based index of the first residual at or below threshold, else None."""
    for i, r in enumerate(residuals):
        if r <= threshold:
            return i + 1
    return None


def write_trace_csv(trace: ConvergenceTrace, path: str) -> None:
    """CSV with one row per iteration: iteration, residual_sq, elapsed_s.

    Residuals carry 17 significant digits so parsing them back is bit exact.
    """
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "residual_sq", "elapsed_s"])
            for i, (res, dt) in enumerate(zip(trace.residuals, trace.elapsed), start=1):
                w.writerow([i, "%.16e" % res, "%.9e" % dt])
    except OSError as exc:
        raise OSError(f"failed to write trace to {path}: {exc}") from exc


def read_trace_csv(path: str) -> tuple[list[float], list[float]]:
    """Parse a trace CSV back into (residuals, elapsed_s) lists."""
    residuals: list[float] = []
    elapsed: list[float] = []
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                residuals.append(float(row["residual_sq"]))
                elapsed.append(float(row["elapsed_s"]))
    except OSError as exc:
        raise OSError(f"failed to read trace from {path}: {exc}") from exc
    return residuals, elapsed


def write_summary_json(summary: RunSummary, path: str) -> None:
    """Write the experiment summary (spec, runs, aggregates) as JSON."""
    spec = summary.spec
    doc = {
        "experiment": {
            "kind": spec.kind,
            "dims": list(spec.dims),
            "rank": spec.rank,
            "solvers": list(spec.solvers),
            "n_seeds": spec.n_seeds,
            "base_seed": spec.base_seed,
            "init": spec.init,
            "init_sigma": spec.init_sigma,
            "collinearity": spec.collinearity,
            "config": dataclasses.asdict(spec.config),
        },
        "runs": [dataclasses.asdict(r) for r in summary.runs],
        "aggregates": {name: dataclasses.asdict(a) for name, a in summary.aggregates.items()},
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=False)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"failed to write summary to {path}: {exc}") from exc
