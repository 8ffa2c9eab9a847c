"""Alternating least-squares baseline and partial column-wise least-squares
solvers for symmetric outer product decomposition.

All solvers return a (FactorModel, ConvergenceTrace) pair, record one
residual per outer iteration, and stop on tolerance, iteration cap, or a
stalled residual. They are deterministic given their inputs and
SolverConfig.seed (the seed only drives the dead-column redraws).
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from . import _kernels
from .core import (
    FactorModel,
    SymmetryPattern,
    khatri_rao,
    mode_n_matricize,
    residual_sq,
    square_matricize,
    symmetry_check,
)
from .numerics import (
    ClippedEigenvaluesWarning,
    PinvOptions,
    qr_orthogonal_factor,
    symmetric_psd_factor,
)

__all__ = [
    "StopReason",
    "SolverConfig",
    "ConvergenceTrace",
    "InitKind",
    "InitStrategy",
    "initialize",
    "als3",
    "als3_sym",
    "als4_sym",
    "pcls3",
    "pcls4_case1",
    "pcls4_case2",
    "pcls4_full",
]

_SYM_PRE_TOL = 1e-8
_DEAD_COLUMN_REL = 1e-14
_ORTHO_DRIFT_TOL = 1e-8


class StopReason(Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    STALLED = "Stalled"


@dataclass(frozen=True)
class SolverConfig:
    """Iteration and stopping parameters shared by every solver.

    tol applies to the squared Frobenius residual. A run stalls when the
    relative residual change over the last stall_window iterations drops
    to stall_eps or below. pinv_cutoff of None picks the default relative
    singular-value threshold (see numerics.PinvOptions). seed drives only
    the dead-column redraws inside the PCLS sweeps.
    """

    max_iters: int = 20000
    tol: float = 1e-10
    inner_sweeps: int = 1
    pinv_cutoff: float | None = None
    stall_window: int = 50
    stall_eps: float = 1e-14
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.inner_sweeps < 1:
            raise ValueError("inner_sweeps must be >= 1")
        if self.stall_window < 1:
            raise ValueError("stall_window must be >= 1")
        if self.pinv_cutoff is not None:
            PinvOptions(self.pinv_cutoff)


@dataclass
class ConvergenceTrace:
    """Per-iteration solver history.

    residuals[i] is the squared Frobenius residual after outer iteration
    i+1; elapsed[i] the wall-clock seconds that iteration took. The
    symmetry_defect list is filled only by als3_sym (Frobenius distance
    between the two factors that model symmetric modes). diagnostics holds
    solver-specific counters (rank-deficient solves, redrawn columns,
    clipped eigenvalue mass, factor-space residuals).
    """

    residuals: list[float]
    elapsed: list[float]
    stop_reason: StopReason
    symmetry_defect: list[float] | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.residuals:
            raise ValueError("trace must contain at least one iteration")
        if any(r < 0 for r in self.residuals):
            raise ValueError("residuals must be nonnegative")
        if len(self.elapsed) != len(self.residuals):
            raise ValueError("elapsed and residuals must have equal length")

    @property
    def iterations(self) -> int:
        return len(self.residuals)

    @property
    def final_residual(self) -> float:
        return self.residuals[-1]


class InitKind(Enum):
    RANDOM_GAUSSIAN = "random-gaussian"
    PERTURBED_TRUTH = "perturbed-truth"


@dataclass(frozen=True)
class InitStrategy:
    """How starting factors are drawn.

    RANDOM_GAUSSIAN ignores sigma/reference. PERTURBED_TRUTH adds
    sigma * standard normal noise entrywise to the reference model factors.
    """

    kind: InitKind
    sigma: float = 0.0
    reference: FactorModel | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.kind is InitKind.PERTURBED_TRUTH and self.reference is None:
            raise ValueError("PERTURBED_TRUTH requires a reference model")

    @staticmethod
    def random_gaussian() -> "InitStrategy":
        return InitStrategy(InitKind.RANDOM_GAUSSIAN)

    @staticmethod
    def perturbed_truth(sigma: float, reference: FactorModel) -> "InitStrategy":
        return InitStrategy(InitKind.PERTURBED_TRUTH, sigma, reference)


def initialize(
    strategy: InitStrategy,
    shapes: Sequence[tuple[int, int]],
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Draw starting factor matrices of the given shapes."""
    shapes = [tuple(s) for s in shapes]
    if strategy.kind is InitKind.RANDOM_GAUSSIAN:
        return [rng.standard_normal(s) for s in shapes]
    ref = strategy.reference.factors
    if [f.shape for f in ref] != shapes:
        raise ValueError(
            f"reference factors have shapes {[f.shape for f in ref]}, "
            f"solver needs {shapes}"
        )
    return [f + strategy.sigma * rng.standard_normal(f.shape) for f in ref]


# The rank-one refits leave each summand's internal scale split
# unconstrained ((t a_r) (t a_r)^T (c_r / t^2) reconstructs identically), and
# on long plateaus the split drifts exponentially until (A (x) A) or the
# coordinate quartic coefficients overflow and LAPACK raises mid-solve. The
# residual is invariant under the split, so once a factor's magnitude leaves
# this band no representable progress remains and the loop reports Stalled.
_SCALE_LIMIT = 1e60


def _scales_sane(factors: Sequence[np.ndarray]) -> bool:
    for f in factors:
        m = float(np.abs(f).max()) if f.size else 0.0
        if not math.isfinite(m) or m > _SCALE_LIMIT:
            return False
        if 0.0 < m < 1.0 / _SCALE_LIMIT:
            return False
    return True


class _Loop:
    """Shared stopping logic: tolerance, stall window, iteration cap, and the
    factor-scale guard (``state`` returns the current factors)."""

    def __init__(self, cfg: SolverConfig, state=None, diag: dict | None = None):
        self.cfg = cfg
        self.residuals: list[float] = []
        self.elapsed: list[float] = []
        self._t0 = 0.0
        self._state = state
        self._diag = diag

    def start_iteration(self):
        self._t0 = time.perf_counter()

    def record(self, res: float) -> StopReason | None:
        self.elapsed.append(time.perf_counter() - self._t0)
        self.residuals.append(res)
        if res <= self.cfg.tol:
            return StopReason.CONVERGED
        w = self.cfg.stall_window
        if len(self.residuals) > w:
            prev = self.residuals[-1 - w]
            if abs(res - prev) <= self.cfg.stall_eps * max(prev, 1e-300):
                return StopReason.STALLED
        if self._state is not None and not _scales_sane(self._state()):
            if self._diag is not None:
                self._diag["scale_guard_iteration"] = len(self.residuals)
            return StopReason.STALLED
        return None

    def run(self, step) -> StopReason:
        reason = None
        for _ in range(self.cfg.max_iters):
            self.start_iteration()
            reason = self.record(step())
            if reason is not None:
                return reason
        return StopReason.MAX_ITERS


def _as_factor(a, name: str, rows: int, r: int) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    if a.shape != (rows, r):
        raise ValueError(f"{name} must have shape ({rows}, {r}), got {a.shape}")
    return a


def _require_rank(r: int):
    if r < 1:
        raise ValueError("rank must be >= 1")


def _require_symmetry(x: np.ndarray, pattern: SymmetryPattern):
    if not symmetry_check(x, pattern, _SYM_PRE_TOL):
        raise ValueError(
            f"input tensor is not {pattern.value}-symmetric within {_SYM_PRE_TOL:g}"
        )


class _Lstsq:
    """Least-squares solve that counts rank-deficient systems for the trace."""

    def __init__(self, cfg: SolverConfig, diagnostics: dict):
        self.rcond = cfg.pinv_cutoff
        self.diag = diagnostics
        self.iteration = 0

    def __call__(self, m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        sol, _, rank, _ = np.linalg.lstsq(m, rhs, rcond=self.rcond)
        if rank < m.shape[1]:
            self.diag["rank_deficient_solves"] = self.diag.get("rank_deficient_solves", 0) + 1
            self.diag.setdefault("first_rank_deficient_iteration", self.iteration + 1)
        return sol


def _sweep_columns(
    a: np.ndarray,
    g: np.ndarray,
    inner_sweeps: int,
    rng: np.random.Generator,
    diag: dict,
) -> None:
    """Update every column of ``a`` in place by coordinate minimization.

    Column r fits the unvec of g[:, r] as an outer product a_r a_r^T.
    Numerically dead columns of g cannot steer their summand, so the
    matching column of a is redrawn from a standard normal instead.
    """
    n = a.shape[0]
    floor = _DEAD_COLUMN_REL * float(np.linalg.norm(g))
    for r in range(a.shape[1]):
        col = g[:, r]
        if float(np.linalg.norm(col)) <= floor:
            a[:, r] = rng.standard_normal(n)
            diag["redrawn_columns"] = diag.get("redrawn_columns", 0) + 1
            continue
        y = np.ascontiguousarray(col.reshape(n, n, order="F"))
        ar = np.ascontiguousarray(a[:, r])
        _kernels.coordinate_sweep(ar, y, inner_sweeps)
        a[:, r] = ar


def als3(
    x: np.ndarray,
    r: int,
    init: Sequence[np.ndarray],
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Three-way alternating least squares with Gauss-Seidel sweeps A, B, C."""
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"als3 expects an order-3 tensor, got order {x.ndim}")
    _require_rank(r)
    if len(init) != 3:
        raise ValueError("als3 needs three initial factors")
    dims = x.shape
    f = [_as_factor(init[i], "ABC"[i], dims[i], r) for i in range(3)]
    unfolds = [mode_n_matricize(x, n) for n in range(3)]

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: f, diag=diag)

    def step() -> float:
        solve.iteration = len(loop.residuals)
        f[0] = solve(khatri_rao(f[2], f[1]), unfolds[0].T).T
        f[1] = solve(khatri_rao(f[2], f[0]), unfolds[1].T).T
        f[2] = solve(khatri_rao(f[1], f[0]), unfolds[2].T).T
        return residual_sq(x, FactorModel(SymmetryPattern.GENERAL3, list(f)))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.GENERAL3, list(f))
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)


def als3_sym(
    x: np.ndarray,
    r: int,
    init: Sequence[np.ndarray],
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """als3 seeded with equal factors in the two symmetric modes.

    The factors evolve independently after the seeding, so the result is a
    general three-way model; the per-iteration Frobenius distance between
    the first two factors is recorded as the trace's symmetry defect.
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != x.shape[1]:
        raise ValueError(f"als3_sym expects an I x I x K tensor, got {x.shape}")
    _require_rank(r)
    if len(init) != 2:
        raise ValueError("als3_sym needs two initial factors (A, C)")
    a0 = _as_factor(init[0], "A", x.shape[0], r)
    c0 = _as_factor(init[1], "C", x.shape[2], r)
    dims = x.shape
    f = [a0, a0.copy(), c0]
    unfolds = [mode_n_matricize(x, n) for n in range(3)]

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: f, diag=diag)
    defects: list[float] = []

    def step() -> float:
        solve.iteration = len(loop.residuals)
        f[0] = solve(khatri_rao(f[2], f[1]), unfolds[0].T).T
        f[1] = solve(khatri_rao(f[2], f[0]), unfolds[1].T).T
        f[2] = solve(khatri_rao(f[1], f[0]), unfolds[2].T).T
        defects.append(float(np.linalg.norm(f[0] - f[1])))
        return residual_sq(x, FactorModel(SymmetryPattern.GENERAL3, list(f)))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.GENERAL3, list(f))
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, defects, diag)


def als4_sym(
    x: np.ndarray,
    r: int,
    init: np.ndarray,
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Four-way alternating least squares seeded with all factors equal.

    The baseline for the fully symmetric fourth-order problem: four
    Gauss-Seidel least-squares updates per sweep against the mode-n
    matricizations, starting from four copies of the single initial factor.
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4:
        raise ValueError(f"als4_sym expects an order-4 tensor, got order {x.ndim}")
    if len(set(x.shape)) != 1:
        raise ValueError(
            f"als4_sym seeds all factors from one matrix; needs a cubical tensor, got {x.shape}"
        )
    _require_rank(r)
    a0 = _as_factor(init, "A", x.shape[0], r)
    f = [a0.copy() for _ in range(4)]
    unfolds = [mode_n_matricize(x, n) for n in range(4)]

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: f, diag=diag)

    def chain(n: int) -> np.ndarray:
        idx = [i for i in range(4) if i != n][::-1]
        m = f[idx[0]]
        for i in idx[1:]:
            m = khatri_rao(m, f[i])
        return m

    def step() -> float:
        solve.iteration = len(loop.residuals)
        for n in range(4):
            f[n] = solve(chain(n), unfolds[n].T).T
        return residual_sq(x, FactorModel(SymmetryPattern.GENERAL4, list(f)))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.GENERAL4, list(f))
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)


def pcls3(
    x: np.ndarray,
    r: int,
    init: Sequence[np.ndarray],
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Partial column-wise least squares for I x I x K tensors, symmetric in
    the first two modes.

    Each outer iteration: (1) solve for the symmetric-part targets
    G = (C+ T(3))^T by least squares against the current C; (2) refit each
    column a_r to unvec(G[:, r]) as a rank-one outer product by exact
    per-coordinate quartic minimization, warm started; (3) refit C by least
    squares against (A (x) A). The returned model reuses A in both symmetric
    modes, so its reconstruction is symmetric regardless of convergence.
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] != x.shape[1]:
        raise ValueError(f"pcls3 expects an I x I x K tensor, got {x.shape}")
    _require_symmetry(x, SymmetryPattern.PSYM3)
    _require_rank(r)
    if len(init) != 2:
        raise ValueError("pcls3 needs two initial factors (A, C)")
    a = _as_factor(init[0], "A", x.shape[0], r)
    c = _as_factor(init[1], "C", x.shape[2], r)
    t3 = mode_n_matricize(x, 2)

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: [a, c], diag=diag)
    rng = np.random.default_rng(cfg.seed)

    def step() -> float:
        nonlocal c
        solve.iteration = len(loop.residuals)
        g = solve(c, t3).T
        _sweep_columns(a, g, cfg.inner_sweeps, rng, diag)
        c = solve(khatri_rao(a, a), t3.T).T
        return residual_sq(x, FactorModel(SymmetryPattern.PSYM3, [a, c]))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.PSYM3, [a, c])
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)


def pcls4_case1(
    x: np.ndarray,
    r: int,
    init: Sequence[np.ndarray],
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Partial column-wise least squares for I x J x I x J tensors invariant
    under swapping modes (1,3) and modes (2,4).

    The square matricization factors as (A (x) A)(B (x) B)^T, so the A and B
    updates are two mirrored column-wise quartic fits.
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[0] != x.shape[2] or x.shape[1] != x.shape[3]:
        raise ValueError(f"pcls4_case1 expects an I x J x I x J tensor, got {x.shape}")
    _require_symmetry(x, SymmetryPattern.PSYM4_CASE1)
    _require_rank(r)
    if len(init) != 2:
        raise ValueError("pcls4_case1 needs two initial factors (A, B)")
    a = _as_factor(init[0], "A", x.shape[0], r)
    b = _as_factor(init[1], "B", x.shape[1], r)
    m = square_matricize(x)

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: [a, b], diag=diag)
    rng = np.random.default_rng(cfg.seed)

    def step() -> float:
        solve.iteration = len(loop.residuals)
        ga = solve(khatri_rao(b, b), m.T).T
        _sweep_columns(a, ga, cfg.inner_sweeps, rng, diag)
        gb = solve(khatri_rao(a, a), m).T
        _sweep_columns(b, gb, cfg.inner_sweeps, rng, diag)
        return residual_sq(x, FactorModel(SymmetryPattern.PSYM4_CASE1, [a, b]))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.PSYM4_CASE1, [a, b])
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)


def pcls4_case2(
    x: np.ndarray,
    r: int,
    init: Sequence[np.ndarray],
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Partial column-wise least squares for I x J x I x K tensors invariant
    under swapping modes (1,3).

    A is fit column-wise against the square matricization
    (A (x) A)(B (x) C)^T; B and C are then refit by plain least squares
    against the mode-2 and mode-4 matricizations.
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[0] != x.shape[2]:
        raise ValueError(f"pcls4_case2 expects an I x J x I x K tensor, got {x.shape}")
    _require_symmetry(x, SymmetryPattern.PSYM4_CASE2)
    _require_rank(r)
    if len(init) != 3:
        raise ValueError("pcls4_case2 needs three initial factors (A, B, C)")
    a = _as_factor(init[0], "A", x.shape[0], r)
    b = _as_factor(init[1], "B", x.shape[1], r)
    c = _as_factor(init[2], "C", x.shape[3], r)
    m = square_matricize(x)
    x2 = mode_n_matricize(x, 1)
    x4 = mode_n_matricize(x, 3)

    diag: dict = {}
    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: [a, b, c], diag=diag)
    rng = np.random.default_rng(cfg.seed)

    def step() -> float:
        nonlocal b, c
        solve.iteration = len(loop.residuals)
        ga = solve(khatri_rao(b, c), m.T).T
        _sweep_columns(a, ga, cfg.inner_sweeps, rng, diag)
        b = solve(khatri_rao(c, khatri_rao(a, a)), x2.T).T
        c = solve(khatri_rao(a, khatri_rao(b, a)), x4.T).T
        return residual_sq(x, FactorModel(SymmetryPattern.PSYM4_CASE2, [a, b, c]))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.PSYM4_CASE2, [a, b, c])
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)


def pcls4_full(
    x: np.ndarray,
    r: int,
    init: np.ndarray,
    cfg: SolverConfig | None = None,
) -> tuple[FactorModel, ConvergenceTrace]:
    """Partial column-wise least squares for fully symmetric I^4 tensors.

    Setup factors the square matricization as T ~= E E^T (eigenvalue
    clipping is surfaced in the trace diagnostics). Each iteration then
    fits A column-wise to G = E Q^T, refits P = argmin ||E - (A (x) A) P||,
    and takes Q as P's orthonormal QR factor. The starting Q is aligned to
    the initial A by one such refit, which makes an exact-truth start an
    exact fixed point. Residuals are tensor-space; the factor-space
    residuals ||E - (A (x) A) Q||_F^2 land in diagnostics["e_residuals"].
    """
    cfg = cfg or SolverConfig()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or len(set(x.shape)) != 1:
        raise ValueError(f"pcls4_full expects an I x I x I x I tensor, got {x.shape}")
    _require_symmetry(x, SymmetryPattern.FSYM4)
    _require_rank(r)
    n = x.shape[0]
    if r > n * n:
        raise ValueError(f"rank {r} exceeds I^2 = {n * n}")
    a = _as_factor(init, "A", n, r)

    diag: dict = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ClippedEigenvaluesWarning)
        e = symmetric_psd_factor(square_matricize(x), r)
    for w in caught:
        if isinstance(w.message, ClippedEigenvaluesWarning):
            diag["clipped_mass"] = w.message.clipped_mass
            diag["clipped_count"] = w.message.count

    solve = _Lstsq(cfg, diag)
    loop = _Loop(cfg, state=lambda: [a], diag=diag)
    rng = np.random.default_rng(cfg.seed)
    e_residuals: list[float] = []
    diag["e_residuals"] = e_residuals

    q = qr_orthogonal_factor(solve(khatri_rao(a, a), e))

    def step() -> float:
        nonlocal q
        solve.iteration = len(loop.residuals)
        if float(np.linalg.norm(q.T @ q - np.eye(r))) > _ORTHO_DRIFT_TOL:
            q = qr_orthogonal_factor(q)
            diag["reorthogonalized"] = diag.get("reorthogonalized", 0) + 1
        g = e @ q.T
        _sweep_columns(a, g, cfg.inner_sweeps, rng, diag)
        p = solve(khatri_rao(a, a), e)
        q = qr_orthogonal_factor(p)
        d = e - khatri_rao(a, a) @ q
        e_residuals.append(float(np.sum(d * d)))
        return residual_sq(x, FactorModel(SymmetryPattern.FSYM4, [a]))

    reason = loop.run(step)
    model = FactorModel(SymmetryPattern.FSYM4, [a])
    return model, ConvergenceTrace(loop.residuals, loop.elapsed, reason, None, diag)
