"""Coverage evaluation, large-sample comparator intervals, and scenario sweeps.

Coverage at a probability vector is exact: the interval-inclusion indicator
summed against the exact lattice pmf.  Curves sweep a uniform grid of target
values, sampling feasible probability vectors at each; the minimum over all
cells estimates the confidence coefficient.  Comparator intervals follow
standard large-sample theory (chi-square critical value times a plug-in
standard error), with full degrees of freedom or the single-contrast
adjustment.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.stats import chi2

from .bounds import IntervalTable, SolverConfig, build_interval_table
from .errors import InputError
from .model import (
    ObservedCounts,
    Problem,
    SimplexPoint,
    build_problem,
    check_counts,
    experiment,
)
from .optimizer import sample_constrained
from .pmf import pmf_fft

Method = Literal["exact", "exact-adjusted", "gold", "goodman"]

#: Grid-point mass below which a missing interval entry is ignored.
MASS_EPS = 1e-12

#: Inclusion slack absorbing float round-off in the target's dot product.
INCLUSION_EPS = 1e-10


def _inclusion_tol(L: float) -> float:
    return INCLUSION_EPS * max(1.0, abs(L))


@dataclass(frozen=True)
class CoverageReport:
    """Per-grid-point coverage plus the global average and minimum."""

    L_grid: np.ndarray
    coverage: np.ndarray
    avg_coverage: float
    conf_coeff_estimate: float
    method: Method

    def __post_init__(self):
        if self.L_grid.shape != self.coverage.shape:
            raise InputError("L_grid and coverage must have equal length")


@dataclass(frozen=True)
class Budget:
    """Sampling sizes for a sweep: grid points, vectors per point, MC draws."""

    n_L: int
    n_p: int
    n_draws: int


BUDGETS: dict[str, Budget] = {
    "desk": Budget(n_L=50, n_p=50, n_draws=200),
    "paper": Budget(n_L=1000, n_p=1000, n_draws=500),
}

_SCENARIO_WEIGHTS: dict[str, tuple[tuple[int, ...], ...]] = {
    "A": ((0, 1, 1), (2, 0, 3), (5, 3, 0)),
    "B": ((1, 2, 3, 0), (1, 1, 2, 0)),
    "C": ((1, 0), (-1, 0)),
    "D": ((4, -2, -2), (4, -1, -1, -2)),
}

_SCENARIO_COMPARATOR: dict[str, Optional[Method]] = {
    "A": "gold",
    "B": "gold",
    "C": "goodman",
    "D": None,
}


@dataclass(frozen=True)
class ScenarioSpec:
    """One of the four benchmark weight layouts with a common block size."""

    id: str
    n: int

    def __post_init__(self):
        if self.id not in _SCENARIO_WEIGHTS:
            raise InputError(f"scenario id must be one of A, B, C, D, got {self.id!r}")
        if self.n < 1:
            raise InputError(f"scenario sample size must be >= 1, got {self.n}")

    @property
    def weights(self) -> tuple[tuple[int, ...], ...]:
        return _SCENARIO_WEIGHTS[self.id]

    @property
    def comparator(self) -> Optional[Method]:
        return _SCENARIO_COMPARATOR[self.id]

    def problem(self) -> Problem:
        return build_problem([experiment(self.n, block) for block in self.weights])


def coverage_at_p(problem: Problem, p: SimplexPoint, table: IntervalTable) -> float:
    """Exact probability that the interval drawn under p captures p's target.

    Sums the pmf over observed values whose interval contains the weighted
    sum at p; errors if a grid point carrying real mass has no table entry.
    """
    dist = pmf_fft(problem, p)
    L = p.dot_weights(problem)
    missing = (dist.probs > MASS_EPS) & ~table.present
    if np.any(missing):
        idx = int(np.flatnonzero(missing)[0])
        raise InputError(
            f"interval table lacks an entry at grid index {idx} with mass {dist.probs[idx]:.3e}"
        )
    tol = _inclusion_tol(L)
    with np.errstate(invalid="ignore"):
        covered = table.present & (table.lower - tol <= L) & (L <= table.upper + tol)
    return float(dist.probs[covered].sum())


def _cell_rng(seed: int, l_idx: int, p_idx: int, salt: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed), l_idx, p_idx, salt)))


def _L_grid(problem: Problem, n_L: int) -> np.ndarray:
    lo, hi = float(problem.L_min), float(problem.L_max)
    if n_L == 1:
        return np.array([0.5 * (lo + hi)])
    return np.linspace(lo, hi, n_L)


def average_coverage(
    problem: Problem,
    table: IntervalTable,
    n_L: int,
    n_p: int,
    seed: int,
) -> float:
    """Mean exact coverage over a uniform target grid (flat target weighting)."""
    grid = _L_grid(problem, n_L)
    total = 0.0
    for l_idx, L in enumerate(grid):
        acc = 0.0
        for p_idx in range(n_p):
            p = sample_constrained(problem, float(L), _cell_rng(seed, l_idx, p_idx))
            acc += coverage_at_p(problem, p, table)
        total += acc / n_p
    return total / grid.size


def coverage_curve(
    problem: Problem,
    alpha: float,
    n_L: int,
    n_p: int,
    cfg: SolverConfig = SolverConfig(),
    seed: int = 42,
    table: Optional[IntervalTable] = None,
    threads: int = 1,
) -> CoverageReport:
    """Exact-method coverage across a uniform target grid.

    Builds the full interval table once, then averages exact coverage over
    ``n_p`` sampled vectors per grid point.  The reported confidence
    coefficient is the minimum over every sampled cell.
    """
    if n_L < 1 or n_p < 1:
        raise InputError(f"n_L and n_p must be >= 1, got {n_L}, {n_p}")
    if table is None:
        table = build_interval_table(problem, alpha, cfg, threads=threads)
    grid = _L_grid(problem, n_L)
    per_L = np.empty(grid.size)
    minimum = 1.0
    for l_idx, L in enumerate(grid):
        acc = 0.0
        for p_idx in range(n_p):
            p = sample_constrained(problem, float(L), _cell_rng(seed, l_idx, p_idx))
            c = coverage_at_p(problem, p, table)
            acc += c
            minimum = min(minimum, c)
        per_L[l_idx] = acc / n_p
    method: Method = "exact" if abs(table.alpha - alpha) < 1e-12 else "exact-adjusted"
    return CoverageReport(
        L_grid=grid,
        coverage=per_L,
        avg_coverage=float(per_L.mean()),
        conf_coeff_estimate=minimum,
        method=method,
    )


def _large_sample_halfwidth(
    problem: Problem,
    counts_blocks: list[np.ndarray],
    alpha: float,
    df: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized estimate and half-width for batches of count blocks."""
    w_blocks = problem.w_blocks_float()
    n_rows = counts_blocks[0].shape[0]
    y_hat = np.zeros(n_rows)
    var = np.zeros(n_rows)
    for e, wb, xb in zip(problem.experiments, w_blocks, counts_blocks):
        phat = xb / e.n
        mean_w = phat @ wb
        y_hat += mean_w
        var += (phat @ (wb**2) - mean_w**2) / e.n
    crit = float(chi2.ppf(1.0 - alpha, df))
    half = np.sqrt(crit * np.maximum(var, 0.0))
    return y_hat, half


def _comparator_df(problem: Problem, method: Method) -> int:
    if method == "gold":
        return sum(e.m - 1 for e in problem.experiments)
    if method == "goodman":
        return 1
    raise InputError(f"unknown comparator method {method!r}")


def _large_sample_interval(
    problem: Problem,
    counts: ObservedCounts,
    alpha: float,
    method: Method,
) -> tuple[float, float]:
    check_counts(problem, counts)
    blocks = [np.array([b], dtype=float) for b in counts.blocks]
    y_hat, half = _large_sample_halfwidth(
        problem, blocks, alpha, _comparator_df(problem, method)
    )
    lo = max(float(y_hat[0] - half[0]), float(problem.L_min))
    hi = min(float(y_hat[0] + half[0]), float(problem.L_max))
    return lo, hi


def gold_interval(
    problem: Problem, counts: ObservedCounts, alpha: float
) -> tuple[float, float]:
    """Large-sample interval with chi-square df summed over all experiments."""
    return _large_sample_interval(problem, counts, alpha, "gold")


def goodman_interval(
    problem: Problem, counts: ObservedCounts, alpha: float
) -> tuple[float, float]:
    """Large-sample interval with a single contrast degree of freedom."""
    return _large_sample_interval(problem, counts, alpha, "goodman")


def mc_coverage_large_sample(
    problem: Problem,
    p: SimplexPoint,
    alpha: float,
    n_draws: int,
    method: Method,
    seed: int = 42,
) -> float:
    """Monte Carlo coverage of a comparator interval at one probability vector."""
    if n_draws < 1:
        raise InputError(f"n_draws must be >= 1, got {n_draws}")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return _mc_coverage(problem, p, alpha, n_draws, method, rng)


def _mc_coverage(
    problem: Problem,
    p: SimplexPoint,
    alpha: float,
    n_draws: int,
    method: Method,
    rng: np.random.Generator,
) -> float:
    L = p.dot_weights(problem)
    blocks = [
        rng.multinomial(e.n, block, size=n_draws).astype(float)
        for e, block in zip(problem.experiments, p.blocks)
    ]
    y_hat, half = _large_sample_halfwidth(
        problem, blocks, alpha, _comparator_df(problem, method)
    )
    lo = np.maximum(y_hat - half, float(problem.L_min))
    hi = np.minimum(y_hat + half, float(problem.L_max))
    tol = _inclusion_tol(L)
    return float(np.mean((lo - tol <= L) & (L <= hi + tol)))


def comparator_curve(
    problem: Problem,
    alpha: float,
    n_L: int,
    n_p: int,
    n_draws: int,
    method: Method,
    seed: int = 42,
) -> CoverageReport:
    """Monte Carlo coverage sweep for a large-sample comparator.

    Uses the same per-cell probability draws as the exact sweep with the same
    seed, so the two curves are directly comparable.
    """
    grid = _L_grid(problem, n_L)
    per_L = np.empty(grid.size)
    minimum = 1.0
    for l_idx, L in enumerate(grid):
        acc = 0.0
        for p_idx in range(n_p):
            p = sample_constrained(problem, float(L), _cell_rng(seed, l_idx, p_idx))
            c = _mc_coverage(
                problem, p, alpha, n_draws, method, _cell_rng(seed, l_idx, p_idx, salt=1)
            )
            acc += c
            minimum = min(minimum, c)
        per_L[l_idx] = acc / n_p
    return CoverageReport(
        L_grid=grid,
        coverage=per_L,
        avg_coverage=float(per_L.mean()),
        conf_coeff_estimate=minimum,
        method=method,
    )


def run_scenario(
    spec: ScenarioSpec,
    alpha: float,
    budget: Budget,
    cfg: SolverConfig = SolverConfig(),
    seed: int = 42,
    threads: int = 1,
) -> tuple[CoverageReport, Optional[CoverageReport], dict[str, float]]:
    """Exact sweep plus the matched comparator sweep (where one applies).

    Returns the two reports and wall-clock runtimes in seconds; the
    comparator slot is None for layouts no large-sample method handles.
    """
    problem = spec.problem()
    t0 = time.perf_counter()
    exact = coverage_curve(
        problem, alpha, budget.n_L, budget.n_p, cfg, seed=seed, threads=threads
    )
    t1 = time.perf_counter()
    comparator = None
    if spec.comparator is not None:
        comparator = comparator_curve(
            problem, alpha, budget.n_L, budget.n_p, budget.n_draws, spec.comparator, seed=seed
        )
    t2 = time.perf_counter()
    runtimes = {"exact_s": t1 - t0, "comparator_s": t2 - t1}
    return exact, comparator, runtimes
