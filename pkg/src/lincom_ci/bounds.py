"""Interval bounds by inverting the tail functionals with a bracketed solver.

The lower bound is the weighted-sum value at which the upper-tail functional
of the observed statistic drops to alpha/2; the upper bound mirrors it with
the lower-tail functional.  Both functionals are evaluated by the stochastic
optimizer, so each solve fixes the optimizer seed from the observed value
only (not from the trial target), making the solved function deterministic
and effectively monotone during the bracketing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .errors import InputError, NumericalError
from .model import (
    ObservedCounts,
    Problem,
    attainable_mask,
    check_counts,
    estimate_L,
    y_lattice,
)
from .optimizer import OptimizerConfig, inf_cdf, sup_cdf
from .pmf import predecessor

_LOWER, _UPPER, _QUANT_LB, _QUANT_UB = 0, 1, 2, 3


@dataclass(frozen=True)
class SolverConfig:
    """Root-solve precision and the optimizer settings behind each evaluation.

    ``tol_f`` is how close the tail functional must come to alpha/2;
    ``tol_L`` is the bracket width cutoff and defaults to 1e-6 of the
    attainable span when left unset.
    """

    tol_f: float = 1e-4
    tol_L: Optional[float] = None
    max_iter: int = 100
    optimizer: OptimizerConfig = OptimizerConfig()

    def __post_init__(self):
        if self.tol_f <= 0 or (self.tol_L is not None and self.tol_L <= 0):
            raise InputError("solver tolerances must be positive")
        if self.max_iter < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter}")

    def resolved_tol_L(self, problem: Problem) -> float:
        if self.tol_L is not None:
            return self.tol_L
        span = float(problem.L_max - problem.L_min)
        return 1e-6 * (span if span > 0 else 1.0)


@dataclass(frozen=True)
class FiducialBounds:
    """Interval endpoints with solve diagnostics.

    ``lb_pinned``/``ub_pinned`` mark endpoints forced to the attainable
    extremes (observed value at a lattice end); ``residuals`` are the
    distances of the tail functionals from alpha/2 at the returned endpoints.
    """

    lower: float
    upper: float
    alpha: float
    y_hat: Fraction
    lb_pinned: bool
    ub_pinned: bool
    residuals: tuple[float, float]


@dataclass(frozen=True)
class _BoundResult:
    value: float
    pinned: bool
    residual: float


def _derived_seed(base_seed: int, side: int, y_index: int, attempt: int) -> int:
    ss = np.random.SeedSequence((int(base_seed), side, y_index, attempt))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _with_seed(cfg: SolverConfig, seed: int) -> OptimizerConfig:
    return replace(cfg.optimizer, seed=seed)


def _bracket_solve(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    f_lo: float,
    f_hi: float,
    tol_f: float,
    tol_L: float,
    max_iter: int,
) -> tuple[float, float]:
    """Hybrid false-position/bisection on a bracketing interval.

    Requires opposite signs at the ends.  Returns (root, |f(root)|); if the
    bracket collapses before |f| reaches tol_f, returns the endpoint on the
    f <= 0 side, which widens the interval and so errs conservatively for
    both bound directions.
    """
    a, fa, b, fb = lo, f_lo, hi, f_hi
    if fa == 0.0:
        return a, 0.0
    if fb == 0.0:
        return b, 0.0
    if (fa > 0) == (fb > 0):
        raise NumericalError(
            f"root bracket [{lo:g}, {hi:g}] has same-sign values ({fa:g}, {fb:g})"
        )
    for it in range(max_iter):
        if abs(b - a) <= tol_L:
            break
        if it % 2 == 0 and fb != fa:
            x = b - fb * (b - a) / (fb - fa)
            margin = 0.01 * abs(b - a)
            x = min(max(x, min(a, b) + margin), max(a, b) - margin)
        else:
            x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= tol_f:
            return x, abs(fx)
        if (fx > 0) == (fb > 0):
            b, fb = x, fx
        else:
            a, fa = x, fx
    # Bracket exhausted: report the f <= 0 endpoint (conservative side).
    if fa <= 0:
        return a, abs(fa)
    return b, abs(fb)


def _expand_until_sign(
    f: Callable[[float], float],
    start: float,
    limit: float,
    f_start: float,
    want_positive: bool,
    steps: int = 8,
) -> tuple[float, float]:
    """Walk from start toward limit until f has the wanted sign (or fail)."""
    x, fx = start, f_start
    for i in range(1, steps + 1):
        if (fx > 0) == want_positive and fx != 0:
            return x, fx
        x = start + (limit - start) * i / steps
        fx = f(x)
    if (fx > 0) == want_positive or fx == 0:
        return x, fx
    raise NumericalError(
        f"could not bracket the tail-functional root by expanding toward {limit:g}"
    )


def _solve_lower(
    problem: Problem,
    y: Union[Fraction, int, float],
    alpha: float,
    cfg: SolverConfig,
) -> _BoundResult:
    lattice = y_lattice(problem)
    y_idx = lattice.index_of(y)
    y = lattice.value(y_idx)
    if not attainable_mask(problem)[y_idx]:
        raise InputError(f"observed value {y} is not attainable by any outcome")
    if y_idx == 0:
        return _BoundResult(float(problem.L_min), True, 0.0)
    y_star = predecessor(lattice, y)
    target = alpha / 2.0
    tol_L = cfg.resolved_tol_L(problem)
    L_min, L_max = float(problem.L_min), float(problem.L_max)

    def tail(L: float, seed: int) -> float:
        # Upper-tail functional P(Y >= y | L): one minus the infimum CDF at y*.
        return 1.0 - inf_cdf(problem, y_star, L, _with_seed(cfg, seed)).value

    candidates: list[_BoundResult] = []
    for attempt in range(2):
        seed = _derived_seed(cfg.optimizer.seed, _LOWER, y_idx, attempt)
        f = lambda L: tail(L, seed) - target
        f_lo = f(L_min)
        if f_lo > 0:
            return _BoundResult(L_min, True, 0.0)
        hi, f_hi = float(y), f(float(y))
        if f_hi < 0:
            hi, f_hi = _expand_until_sign(f, hi, L_max, f_hi, want_positive=True)
        root, residual = _bracket_solve(
            f, L_min, hi, f_lo, f_hi, cfg.tol_f, tol_L, cfg.max_iter
        )
        candidates.append(_BoundResult(root, False, residual))
        if residual <= cfg.tol_f:
            break
    best = min(candidates, key=lambda r: r.value)  # wider interval wins
    return best


def _solve_upper(
    problem: Problem,
    y: Union[Fraction, int, float],
    alpha: float,
    cfg: SolverConfig,
) -> _BoundResult:
    lattice = y_lattice(problem)
    y_idx = lattice.index_of(y)
    y = lattice.value(y_idx)
    if not attainable_mask(problem)[y_idx]:
        raise InputError(f"observed value {y} is not attainable by any outcome")
    if y_idx == lattice.count - 1:
        return _BoundResult(float(problem.L_max), True, 0.0)
    target = alpha / 2.0
    tol_L = cfg.resolved_tol_L(problem)
    L_min, L_max = float(problem.L_min), float(problem.L_max)

    def tail(L: float, seed: int) -> float:
        # Lower-tail functional P(Y <= y | L): the supremum CDF at y.
        return sup_cdf(problem, y, L, _with_seed(cfg, seed)).value

    candidates: list[_BoundResult] = []
    for attempt in range(2):
        seed = _derived_seed(cfg.optimizer.seed, _UPPER, y_idx, attempt)
        g = lambda L: tail(L, seed) - target
        g_hi = g(L_max)
        if g_hi > 0:
            return _BoundResult(L_max, True, 0.0)
        lo, g_lo = float(y), g(float(y))
        if g_lo < 0:
            lo, g_lo = _expand_until_sign(g, lo, L_min, g_lo, want_positive=True)
        root, residual = _bracket_solve(
            g, lo, L_max, g_lo, g_hi, cfg.tol_f, tol_L, cfg.max_iter
        )
        candidates.append(_BoundResult(root, False, residual))
        if residual <= cfg.tol_f:
            break
    best = max(candidates, key=lambda r: r.value)  # wider interval wins
    return best


def _validate_alpha(alpha: float) -> float:
    if not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(alpha)


def lower_bound(
    problem: Problem,
    y: Union[Fraction, int, float],
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Lower interval endpoint for an observed statistic value."""
    return _solve_lower(problem, y, _validate_alpha(alpha), cfg).value


def upper_bound(
    problem: Problem,
    y: Union[Fraction, int, float],
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
) -> float:
    """Upper interval endpoint for an observed statistic value."""
    return _solve_upper(problem, y, _validate_alpha(alpha), cfg).value


def fiducial_interval(
    problem: Problem,
    counts: ObservedCounts,
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
) -> FiducialBounds:
    """Exact interval for the weighted sum given observed counts."""
    alpha = _validate_alpha(alpha)
    check_counts(problem, counts)
    y_hat = estimate_L(problem, counts)
    lo = _solve_lower(problem, y_hat, alpha, cfg)
    up = _solve_upper(problem, y_hat, alpha, cfg)
    lower = min(lo.value, float(y_hat))
    upper = max(up.value, float(y_hat))
    return FiducialBounds(
        lower=lower,
        upper=upper,
        alpha=alpha,
        y_hat=y_hat,
        lb_pinned=lo.pinned,
        ub_pinned=up.pinned,
        residuals=(lo.residual, up.residual),
    )


def y_quantile_lb(
    problem: Problem,
    L: float,
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
) -> Optional[Fraction]:
    """Smallest grid value whose upper-tail functional at L is <= alpha.

    Returns None when no grid value qualifies.  Exposed mainly so the
    monotonicity-in-L properties of the tail quantiles can be tested.
    """
    if not problem.L_min <= L <= problem.L_max:
        raise InputError(
            f"target {L!r} outside attainable range [{problem.L_min}, {problem.L_max}]"
        )
    lattice = y_lattice(problem)
    for idx in range(lattice.count):
        if idx == 0:
            value = 1.0  # every outcome is >= the origin
        else:
            seed = _derived_seed(cfg.optimizer.seed, _QUANT_LB, idx, 0)
            y_star = lattice.value(idx - 1)
            value = 1.0 - inf_cdf(problem, y_star, float(L), _with_seed(cfg, seed)).value
        if value <= alpha:
            return lattice.value(idx)
    return None


def y_quantile_ub(
    problem: Problem,
    L: float,
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
) -> Optional[Fraction]:
    """Largest grid value whose lower-tail functional at L is <= alpha."""
    if not problem.L_min <= L <= problem.L_max:
        raise InputError(
            f"target {L!r} outside attainable range [{problem.L_min}, {problem.L_max}]"
        )
    lattice = y_lattice(problem)
    for idx in range(lattice.count - 1, -1, -1):
        if idx == lattice.count - 1:
            value = 1.0  # every outcome is <= the top grid value
        else:
            seed = _derived_seed(cfg.optimizer.seed, _QUANT_UB, idx, 0)
            value = sup_cdf(problem, lattice.value(idx), float(L), _with_seed(cfg, seed)).value
        if value <= alpha:
            return lattice.value(idx)
    return None


@dataclass(frozen=True)
class IntervalTable:
    """Interval endpoints for every attainable observed value, index-aligned."""

    problem: Problem
    alpha: float
    lower: np.ndarray
    upper: np.ndarray
    present: np.ndarray

    def entry(self, y: Union[Fraction, int, float]) -> tuple[float, float]:
        idx = y_lattice(self.problem).index_of(y)
        if not self.present[idx]:
            raise InputError(f"no interval entry for unattainable value {y!r}")
        return float(self.lower[idx]), float(self.upper[idx])


def build_interval_table(
    problem: Problem,
    alpha: float,
    cfg: SolverConfig = SolverConfig(),
    threads: int = 1,
) -> IntervalTable:
    """Solve both endpoints for every attainable observed value.

    Endpoints at the lattice extremes are pinned without a solve.  Distinct
    observed values are independent, so they may be solved in parallel.
    """
    alpha = _validate_alpha(alpha)
    lattice = y_lattice(problem)
    mask = attainable_mask(problem)
    lower = np.full(lattice.count, np.nan)
    upper = np.full(lattice.count, np.nan)
    indices = [i for i in range(lattice.count) if mask[i]]

    def solve(idx: int) -> tuple[int, float, float]:
        y = lattice.value(idx)
        lo = _solve_lower(problem, y, alpha, cfg)
        up = _solve_upper(problem, y, alpha, cfg)
        return idx, lo.value, up.value

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, indices))
    else:
        results = [solve(i) for i in indices]
    for idx, lo_v, up_v in results:
        lower[idx] = lo_v
        upper[idx] = up_v
    lower.setflags(write=False)
    upper.setflags(write=False)
    return IntervalTable(problem=problem, alpha=alpha, lower=lower, upper=upper, present=mask)


def adjust_alpha(
    problem: Problem,
    alpha: float,
    L_grid_size: int,
    cfg: SolverConfig = SolverConfig(),
    n_p: Optional[int] = None,
    coverage_tol: float = 0.005,
    alpha_tol: float = 1e-3,
) -> float:
    """Inflated significance level whose average coverage hits 1 - alpha.

    Average coverage is evaluated over a uniform grid of target values (flat
    weighting), sampling ``n_p`` feasible probability vectors per grid point
    with common random numbers across candidate levels, so the coverage curve
    is a deterministic, monotone function of the candidate level and can be
    bisected.  Returns ``alpha`` unchanged when adjustment has no effect
    (degenerate problems), and the largest allowed level when even that
    cannot pull average coverage down to the target.
    """
    from .coverage import average_coverage  # deferred: coverage imports bounds

    alpha = _validate_alpha(alpha)
    if L_grid_size < 1:
        raise InputError(f"L_grid_size must be >= 1, got {L_grid_size}")
    n_p = L_grid_size if n_p is None else n_p
    target = 1.0 - alpha
    cache: dict[float, float] = {}

    def C(alpha_prime: float) -> float:
        if alpha_prime not in cache:
            table = build_interval_table(problem, alpha_prime, cfg)
            cache[alpha_prime] = average_coverage(
                problem, table, L_grid_size, n_p, cfg.optimizer.seed
            )
        return cache[alpha_prime]

    lo, hi = alpha, min(1.0 - 1e-9, 10.0 * alpha)
    c_lo = C(lo)
    if c_lo < target:
        raise NumericalError(
            f"average coverage {c_lo:.4f} at the nominal level is already below {target:.4f}"
        )
    if abs(c_lo - target) <= coverage_tol:
        return lo
    c_hi = C(hi)
    if c_hi >= target:
        # Adjustment cannot reach the target; a flat curve means it has no effect.
        return lo if math.isclose(c_hi, c_lo, abs_tol=1e-12) else hi
    while hi - lo > alpha_tol:
        mid = 0.5 * (lo + hi)
        if C(mid) > target:
            lo = mid
        else:
            hi = mid
    # Report the side whose coverage stays at or above the target.
    if abs(C(lo) - target) > coverage_tol and abs(C(hi) - target) > coverage_tol:
        raise NumericalError(
            f"average coverage jumps across the target near level {lo:.4f} "
            f"({C(lo):.4f} vs {C(hi):.4f}); no level meets the {coverage_tol:g} tolerance"
        )
    return lo if abs(C(lo) - target) <= abs(C(hi) - target) else hi
