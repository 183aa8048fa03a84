"""Exact distribution of the plug-in statistic on its lattice.

Two routes to the same distribution: a transform method that multiplies the
discrete Fourier transforms of the single-trial weight contributions and
inverts with an inverse FFT, and a brute-force accumulation of joint
multinomial masses used as the reference oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Union

import numpy as np
import scipy.fft
from scipy.special import gammaln

from .errors import InputError, NoPredecessorError, NumericalError
from .model import Problem, SimplexPoint, YLattice, lattice_geometry, simplex_point

#: Magnitudes below this are treated as inverse-transform round-off and zeroed.
CLAMP_EPS = 1e-14
#: Maximum tolerated deviation of the total mass from 1 before erroring.
NORMALIZATION_TOL = 1e-9
#: Default cap on the joint outcome count for the brute-force route.
BRUTEFORCE_CAP = 10_000_000


@dataclass(frozen=True)
class LatticePmf:
    """Probability mass on the value lattice (index-aligned with the grid)."""

    lattice: YLattice
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.lattice.count,):
            raise InputError(
                f"pmf length {probs.shape} does not match lattice count {self.lattice.count}"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


def _checked(problem: Problem, p: SimplexPoint) -> SimplexPoint:
    if len(p.blocks) != problem.K or any(
        b.size != e.m for b, e in zip(p.blocks, problem.experiments)
    ):
        return simplex_point(problem, p.blocks)  # raises with a precise message
    return p


def _finalize(probs: np.ndarray, lattice: YLattice) -> LatticePmf:
    probs = np.where(np.abs(probs) < CLAMP_EPS, 0.0, probs)
    if probs.min(initial=0.0) < -NORMALIZATION_TOL:
        raise NumericalError(
            f"pmf entry {probs.min():.3e} is negative beyond round-off tolerance"
        )
    probs = np.maximum(probs, 0.0)
    total = probs.sum()
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NumericalError(
            f"pmf normalization drift {total - 1.0:.3e} exceeds {NORMALIZATION_TOL:g} "
            "(support too large or precision loss)"
        )
    return LatticePmf(lattice=lattice, probs=probs / total)


@lru_cache(maxsize=64)
def _phase_matrices(problem: Problem) -> tuple[int, tuple[np.ndarray, ...]]:
    """Per-block single-trial transform bases, shared across pmf calls."""
    geom = lattice_geometry(problem)
    n_fft = scipy.fft.next_fast_len(geom.lattice.count)
    t = np.arange(n_fft)
    mats = []
    for offs in geom.offsets:
        m = np.exp((-2j * np.pi / n_fft) * np.outer(np.asarray(offs), t))
        m.setflags(write=False)
        mats.append(m)
    return n_fft, tuple(mats)


def pmf_fft(problem: Problem, p: SimplexPoint) -> LatticePmf:
    """Exact lattice pmf via products of single-trial transforms.

    Each trial of experiment k contributes one of the integer grid offsets
    ``geom.offsets[k]`` with the block's probabilities, so the transform of
    the full statistic is the product over experiments of the per-trial
    transform raised to the trial count.  The inverse FFT recovers the pmf;
    padding to a fast length is safe because the support is finite.
    """
    p = _checked(problem, p)
    geom = lattice_geometry(problem)
    count = geom.lattice.count
    if count == 1:
        return LatticePmf(lattice=geom.lattice, probs=np.ones(1))
    _, mats = _phase_matrices(problem)
    transform = np.ones(mats[0].shape[1], dtype=complex)
    for block, mat, e in zip(p.blocks, mats, problem.experiments):
        transform *= (block @ mat) ** e.n
    probs = scipy.fft.ifft(transform).real[:count]
    return _finalize(probs, geom.lattice)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of given length summing to total."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    rows = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        head = np.full((rest.shape[0], 1), first, dtype=np.int64)
        rows.append(np.hstack([head, rest]))
    return np.vstack(rows)


def _block_outcomes(e_n: int, e_m: int, offs: tuple[int, ...]):
    comps = _compositions(e_n, e_m)
    log_coef = gammaln(e_n + 1) - gammaln(comps + 1).sum(axis=1)
    idx = comps @ np.asarray(offs, dtype=np.int64)
    return comps, log_coef, idx


def joint_outcome_count(problem: Problem) -> int:
    total = 1
    for e in problem.experiments:
        total *= math.comb(e.n + e.m - 1, e.m - 1)
    return total


def pmf_bruteforce(problem: Problem, p: SimplexPoint, cap: int = BRUTEFORCE_CAP) -> LatticePmf:
    """Reference pmf: accumulate every joint multinomial mass into its bin.

    Outcomes are enumerated block by block; the joint mass of an outcome is
    the product of its per-block multinomial masses, scattered onto the grid
    index it induces.  Intended as the oracle for the transform route.
    """
    p = _checked(problem, p)
    if joint_outcome_count(problem) > cap:
        raise InputError(
            f"joint outcome count {joint_outcome_count(problem)} exceeds cap {cap}"
        )
    geom = lattice_geometry(problem)
    count = geom.lattice.count
    dist = np.zeros(count)
    dist[0] = 1.0
    for block, offs, e in zip(p.blocks, geom.offsets, problem.experiments):
        comps, log_coef, idx = _block_outcomes(e.n, e.m, offs)
        # 0**0 == 1 handles zero-probability categories with zero counts.
        masses = np.exp(log_coef) * np.prod(block ** comps, axis=1)
        carrying = np.flatnonzero(dist)
        joint_idx = (carrying[:, None] + idx[None, :]).ravel()
        joint_mass = (dist[carrying, None] * masses[None, :]).ravel()
        dist = np.bincount(joint_idx, weights=joint_mass, minlength=count)
    return _finalize(dist, geom.lattice)


def cdf_index(lattice: YLattice, y: Union[Fraction, int, float]) -> int:
    """Largest grid index at or below y (with a step-relative slack).

    Returns -1 below the origin; values at or beyond the top clamp to the
    last index.  Computed in exact rational arithmetic so grid-boundary
    queries never fall on the wrong side.
    """
    rel = (Fraction(y) - lattice.origin) / lattice.step
    idx = math.floor(rel + Fraction(1, 10**12))
    return max(-1, min(idx, lattice.count - 1))


def cdf_from_index(pmf: LatticePmf, idx: int) -> float:
    if idx < 0:
        return 0.0
    if idx >= pmf.lattice.count - 1:
        return 1.0
    return float(pmf.probs[: idx + 1].sum())


def cdf_at(pmf: LatticePmf, y: Union[Fraction, int, float]) -> float:
    """P(statistic <= y), with a step-relative slack for grid-edge queries."""
    return cdf_from_index(pmf, cdf_index(pmf.lattice, y))


def predecessor(lattice: YLattice, y: Union[Fraction, int, float]) -> Fraction:
    """The grid value directly below y; errors at the origin.

    Interior grid points that no outcome attains carry zero mass, so for CDF
    purposes the previous grid point is interchangeable with the previous
    attainable value.
    """
    idx = lattice.index_of(y)
    if idx == 0:
        raise NoPredecessorError(f"value {y!r} is the lattice origin; no predecessor")
    return lattice.value(idx - 1)
