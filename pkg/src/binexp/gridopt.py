"""Deterministic grid search over conditional-distribution lattices.

The optimizers in this module enumerate conditional kernels whose rows live
on the simplex lattice ``{k/d}`` and minimize (or maximize) an arbitrary
objective subject to a fixed-marginal constraint.  Grid search is used
instead of gradient or convex solvers on purpose: the objectives that arise
downstream mix ``max(0, .)`` clamps, infinite values and non-convex feasible
sets, and an exhaustive lattice scan with local refinement is the only
approach with a clean correctness story.

Determinism contract: candidates are enumerated in lexicographic order of
the per-row lattice indices, ties are broken in favor of the first (i.e.
lexicographically smallest) candidate, and identical inputs always produce
bit-identical reports.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Iterator

import numpy as np


@lru_cache(maxsize=None)
def _integer_compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``.

    Rows are in lexicographic order; the array is cached and write-protected.
    """
    if parts == 1:
        out = np.array([[total]], dtype=np.int64)
    else:
        blocks = []
        for first in range(total + 1):
            rest = _integer_compositions(total - first, parts - 1)
            head = np.full((rest.shape[0], 1), first, dtype=np.int64)
            blocks.append(np.hstack([head, rest]))
        out = np.vstack(blocks)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SimplexGrid:
    """The lattice of distributions whose entries are multiples of ``1/denominator``."""

    denominator: int

    def __post_init__(self) -> None:
        if self.denominator < 1:
            raise ValueError("denominator must be >= 1")

    @property
    def spacing(self) -> float:
        return 1.0 / self.denominator

    def num_points(self, size: int) -> int:
        return comb(self.denominator + size - 1, size - 1)

    def points(self, size: int) -> np.ndarray:
        """All lattice distributions over ``size`` symbols, lexicographic order."""
        pts = _integer_compositions(self.denominator, size) / self.denominator
        pts.flags.writeable = False
        return pts


def default_tolerance(grid: SimplexGrid) -> float:
    """Default marginal-constraint tolerance: half the lattice spacing."""
    return 0.5 * grid.spacing


@dataclass(frozen=True)
class MarginalConstraint:
    """Require the induced marginal of the assembled joint to match ``target``.

    For a kernel ``K`` with conditioning weights ``given`` the induced
    marginal is ``sum_c given[c] * K[c, :]``; the constraint holds when every
    entry is within ``tolerance`` of the target.
    """

    target: np.ndarray
    tolerance: float

    def satisfied_by(self, given: np.ndarray, kernel: np.ndarray) -> bool:
        induced = (given[:, None] * kernel).sum(axis=0)
        return bool(np.abs(induced - self.target).max() <= self.tolerance)


def kernel_count(grid: SimplexGrid, n_given: int, n_out: int) -> int:
    return grid.num_points(n_out) ** n_given


def kernel_lattice(grid: SimplexGrid, n_given: int, n_out: int) -> np.ndarray:
    """All lattice kernels ``(N, n_given, n_out)``, rows enumerated lexicographically.

    The product order puts the first conditioning symbol's row index slowest,
    matching ``itertools.product`` over per-row lattice indices.
    """
    rows = grid.points(n_out)
    idx = np.indices((rows.shape[0],) * n_given).reshape(n_given, -1).T
    return rows[idx]


def kernel_batches(
    grid: SimplexGrid, n_given: int, n_out: int, max_bytes: int = 1 << 28
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield ``(offset, kernels)`` chunks of the full kernel lattice.

    Splitting is over the first row index so that concatenating the chunks
    reproduces :func:`kernel_lattice` exactly.
    """
    rows = grid.points(n_out)
    L = rows.shape[0]
    per_first = L ** (n_given - 1) * n_given * n_out * 8
    step = max(1, max_bytes // max(per_first, 1))
    if step >= L:
        yield 0, kernel_lattice(grid, n_given, n_out)
        return
    tail = kernel_lattice(grid, n_given - 1, n_out) if n_given > 1 else None
    block = L ** (n_given - 1)
    for start in range(0, L, step):
        stop = min(start + step, L)
        if tail is None:
            yield start, rows[start:stop, None, :]
            continue
        head = np.repeat(rows[start:stop, None, :], block, axis=0)
        body = np.tile(tail, (stop - start, 1, 1))
        yield start * block, np.concatenate([head[:, None, :, :].reshape(-1, 1, n_out), body], axis=1)


def enumerate_conditionals(
    grid: SimplexGrid, given: np.ndarray, constraint: MarginalConstraint
) -> Iterator[np.ndarray]:
    """Yield lattice kernels whose induced marginal satisfies the constraint.

    Kernels appear in deterministic lexicographic order; the stream may be
    empty.  Tolerances below half the lattice spacing are allowed but can
    empty a discretized set whose continuum counterpart is nonempty; the
    defaults keep the tolerance at half the spacing.
    """
    rows = grid.points(constraint.target.shape[0])
    n_given = given.shape[0]
    idx = np.zeros(n_given, dtype=np.int64)
    L = rows.shape[0]
    while True:
        kernel = rows[idx]
        if constraint.satisfied_by(given, kernel):
            yield kernel
        pos = n_given - 1
        while pos >= 0:
            idx[pos] += 1
            if idx[pos] < L:
                break
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return


@dataclass(frozen=True)
class OptimizerReport:
    """Outcome of a constrained lattice scan.

    ``value`` is the optimum, ``argument`` the joint (``given[c] * K[c, v]``)
    achieving it (``None`` when the feasible set is empty), ``feasible_count``
    the number of feasible lattice points inspected at the base denominator,
    and ``refinement_steps`` how many local grid-doubling rounds ran.
    """

    value: float
    argument: np.ndarray | None
    feasible_count: int
    refinement_steps: int


def _neighborhood_rows(base_row_counts: np.ndarray, new_denominator: int) -> np.ndarray:
    """Integer lattice rows at ``new_denominator`` within +/-2 of the doubled base row."""
    doubled = base_row_counts * 2
    k = doubled.shape[0]
    deltas = _integer_shift_vectors(k)
    cand = doubled[None, :] + deltas
    ok = (cand >= 0).all(axis=1) & (cand.sum(axis=1) == new_denominator)
    cand = cand[ok]
    order = np.lexsort(cand.T[::-1])
    return cand[order]


@lru_cache(maxsize=None)
def _integer_shift_vectors(k: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(-2, 3)] * k), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _scan(
    objective: Callable[[np.ndarray], float],
    feasibility: Callable[[np.ndarray], bool],
    given: np.ndarray,
    constraint: MarginalConstraint,
    kernels: Iterator[np.ndarray],
    sign: float,
) -> tuple[float, np.ndarray | None, np.ndarray | None, int]:
    best = np.inf
    arg = None
    arg_kernel = None
    count = 0
    for kernel in kernels:
        joint = given[:, None] * kernel
        if not feasibility(joint):
            continue
        count += 1
        value = sign * objective(joint)
        if value < best:
            best = value
            arg = joint
            arg_kernel = kernel
    return best, arg, arg_kernel, count


def _optimize(
    objective,
    feasibility,
    grid: SimplexGrid,
    given: np.ndarray,
    constraint: MarginalConstraint,
    refine_rounds: int,
    sign: float,
    empty_value: float,
) -> OptimizerReport:
    best, arg, arg_kernel, count = _scan(
        objective, feasibility, given, constraint,
        enumerate_conditionals(grid, given, constraint), sign,
    )
    if arg is None:
        return OptimizerReport(empty_value, None, count, 0)

    steps = 0
    d = grid.denominator
    kernel_counts = np.rint(arg_kernel * d).astype(np.int64)
    for _ in range(refine_rounds):
        d *= 2
        per_row = [_neighborhood_rows(row, d) for row in kernel_counts]
        idx_iter = np.indices(tuple(len(r) for r in per_row)).reshape(len(per_row), -1).T
        improved = False
        for choice in idx_iter:
            kernel = np.stack([per_row[r][choice[r]] for r in range(len(per_row))]) / d
            if not constraint.satisfied_by(given, kernel):
                continue
            joint = given[:, None] * kernel
            if not feasibility(joint):
                continue
            value = sign * objective(joint)
            if value < best:
                best = value
                arg = joint
                kernel_counts = np.rint(kernel * d).astype(np.int64)
                improved = True
        steps += 1
        if not improved:
            kernel_counts = kernel_counts * 2
    return OptimizerReport(sign * best, arg, count, steps)


def constrained_min(
    objective: Callable[[np.ndarray], float],
    feasibility: Callable[[np.ndarray], bool],
    grid: SimplexGrid,
    given: np.ndarray,
    constraint: MarginalConstraint,
    refine_rounds: int = 0,
) -> OptimizerReport:
    """Global lattice minimum of ``objective`` over the feasible kernels.

    The minimum over an empty feasible set is ``+inf``.  Optional local
    refinement re-grids at doubled denominators around the incumbent and can
    only tighten the reported value.
    """
    return _optimize(objective, feasibility, grid, given, constraint, refine_rounds, 1.0, np.inf)


def constrained_max(
    objective: Callable[[np.ndarray], float],
    feasibility: Callable[[np.ndarray], bool],
    grid: SimplexGrid,
    given: np.ndarray,
    constraint: MarginalConstraint,
    refine_rounds: int = 0,
) -> OptimizerReport:
    """Mirror of :func:`constrained_min`; the maximum over an empty set is ``-inf``."""
    report = _optimize(
        objective, feasibility, grid, given, constraint, refine_rounds, -1.0, np.inf
    )
    if report.argument is None:
        return OptimizerReport(-np.inf, None, report.feasible_count, report.refinement_steps)
    return report
