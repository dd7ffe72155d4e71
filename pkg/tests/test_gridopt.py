import itertools
from math import comb

import numpy as np
import pytest

from binexp.gridopt import (
    MarginalConstraint,
    SimplexGrid,
    constrained_max,
    constrained_min,
    default_tolerance,
    enumerate_conditionals,
    kernel_lattice,
)
from binexp.probability import mutual_information, uniform


def test_points_count_and_order():
    grid = SimplexGrid(4)
    pts = grid.points(3)
    assert pts.shape == (comb(4 + 2, 2), 3)
    assert np.allclose(pts.sum(axis=1), 1.0)
    # lexicographic in the integer representation
    ints = np.rint(pts * 4).astype(int)
    assert sorted(map(tuple, ints)) == list(map(tuple, ints))


def test_kernel_lattice_matches_product_order():
    grid = SimplexGrid(3)
    rows = grid.points(2)
    kernels = kernel_lattice(grid, 2, 2)
    expect = [np.stack([rows[i], rows[j]]) for i, j in
              itertools.product(range(len(rows)), repeat=2)]
    assert np.array_equal(kernels, np.stack(expect))


def test_enumerate_d1_permutation_kernels():
    # with a tolerance tight enough to force the marginal exactly, only the
    # two permutation kernels survive at denominator 1
    grid = SimplexGrid(1)
    constraint = MarginalConstraint(uniform(2), tolerance=0.25)
    found = list(enumerate_conditionals(grid, uniform(2), constraint))
    assert len(found) == 2
    anti = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(found[0], anti) and np.array_equal(found[1], np.eye(2))


def test_enumerate_full_count_with_loose_tolerance():
    grid = SimplexGrid(3)
    constraint = MarginalConstraint(uniform(2), tolerance=1.0)
    found = list(enumerate_conditionals(grid, uniform(2), constraint))
    assert len(found) == grid.num_points(2) ** 2


def test_enumerate_count_frozen_d4():
    # frozen from an independent brute-force enumeration over the 25 kernels
    grid = SimplexGrid(4)
    constraint = MarginalConstraint(uniform(2), tolerance=1.0 / 8.0)
    found = list(enumerate_conditionals(grid, uniform(2), constraint))
    assert len(found) == 13


def test_enumerate_matches_bruteforce():
    grid = SimplexGrid(5)
    given = np.array([0.25, 0.75])
    constraint = MarginalConstraint(np.array([0.4, 0.6]), default_tolerance(grid))
    rows = grid.points(2)
    expected = []
    for i, j in itertools.product(range(len(rows)), repeat=2):
        kernel = np.stack([rows[i], rows[j]])
        induced = (given[:, None] * kernel).sum(axis=0)
        if np.abs(induced - constraint.target).max() <= constraint.tolerance:
            expected.append(kernel)
    found = list(enumerate_conditionals(grid, given, constraint))
    assert len(found) == len(expected)
    assert all(np.array_equal(a, b) for a, b in zip(found, expected))


def test_constrained_min_constant_objective():
    grid = SimplexGrid(4)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))
    report = constrained_min(lambda q: 7.5, lambda q: True, grid, uniform(2), constraint)
    assert report.value == 7.5
    assert report.feasible_count >= 1


def test_constrained_min_empty_set_is_inf():
    grid = SimplexGrid(4)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))
    report = constrained_min(lambda q: 0.0, lambda q: False, grid, uniform(2), constraint)
    assert report.value == np.inf and report.argument is None


def test_constrained_min_mutual_information_zero_at_product():
    grid = SimplexGrid(8)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))
    report = constrained_min(mutual_information, lambda q: True, grid, uniform(2), constraint)
    assert report.value == 0.0
    # the argmin joint is the product of its marginals
    q = report.argument
    assert np.abs(q - np.outer(q.sum(axis=1), q.sum(axis=0))).max() < 1e-12


def test_constrained_max_mirrors():
    grid = SimplexGrid(4)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))
    report = constrained_max(lambda q: -2.0, lambda q: True, grid, uniform(2), constraint)
    assert report.value == -2.0
    empty = constrained_max(lambda q: 0.0, lambda q: False, grid, uniform(2), constraint)
    assert empty.value == -np.inf and empty.argument is None


def test_constrained_min_against_bruteforce_loop():
    grid = SimplexGrid(6)
    given = uniform(2)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))

    def objective(q):
        return float(((q - 0.25) ** 2).sum())

    report = constrained_min(objective, lambda q: q[0, 0] <= 0.4, grid, given, constraint)
    rows = grid.points(2)
    best, arg, count = np.inf, None, 0
    for i, j in itertools.product(range(len(rows)), repeat=2):
        kernel = np.stack([rows[i], rows[j]])
        if not constraint.satisfied_by(given, kernel):
            continue
        q = given[:, None] * kernel
        if not q[0, 0] <= 0.4:
            continue
        count += 1
        value = objective(q)
        if value < best:
            best, arg = value, q
    assert report.value == best
    assert report.feasible_count == count
    assert np.array_equal(report.argument, arg)


def test_refinement_only_tightens():
    grid = SimplexGrid(6)
    given = uniform(2)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))

    def objective(q):
        return float(((q - np.array([[0.31, 0.21], [0.17, 0.31]])) ** 2).sum())

    base = constrained_min(objective, lambda q: True, grid, given, constraint)
    refined = constrained_min(objective, lambda q: True, grid, given, constraint,
                              refine_rounds=3)
    assert refined.refinement_steps == 3
    assert refined.value <= base.value
    assert objective(refined.argument) == refined.value


def test_monotone_refinement_slack():
    # doubling the denominator may raise a constrained minimum only within C/d
    given = uniform(2)

    def objective(q):
        return mutual_information(q) + float(np.abs(q - 0.25).sum())

    values = {}
    for d in (6, 12, 24):
        grid = SimplexGrid(d)
        constraint = MarginalConstraint(uniform(2), default_tolerance(grid))
        values[d] = constrained_min(objective, lambda q: True, grid, given, constraint).value
    for d in (6, 12):
        assert values[2 * d] <= values[d] + 8.0 / d


def test_determinism_bit_identical():
    grid = SimplexGrid(5)
    constraint = MarginalConstraint(uniform(2), default_tolerance(grid))

    def objective(q):
        return mutual_information(q)

    a = constrained_min(objective, lambda q: True, grid, uniform(2), constraint, 1)
    b = constrained_min(objective, lambda q: True, grid, uniform(2), constraint, 1)
    assert a.value == b.value
    assert np.array_equal(a.argument, b.argument)
    assert a.feasible_count == b.feasible_count
