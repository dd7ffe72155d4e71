import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binexp.flat import (
    ConditionalTypeStats,
    FlatEnsembleSpec,
    bin_score_exponent,
    bin_type_exponent,
    bin_type_exponent_cases,
    evaluate_outer_point,
    min_competing_rate_bin,
    min_competing_rate_ml,
    min_competing_rate_mmi,
    ml_bin_exponent,
    optimal_bin_exponent,
    random_coding_exponent,
    typical_bin_score,
    typical_true_bin_score,
)
from binexp.gridopt import SimplexGrid
from binexp import oracles
from binexp.probability import (
    binary_symmetric_channel,
    log_likelihood_rate,
    mutual_information,
    uniform,
)

BSC10 = binary_symmetric_channel(0.1)
BSC20 = binary_symmetric_channel(0.2)
BSC25 = binary_symmetric_channel(0.25)
PX = uniform(2)


def spec_for(channel, r1, r2, metric=None):
    return FlatEnsembleSpec(PX, channel, r1=r1, r2=r2, metric=metric)


# ---------------------------------------------------------------------------
# bin type exponent (per-type large-deviations rate)
# ---------------------------------------------------------------------------

def test_type_exponent_zero_case():
    q = PX[:, None] * BSC20
    f = log_likelihood_rate(q, BSC20)
    i = mutual_information(q)
    r2 = i + 0.1  # low-rate bin: the clamp removes the rate term
    assert bin_type_exponent(q, f - 0.01, r2, BSC20) == 0.0


def test_type_exponent_infinite_case():
    q = PX[:, None] * BSC20
    f = log_likelihood_rate(q, BSC20)
    i = mutual_information(q)
    s = f + max(0.05 - i, 0.0) + 0.01
    assert bin_type_exponent(q, s, 0.05, BSC20) == np.inf


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_type_exponent_two_vs_four_case(seed):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(4)).reshape(2, 2)
    s = rng.uniform(-3.0, 0.2)
    r2 = rng.uniform(0.0, 0.7)
    a = bin_type_exponent(q, s, r2, BSC20)
    b = bin_type_exponent_cases(q, s, r2, BSC20)
    assert a == b or (np.isinf(a) and np.isinf(b))


# ---------------------------------------------------------------------------
# bin score exponent and the typical bin score
# ---------------------------------------------------------------------------

def test_score_exponent_zero_below_independent_score():
    spec = spec_for(BSC20, 0.3, 0.05)
    qy = uniform(2)
    f_indep = log_likelihood_rate(np.outer(PX, qy), BSC20)
    assert bin_score_exponent(f_indep + spec.r2 - 0.01, qy, spec, 48) == 0.0


def test_score_exponent_infinite_above_reach():
    spec = spec_for(BSC20, 0.3, 0.05)
    qy = uniform(2)
    grid = SimplexGrid(48)
    stats = ConditionalTypeStats(qy, spec, grid)
    assert bin_score_exponent(stats.g.max() + 1e-6, qy, spec, 48) == np.inf


def test_score_exponent_frozen_midway_value():
    # frozen from the exhaustive lattice scan at denominator 48
    spec = spec_for(BSC20, 0.3, 0.05)
    qy = uniform(2)
    s_mid = -0.46125245754515054
    assert bin_score_exponent(s_mid, qy, spec, 48) == 0.19258597169364067
    assert bin_score_exponent(s_mid, qy, spec, 48) == oracles.brute_bin_score_exponent(
        s_mid, qy, spec, 48
    )


def test_typical_score_r2_zero_is_independent_score():
    spec = spec_for(BSC20, 0.3, 0.0)
    qy = uniform(2)
    assert typical_bin_score(qy, spec, 48) == pytest.approx(
        log_likelihood_rate(np.outer(PX, qy), BSC20), abs=1e-12
    )


def test_typical_score_unconstrained_when_r2_large():
    # frozen from the exhaustive scan: with r2 = ln|X| the rate constraint is
    # inactive and the typical score is r2 plus the unconstrained max of f - I
    spec = spec_for(BSC20, 1.0, math.log(2))
    value = typical_bin_score(uniform(2), spec, 24)
    assert value == pytest.approx(-0.00021480313011079666, abs=1e-12)


def test_score_exponent_threshold_property():
    spec = spec_for(BSC20, 0.3, 0.07)
    for qy0 in (0.5, 0.375):
        qy = np.array([qy0, 1 - qy0])
        s0 = typical_bin_score(qy, spec, 48)
        delta = 2.0 / 48
        assert bin_score_exponent(s0 - delta, qy, spec, 48) == 0.0
        assert bin_score_exponent(s0 + delta, qy, spec, 48) > 0.0


def test_typical_true_bin_score_max_form():
    spec = spec_for(BSC10, 0.3, 0.05)
    q = PX[:, None] * BSC10
    s0 = typical_bin_score(q.sum(axis=0), spec, 48)
    f = log_likelihood_rate(q, BSC10)
    assert typical_true_bin_score(q, spec, 48) == max(s0, f)


# ---------------------------------------------------------------------------
# competing rates
# ---------------------------------------------------------------------------

def test_competing_rate_mmi_closed_form():
    q = PX[:, None] * BSC10
    assert min_competing_rate_mmi(q) == mutual_information(q)


def test_competing_rate_ordering():
    spec = spec_for(BSC10, 0.3, 0.05)
    rng = np.random.default_rng(7)
    for _ in range(5):
        kernel = rng.dirichlet(np.ones(2), 2)
        q = PX[:, None] * kernel
        i0 = min_competing_rate_bin(q, spec, 48)
        i0p = min_competing_rate_ml(q, spec, 48)
        assert i0 <= i0p <= min_competing_rate_mmi(q) + 1e-12


def test_competing_rates_frozen_channel_joint():
    # frozen from the exhaustive lattice scans at denominator 48
    spec = spec_for(BSC10, 0.3, 0.05)
    q = PX[:, None] * BSC10
    assert min_competing_rate_bin(q, spec, 48) == 0.36806420716849697
    assert min_competing_rate_ml(q, spec, 48) == 0.36806420716849697
    assert min_competing_rate_mmi(q) == 0.36806420716849697


# ---------------------------------------------------------------------------
# random coding exponent
# ---------------------------------------------------------------------------

def test_random_coding_zero_at_capacity():
    cap = mutual_information(PX[:, None] * BSC10)
    spec = spec_for(BSC10, cap + 0.01, 0.0)
    assert random_coding_exponent(spec, 48).exponent == 0.0


def test_random_coding_identity_channel():
    spec = FlatEnsembleSpec(PX, np.eye(2), r1=0.2, r2=0.0)
    for d in (48, 96):
        assert random_coding_exponent(spec, d).exponent == pytest.approx(
            math.log(2) - 0.2, abs=1e-12
        )


def test_random_coding_frozen_bsc_value():
    # frozen from the exhaustive enumerator at denominator 96
    spec = spec_for(BSC10, 0.1, 0.0)
    value = random_coding_exponent(spec, 96).exponent
    assert value == 0.12314355131420976
    assert value > 0.0


def test_random_coding_monotone_in_rate():
    values = [random_coding_exponent(spec_for(BSC25, r1, 0.0), 32).exponent
              for r1 in (0.02, 0.05, 0.08, 0.11, 0.2)]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------------------
# optimal bin exponent
# ---------------------------------------------------------------------------

def test_optimal_bin_r2_zero_equals_ml_path():
    spec = spec_for(BSC10, 0.15, 0.0)
    assert optimal_bin_exponent(spec, 32).exponent == ml_bin_exponent(spec, 32).exponent


def test_optimal_bin_zero_at_capacity():
    cap = mutual_information(PX[:, None] * BSC10)
    spec = spec_for(BSC10, cap + 1.0 / 32, 0.1)
    assert optimal_bin_exponent(spec, 32).exponent == 0.0


def test_optimal_bin_forms_agree():
    for r2 in (0.0, 0.04, 0.1):
        spec = spec_for(BSC25, 0.1, r2)
        res = optimal_bin_exponent(spec, 32, check_forms=True)
        assert res.diagnostics["form_gap"] <= 1e-12


def test_optimal_bin_rate_equalities_on_grid():
    # bin-rate independence and agreement with the random coding exponent,
    # within twice the measured refinement slack
    for channel in (BSC10, BSC25):
        for r1 in (0.05, 0.1):
            er48 = random_coding_exponent(spec_for(channel, r1, 0.0), 48).exponent
            er24 = random_coding_exponent(spec_for(channel, r1, 0.0), 24).exponent
            slack = max(abs(er48 - er24), 1e-9)
            values = [optimal_bin_exponent(spec_for(channel, r1, r2), 48).exponent
                      for r2 in (0.0, r1 / 2, r1)]
            assert max(values) - min(values) <= 2 * slack
            assert all(abs(v - er48) <= 2 * slack for v in values)


def test_results_replay_to_their_exponent():
    spec = spec_for(BSC25, 0.1, 0.04)
    res = optimal_bin_exponent(spec, 24)
    assert evaluate_outer_point(spec, res.outer_kernel, 24) == pytest.approx(
        res.exponent, abs=1e-6
    )
    res_ml = ml_bin_exponent(spec, 24)
    assert evaluate_outer_point(spec, res_ml.outer_kernel, 24, use_reach=False) == pytest.approx(
        res_ml.exponent, abs=1e-6
    )
    # the reported inner kernel is feasible and attains the competing rate
    if res.inner_kernel is not None:
        qy = (spec.composition[:, None] * res.outer_kernel).sum(axis=0)
        induced = res.inner_kernel.T * qy[None, :]
        assert np.abs(induced.sum(axis=1) - spec.composition).max() <= 0.5 / 24 + 1e-12
        assert mutual_information(induced) == pytest.approx(
            res.diagnostics["competing_rate"], abs=1e-9
        )


def test_engine_matches_bruteforce_bitwise_small_grid():
    spec = spec_for(BSC10, 0.15, 0.05)
    for d in (4, 6):
        er = random_coding_exponent(spec, d)
        ero, argo = oracles.brute_random_coding_exponent(spec, d)
        assert er.exponent == ero and np.array_equal(er.outer_kernel, argo)
        es = optimal_bin_exponent(spec, d)
        eso, argso = oracles.brute_bin_decoding_exponent(spec, d, reach=True)
        assert es.exponent == eso and np.array_equal(es.outer_kernel, argso)


# ---------------------------------------------------------------------------
# mismatched decoding
# ---------------------------------------------------------------------------

def test_mismatch_reduces_to_matched():
    matched = spec_for(BSC10, 0.12, 0.05)
    explicit = spec_for(BSC10, 0.12, 0.05, metric=BSC10)
    assert optimal_bin_exponent(matched, 24).exponent == optimal_bin_exponent(
        explicit, 24).exponent
    assert ml_bin_exponent(matched, 24).exponent == ml_bin_exponent(explicit, 24).exponent


def test_mismatch_ml_never_worse_on_grid():
    for r2 in (0.0, 0.05, 0.1):
        spec = spec_for(BSC10, 0.1, r2, metric=BSC20)
        assert ml_bin_exponent(spec, 32).exponent >= optimal_bin_exponent(
            spec, 32).exponent


def test_uniform_metric_degenerate():
    # a constant metric scores every type equally: every feasible conditional
    # reaches any attained threshold, both exponents collapse to min divergence
    metric = np.full((2, 2), 0.5)
    spec = spec_for(BSC10, 0.1, 0.05, metric=metric)
    estar = optimal_bin_exponent(spec, 24).exponent
    eml = ml_bin_exponent(spec, 24).exponent
    assert estar == 0.0 and eml == 0.0
