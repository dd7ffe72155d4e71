import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from binexp.probability import (
    binary_symmetric_channel,
    cond,
    conditional_mutual_information,
    dist,
    empirical_joint,
    joint,
    log_likelihood_rate,
    mutual_information,
    uniform,
    weighted_divergence,
)


def random_joint(rng, shape):
    q = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    return q


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_dist_validation():
    p = dist([0.25, 0.75])
    assert not p.flags.writeable
    with pytest.raises(ValueError):
        dist([0.5, 0.6])
    with pytest.raises(ValueError):
        dist([-0.1, 1.1])
    with pytest.raises(ValueError):
        cond([[0.5, 0.5], [0.7, 0.4]])
    with pytest.raises(ValueError):
        joint([[0.5, 0.5], [0.5, 0.5]])


def test_bsc_rows():
    w = binary_symmetric_channel(0.1)
    assert np.allclose(w, [[0.9, 0.1], [0.1, 0.9]])
    with pytest.raises(ValueError):
        binary_symmetric_channel(1.5)


# ---------------------------------------------------------------------------
# mutual information
# ---------------------------------------------------------------------------

def test_mi_product_is_zero():
    q = np.outer([0.3, 0.7], [0.6, 0.4])
    assert mutual_information(q) == 0.0


def test_mi_deterministic_pairing():
    q = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert mutual_information(q) == pytest.approx(math.log(2), abs=1e-12)


def test_mi_direct_double_sum_value():
    # frozen from an independent double-sum in plain floats
    q = np.array([[0.4, 0.1], [0.1, 0.4]])
    assert mutual_information(q) == pytest.approx(0.19274475702175753, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_mi_nonnegative_and_zero_iff_product(seed):
    rng = np.random.default_rng(seed)
    q = random_joint(rng, (3, 4))
    value = mutual_information(q)
    assert value >= 0.0
    product = np.outer(q.sum(axis=1), q.sum(axis=0))
    if value <= 1e-9:
        assert np.abs(q - product).max() < 1e-4


# ---------------------------------------------------------------------------
# conditional mutual information
# ---------------------------------------------------------------------------

def test_cmi_conditionally_independent():
    rng = np.random.default_rng(0)
    pu = rng.dirichlet(np.ones(3))
    q = np.einsum("u,ux,uy->uxy", pu, rng.dirichlet(np.ones(2), 3), rng.dirichlet(np.ones(2), 3))
    assert conditional_mutual_information(q) <= 1e-12


def test_cmi_degenerate_u_equals_mi():
    rng = np.random.default_rng(1)
    q = random_joint(rng, (2, 3))
    assert conditional_mutual_information(q[None, :, :]) == pytest.approx(
        mutual_information(q), abs=1e-12
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_cmi_chain_rule(seed):
    # I(X;Y|U) = I(XU;Y) - I(U;Y)
    rng = np.random.default_rng(seed)
    q = random_joint(rng, (2, 3, 2))
    merged = q.reshape(6, 2)
    chain = mutual_information(merged) - mutual_information(q.sum(axis=1))
    assert conditional_mutual_information(q) == pytest.approx(chain, abs=1e-9)


# ---------------------------------------------------------------------------
# weighted divergence
# ---------------------------------------------------------------------------

def test_wd_zero_for_equal_kernels():
    w = binary_symmetric_channel(0.3)
    assert weighted_divergence(w, w, uniform(2)) == 0.0


def test_wd_absolute_continuity_failure():
    q = np.array([[0.5, 0.5], [0.5, 0.5]])
    p = np.array([[1.0, 0.0], [0.5, 0.5]])
    assert weighted_divergence(q, p, uniform(2)) == np.inf
    # zero weight on the offending row keeps the value finite
    assert np.isfinite(weighted_divergence(q, p, np.array([0.0, 1.0])))


def test_wd_direct_sum_value():
    q = cond([[0.3, 0.7], [0.7, 0.3]])
    p = cond([[0.1, 0.9], [0.9, 0.1]])
    assert weighted_divergence(q, p, uniform(2)) == pytest.approx(
        0.15366358680379852, abs=1e-12
    )


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_wd_nonnegative(seed):
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(3), 2)
    p = rng.dirichlet(np.ones(3), 2)
    w = rng.dirichlet(np.ones(2))
    assert weighted_divergence(q, p, w) >= 0.0


# ---------------------------------------------------------------------------
# log-likelihood rate
# ---------------------------------------------------------------------------

def test_llr_uniform_metric_is_constant():
    metric = np.full((2, 2), 0.5)
    rng = np.random.default_rng(2)
    for _ in range(5):
        q = random_joint(rng, (2, 2))
        assert log_likelihood_rate(q, metric) == pytest.approx(math.log(0.5), abs=1e-12)


def test_llr_supported_on_ones():
    q = np.array([[0.5, 0.0], [0.0, 0.5]])
    assert log_likelihood_rate(q, np.eye(2)) == 0.0


def test_llr_bsc_diagonal():
    q = np.array([[0.5, 0.0], [0.0, 0.5]])
    w = binary_symmetric_channel(0.1)
    assert log_likelihood_rate(q, w) == pytest.approx(math.log(0.9), abs=1e-12)


def test_llr_unsupported_is_neg_inf():
    q = np.array([[0.0, 0.5], [0.5, 0.0]])
    assert log_likelihood_rate(q, np.eye(2)) == -np.inf


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_llr_linear_in_the_joint(seed, alpha):
    rng = np.random.default_rng(seed)
    q1 = random_joint(rng, (2, 2))
    q2 = random_joint(rng, (2, 2))
    metric = binary_symmetric_channel(0.2)
    mixed = log_likelihood_rate(alpha * q1 + (1 - alpha) * q2, metric)
    parts = alpha * log_likelihood_rate(q1, metric) + (1 - alpha) * log_likelihood_rate(q2, metric)
    assert mixed == pytest.approx(parts, abs=1e-9)


# ---------------------------------------------------------------------------
# empirical joints
# ---------------------------------------------------------------------------

def test_empirical_joint_uniform_cells():
    q = empirical_joint([0, 0, 1, 1], [0, 1, 0, 1])
    assert np.array_equal(q, np.full((2, 2), 0.25))


def test_empirical_joint_point_mass():
    q = empirical_joint([0, 0, 0], [0, 0, 0], num_x=2, num_y=2)
    assert q[0, 0] == 1.0 and q.sum() == 1.0


def test_empirical_joint_marginals_match_compositions():
    rng = np.random.default_rng(3)
    xs = rng.integers(0, 3, 60)
    ys = rng.integers(0, 2, 60)
    q = empirical_joint(xs, ys, 3, 2)
    assert np.array_equal(q.sum(axis=1), np.bincount(xs, minlength=3) / 60)
    assert np.array_equal(q.sum(axis=0), np.bincount(ys, minlength=2) / 60)


@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
@settings(max_examples=40, deadline=None)
def test_empirical_joint_on_lattice(seed, n):
    rng = np.random.default_rng(seed)
    xs = rng.integers(0, 2, n)
    ys = rng.integers(0, 3, n)
    q = empirical_joint(xs, ys, 2, 3)
    assert np.abs(q * n - np.rint(q * n)).max() < 1e-12


def test_empirical_joint_length_mismatch():
    with pytest.raises(ValueError):
        empirical_joint([0, 1], [0])
