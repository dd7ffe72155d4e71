"""Probability primitives for finite-alphabet channel problems.

Distributions are plain float64 numpy arrays, validated once on construction
and then treated as immutable (the returned arrays are write-protected).
Conventions used throughout the package:

* a distribution over an alphabet of size k is a 1-D array of length k;
* a conditional kernel is a 2-D array whose row ``c`` is the distribution of
  the output symbol given conditioning symbol ``c``;
* a joint distribution over X x Y is an (|X|, |Y|) array ``q[x, y]``;
  joints over U x X x Y are (|U|, |X|, |Y|) arrays.

All information quantities are in nats.  The usual conventions apply:
``0 ln 0 = 0``, a divergence with an absolute-continuity failure is ``+inf``,
and a log-likelihood over an unsupported cell is ``-inf``.  Degenerate values
propagate instead of raising, because the optimization layers need to rank
such points, not crash on them.
"""
from __future__ import annotations

import numpy as np

SIMPLEX_TOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def dist(values, *, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and return a probability vector (entries >= 0, sum 1 within tol)."""
    p = np.array(values, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("a distribution must be a nonempty 1-D array")
    if np.any(p < 0):
        raise ValueError("distribution entries must be nonnegative")
    if abs(float(p.sum()) - 1.0) > tol:
        raise ValueError(f"distribution sums to {p.sum()!r}, not 1 within {tol}")
    return _freeze(p)


def cond(rows, *, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and return a conditional kernel (every row a distribution)."""
    m = np.array(rows, dtype=np.float64)
    if m.ndim != 2 or m.size < 1:
        raise ValueError("a conditional kernel must be a 2-D array")
    if np.any(m < 0):
        raise ValueError("kernel entries must be nonnegative")
    if np.any(np.abs(m.sum(axis=1) - 1.0) > tol):
        raise ValueError("every kernel row must sum to 1")
    return _freeze(m)


def joint(mass, *, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate and return a joint distribution (2-D or 3-D, total mass 1)."""
    q = np.array(mass, dtype=np.float64)
    if q.ndim not in (2, 3) or q.size < 1:
        raise ValueError("a joint distribution must be a 2-D or 3-D array")
    if np.any(q < 0):
        raise ValueError("joint entries must be nonnegative")
    if abs(float(q.sum()) - 1.0) > tol:
        raise ValueError(f"joint mass sums to {q.sum()!r}, not 1 within {tol}")
    return _freeze(q)


def uniform(k: int) -> np.ndarray:
    """Uniform distribution on ``k`` symbols."""
    return _freeze(np.full(k, 1.0 / k))


def binary_symmetric_channel(crossover: float) -> np.ndarray:
    """Transition matrix of a binary symmetric channel with the given flip rate."""
    if not 0.0 <= crossover <= 1.0:
        raise ValueError("crossover must lie in [0, 1]")
    p = float(crossover)
    return cond([[1.0 - p, p], [p, 1.0 - p]])


def mutual_information(q: np.ndarray) -> float:
    """Mutual information (nats) of a 2-D joint distribution.

    Cells with zero mass contribute nothing; the result is clamped at 0 so
    that floating-point round-off cannot produce a negative value.
    """
    qx = q.sum(axis=1)
    qy = q.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, q * (np.log(q) - np.log(qx[:, None] * qy[None, :])), 0.0)
    total = float(np.sum(terms))
    return total if total > 0.0 else 0.0


def conditional_mutual_information(q: np.ndarray) -> float:
    """I(X;Y|U) in nats for a 3-D joint ``q[u, x, y]``."""
    qu = q.sum(axis=(1, 2))
    qux = q.sum(axis=2)
    quy = q.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            q > 0,
            q
            * (
                np.log(q)
                + np.log(qu)[:, None, None]
                - np.log(qux)[:, :, None]
                - np.log(quy)[:, None, :]
            ),
            0.0,
        )
    total = float(np.sum(terms))
    return total if total > 0.0 else 0.0


def weighted_divergence(q_cond: np.ndarray, p_cond: np.ndarray, weight: np.ndarray) -> float:
    """Divergence between two kernels averaged over an input distribution.

    Returns ``sum_c weight[c] * KL(q_cond[c] || p_cond[c])`` in nats.  The
    value is ``+inf`` when some row of ``q_cond`` with positive weight puts
    mass where ``p_cond`` has none; rows with zero weight never contribute.
    """
    if q_cond.shape != p_cond.shape or q_cond.shape[0] != weight.shape[0]:
        raise ValueError("kernel shapes and weight length must agree")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q_cond > 0, q_cond * (np.log(q_cond) - np.log(p_cond)), 0.0)
        weighted = np.where(weight[:, None] > 0, weight[:, None] * terms, 0.0)
    total = float(np.sum(weighted))
    return total if total > 0.0 else 0.0


def log_likelihood_rate(q: np.ndarray, metric: np.ndarray) -> float:
    """Per-symbol log-likelihood of sequences whose joint type with the output is ``q``.

    Computes ``sum_{x,y} q[x, y] * ln metric[x, y]`` where ``metric`` is a
    transition matrix indexed the same way as ``q``.  The result is ``-inf``
    exactly when ``q`` puts mass on a zero of the metric.
    """
    if q.shape != metric.shape:
        raise ValueError("joint and metric shapes must agree")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, q * np.log(metric), 0.0)
    return float(np.sum(terms))


def empirical_joint(x_seq, y_seq, num_x: int | None = None, num_y: int | None = None) -> np.ndarray:
    """Empirical joint distribution of two equal-length symbol sequences.

    Every entry of the result is an integer multiple of ``1/n``.
    """
    xs = np.asarray(x_seq, dtype=np.int64)
    ys = np.asarray(y_seq, dtype=np.int64)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ValueError("sequences must be 1-D, nonempty, and of equal length")
    nx = int(xs.max()) + 1 if num_x is None else int(num_x)
    ny = int(ys.max()) + 1 if num_y is None else int(num_y)
    if xs.min() < 0 or ys.min() < 0 or xs.max() >= nx or ys.max() >= ny:
        raise ValueError("symbols out of range for the given alphabet sizes")
    counts = np.bincount(xs * ny + ys, minlength=nx * ny).reshape(nx, ny)
    return _freeze(counts.astype(np.float64) / xs.size)
