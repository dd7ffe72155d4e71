"""Exact error exponents of bin-index decoding for the flat random-coding ensemble.

Codewords are drawn independently and uniformly from a fixed type class, the
code is split into equal bins, and only the bin index is decoded.  This
module evaluates, by exhaustive search over conditional-type lattices, the
exponential decay rates of the ensemble-average error probability for

* the optimal bin decoder (posterior score of a whole bin),
* the maximum-likelihood codeword decoder followed by binning, and
* the classical random coding exponent of plain ML decoding,

together with the auxiliary quantities those formulas are built from: the
large-deviations rate of a bin's score, the typical score of a random bin,
and the minimum empirical rate a competing codeword or bin needs in order to
outscore the transmitted one.  A mismatched decoding metric is supported by
scoring likelihoods against a different transition matrix than the true
channel.

Discretization: conditional distributions range over the lattice ``{k/d}``.
Every candidate set that admits a natural "own" point in the continuum (the
reference joint's conditional decomposition, and the true channel's rows for
the outer search) explicitly includes that point, so exact zeros are not
lost to quantization.  Values are reported together with the denominator
used; convergence under grid refinement is the accuracy statement.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .gridopt import MarginalConstraint, SimplexGrid, default_tolerance, kernel_lattice
from .probability import cond, dist

__all__ = [
    "FlatEnsembleSpec",
    "ExponentResult",
    "default_denominator",
    "bin_type_exponent",
    "bin_type_exponent_cases",
    "bin_score_exponent",
    "typical_bin_score",
    "typical_true_bin_score",
    "min_competing_rate_bin",
    "min_competing_rate_ml",
    "min_competing_rate_mmi",
    "random_coding_exponent",
    "ml_bin_exponent",
    "optimal_bin_exponent",
]


def default_denominator(*alphabet_sizes: int) -> int:
    """Default lattice denominator: 48 for binary alphabets, 24 for ternary."""
    m = max(alphabet_sizes)
    if m <= 2:
        return 48
    if m == 3:
        return 24
    return 16


@dataclass(frozen=True, eq=False)
class FlatEnsembleSpec:
    """Code ensemble parameters: composition, channel, decoding metric and rates.

    ``r1`` is the rate of the whole code and ``r2`` the rate of one bin, both
    in nats per symbol (``0 <= r2 <= r1``).  ``metric`` is the transition
    matrix the decoder scores likelihoods with; it equals ``channel`` unless
    decoding is mismatched.
    """

    composition: np.ndarray
    channel: np.ndarray
    r1: float
    r2: float
    metric: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "composition", dist(self.composition))
        object.__setattr__(self, "channel", cond(self.channel))
        metric = self.channel if self.metric is None else cond(self.metric)
        object.__setattr__(self, "metric", metric)
        if self.channel.shape[0] != self.composition.shape[0]:
            raise ValueError("channel must have one row per input symbol")
        if metric.shape != self.channel.shape:
            raise ValueError("metric must have the same shape as the channel")
        if not 0.0 <= self.r2 <= self.r1:
            raise ValueError("rates must satisfy 0 <= r2 <= r1")

    @property
    def num_inputs(self) -> int:
        return self.channel.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.channel.shape[1]

    def matched(self) -> bool:
        return np.array_equal(self.metric, self.channel)


@dataclass(frozen=True)
class ExponentResult:
    """An exponent value plus the distributions achieving it on the grid."""

    exponent: float
    outer_kernel: np.ndarray
    inner_kernel: np.ndarray | None
    denominator: int
    diagnostics: dict = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# batched statistics (kept expression-for-expression in sync with the scalar
# functions in probability.py so that scalar re-evaluation reproduces them)
# ---------------------------------------------------------------------------

def _batch_mutual_information(J: np.ndarray) -> np.ndarray:
    qa = J.sum(axis=2)
    qb = J.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            J > 0, J * (np.log(J) - np.log(qa[:, :, None] * qb[:, None, :])), 0.0
        )
    vals = terms.sum(axis=(1, 2))
    return np.where(vals > 0.0, vals, 0.0)


def _batch_log_likelihood(J: np.ndarray, metric: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(J > 0, J * np.log(metric)[None, :, :], 0.0)
    return terms.sum(axis=(1, 2))


def _batch_weighted_divergence(K: np.ndarray, ref: np.ndarray, weight: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(K > 0, K * (np.log(K) - np.log(ref)[None, :, :]), 0.0)
        weighted = np.where(weight[None, :, None] > 0, weight[None, :, None] * terms, 0.0)
    vals = weighted.sum(axis=(1, 2))
    return np.where(vals > 0.0, vals, 0.0)


def _suffix_min(values: np.ndarray) -> np.ndarray:
    """``out[i] = min(values[i:])`` with a trailing ``+inf`` sentinel."""
    if values.size == 0:
        return np.array([np.inf])
    return np.append(np.minimum.accumulate(values[::-1])[::-1], np.inf)


class ConditionalTypeStats:
    """Per-output-marginal statistics of the feasible conditional-type lattice.

    For a fixed output marginal ``q_y``, enumerates every lattice kernel
    ``K(x|y)`` whose induced input marginal matches the code composition
    within tolerance, and precomputes for each the mutual information ``I``,
    the per-symbol log-likelihood ``f`` of the induced joint under the
    decoding metric, and the score reach ``g = f + max(0, r2 - I)`` (the
    largest score rate a bin built from that conditional type attains).
    Threshold queries over these arrays resolve via sorted prefix structures.
    """

    def __init__(self, q_y: np.ndarray, spec: FlatEnsembleSpec, grid: SimplexGrid,
                 tolerance: float | None = None):
        self.q_y = q_y
        self.grid = grid
        tol = default_tolerance(grid) if tolerance is None else tolerance
        self.tolerance = tol
        kernels = kernel_lattice(grid, q_y.shape[0], spec.num_inputs)
        J = np.swapaxes(kernels, 1, 2) * q_y[None, None, :]
        marginal = J.sum(axis=2)
        feasible = np.abs(marginal - spec.composition[None, :]).max(axis=1) <= tol
        self.kernel_index = np.flatnonzero(feasible)
        self.kernels = kernels[feasible]
        J = J[feasible]
        self.I = _batch_mutual_information(J)
        self.f = _batch_log_likelihood(J, spec.metric)
        self.g = self.f + np.maximum(spec.r2 - self.I, 0.0)
        self.v = np.maximum(self.I - spec.r2, 0.0)
        self.r2 = spec.r2

        order_g = np.argsort(self.g, kind="stable")
        self._g_sorted = self.g[order_g]
        self._sufmin_I_g = _suffix_min(self.I[order_g])
        self._sufmin_v_g = _suffix_min(self.v[order_g])
        order_f = np.argsort(self.f, kind="stable")
        self._f_sorted = self.f[order_f]
        self._sufmin_I_f = _suffix_min(self.I[order_f])

        # typical score = r2 + max{f - I : I <= r2}; evaluated as max over g,
        # which equals f + (r2 - I) on that set, so threshold queries at the
        # typical score hit the achieving kernel exactly.
        low = self.I <= spec.r2
        self.typical_score = float(np.max(self.g[low])) if np.any(low) else -np.inf

    @property
    def feasible_count(self) -> int:
        return int(self.kernels.shape[0])

    def min_rate_reaching(self, thresholds: np.ndarray) -> np.ndarray:
        """min I over kernels whose score reach ``g`` meets each threshold."""
        idx = np.searchsorted(self._g_sorted, thresholds, side="left")
        return self._sufmin_I_g[idx]

    def min_rate_outscoring(self, thresholds: np.ndarray) -> np.ndarray:
        """min I over kernels whose log-likelihood ``f`` meets each threshold."""
        idx = np.searchsorted(self._f_sorted, thresholds, side="left")
        return self._sufmin_I_f[idx]

    def score_exponent(self, thresholds: np.ndarray) -> np.ndarray:
        """min max(0, I - r2) over kernels whose score reach meets each threshold."""
        idx = np.searchsorted(self._g_sorted, thresholds, side="left")
        return self._sufmin_v_g[idx]

    def argmin_rate_reaching(self, threshold: float) -> tuple[float, int]:
        masked = np.where(self.g >= threshold, self.I, np.inf)
        j = int(np.argmin(masked))
        return float(masked[j]), j

    def argmin_rate_outscoring(self, threshold: float) -> tuple[float, int]:
        masked = np.where(self.f >= threshold, self.I, np.inf)
        j = int(np.argmin(masked))
        return float(masked[j]), j


def _stats_for(q_y: np.ndarray, spec: FlatEnsembleSpec, grid: SimplexGrid,
               cache: dict | None = None) -> ConditionalTypeStats:
    if cache is None:
        return ConditionalTypeStats(q_y, spec, grid)
    key = q_y.tobytes()
    hit = cache.get(key)
    if hit is None:
        hit = ConditionalTypeStats(q_y, spec, grid)
        cache[key] = hit
    return hit


# ---------------------------------------------------------------------------
# scalar building blocks
# ---------------------------------------------------------------------------

def bin_type_exponent(q: np.ndarray, s: float, r2: float, metric: np.ndarray) -> float:
    """Decay rate of the event that one bin's codewords of joint type ``q``
    collectively push the bin's likelihood score past ``e^{n s}``.

    Zero, finite, or ``+inf``; the score of a type is computed against the
    decoding ``metric``.
    """
    from .probability import log_likelihood_rate, mutual_information

    f = log_likelihood_rate(q, metric)
    i = mutual_information(q)
    if f >= s - max(r2 - i, 0.0):
        return max(i - r2, 0.0)
    return np.inf


def bin_type_exponent_cases(q: np.ndarray, s: float, r2: float, metric: np.ndarray) -> float:
    """Four-branch form of :func:`bin_type_exponent`; kept for cross-checking."""
    from .probability import log_likelihood_rate, mutual_information

    f = log_likelihood_rate(q, metric)
    i = mutual_information(q)
    if f >= s and r2 < i:
        return i - r2
    if f >= s and r2 >= i:
        return 0.0
    if f < s and f >= s - r2 + i:
        return 0.0
    return np.inf


def bin_score_exponent(s: float, q_y: np.ndarray, spec: FlatEnsembleSpec,
                       denominator: int | None = None) -> float:
    """Exponential decay rate of the probability that a freshly drawn bin's
    score reaches ``e^{n s}`` when the output sequence has type ``q_y``.

    Computed as the minimum of ``max(0, I - r2)`` over the feasible
    conditional-type lattice subject to score reach ``>= s``; ``+inf`` when
    no feasible type reaches ``s``.
    """
    grid = SimplexGrid(denominator or default_denominator(spec.num_inputs, spec.num_outputs))
    stats = ConditionalTypeStats(np.asarray(q_y, dtype=np.float64), spec, grid)
    return float(stats.score_exponent(np.array([s]))[0])


def typical_bin_score(q_y: np.ndarray, spec: FlatEnsembleSpec,
                      denominator: int | None = None) -> float:
    """Largest score rate a random bin attains with probability ~1.

    Equals ``r2`` plus the maximum of ``f - I`` over feasible conditional
    types with ``I <= r2``; the score exponent vanishes at and below this
    threshold and is positive above it.
    """
    grid = SimplexGrid(denominator or default_denominator(spec.num_inputs, spec.num_outputs))
    stats = ConditionalTypeStats(np.asarray(q_y, dtype=np.float64), spec, grid)
    return stats.typical_score


def typical_true_bin_score(q_x0y: np.ndarray, spec: FlatEnsembleSpec,
                           denominator: int | None = None) -> float:
    """Typical score of the transmitted codeword's bin: the bin's own typical
    score or the transmitted codeword's likelihood rate, whichever is larger."""
    from .probability import log_likelihood_rate

    q = np.asarray(q_x0y, dtype=np.float64)
    return max(
        typical_bin_score(q.sum(axis=0), spec, denominator),
        log_likelihood_rate(q, spec.metric),
    )


def _own_candidate(q: np.ndarray, spec: FlatEnsembleSpec) -> tuple[float, float, float]:
    from .probability import log_likelihood_rate, mutual_information

    i = mutual_information(q)
    f = log_likelihood_rate(q, spec.metric)
    return i, f, f + max(spec.r2 - i, 0.0)


def min_competing_rate_bin(q_x0y: np.ndarray, spec: FlatEnsembleSpec,
                           denominator: int | None = None) -> float:
    """Minimum empirical rate of a conditional type that lets a whole bin's
    score reach the transmitted codeword's likelihood rate.

    The candidate set is the feasible lattice plus the reference joint's own
    conditional decomposition (always feasible in the continuum).
    """
    q = np.asarray(q_x0y, dtype=np.float64)
    grid = SimplexGrid(denominator or default_denominator(spec.num_inputs, spec.num_outputs))
    stats = ConditionalTypeStats(q.sum(axis=0), spec, grid)
    i, f, _ = _own_candidate(q, spec)
    return min(float(stats.min_rate_reaching(np.array([f]))[0]), i)


def min_competing_rate_ml(q_x0y: np.ndarray, spec: FlatEnsembleSpec,
                          denominator: int | None = None) -> float:
    """Minimum empirical rate of a conditional type whose single-codeword
    likelihood outscores the transmitted codeword's."""
    q = np.asarray(q_x0y, dtype=np.float64)
    grid = SimplexGrid(denominator or default_denominator(spec.num_inputs, spec.num_outputs))
    stats = ConditionalTypeStats(q.sum(axis=0), spec, grid)
    i, f, _ = _own_candidate(q, spec)
    return min(float(stats.min_rate_outscoring(np.array([f]))[0]), i)


def min_competing_rate_mmi(q_x0y: np.ndarray) -> float:
    """Closed form of the competing rate under empirical-mutual-information
    scoring: the mutual information of the reference joint itself."""
    from .probability import mutual_information

    return mutual_information(np.asarray(q_x0y, dtype=np.float64))


# ---------------------------------------------------------------------------
# outer sweeps
# ---------------------------------------------------------------------------

def outer_candidates(spec: FlatEnsembleSpec, grid: SimplexGrid) -> np.ndarray:
    """Candidate output kernels ``K(y|x)``: the full lattice per row, plus the
    true channel's row appended last, so the divergence zero is always present."""
    rows = grid.points(spec.num_outputs)
    per_row = [np.vstack([rows, spec.channel[x][None, :]]) for x in range(spec.num_inputs)]
    counts = tuple(r.shape[0] for r in per_row)
    idx = np.indices(counts).reshape(spec.num_inputs, -1).T
    return np.stack([per_row[x][idx[:, x]] for x in range(spec.num_inputs)], axis=1)


def _outer_sweep(spec: FlatEnsembleSpec, grid: SimplexGrid):
    K = outer_candidates(spec, grid)
    J = spec.composition[None, :, None] * K
    D = _batch_weighted_divergence(K, spec.channel, spec.composition)
    I_q = _batch_mutual_information(J)
    f_q = _batch_log_likelihood(J, spec.metric)
    q_y = J.sum(axis=1)
    return K, J, D, I_q, f_q, q_y


def _group_indices(q_y: np.ndarray) -> dict[bytes, np.ndarray]:
    keys = [row.tobytes() for row in q_y]
    groups: dict[bytes, list[int]] = {}
    for j, key in enumerate(keys):
        groups.setdefault(key, []).append(j)
    return {k: np.asarray(v) for k, v in groups.items()}


def random_coding_exponent(spec: FlatEnsembleSpec, denominator: int | None = None) -> ExponentResult:
    """Classical random coding error exponent of ML decoding at rate ``r1``.

    Minimizes ``D(K || channel | composition) + max(0, I - r1)`` over output
    kernels ``K`` on the lattice (augmented with the channel itself), where
    ``I`` is the mutual information of the induced joint.
    """
    d = denominator or default_denominator(spec.num_inputs, spec.num_outputs)
    grid = SimplexGrid(d)
    K, J, D, I_q, _, _ = _outer_sweep(spec, grid)
    values = D + np.maximum(I_q - spec.r1, 0.0)
    w = int(np.argmin(values))
    return ExponentResult(
        float(values[w]), K[w], None, d,
        {"outer_count": K.shape[0], "mutual_information": float(I_q[w]),
         "divergence": float(D[w])},
    )


def _threshold_sweep(spec: FlatEnsembleSpec, denominator: int | None,
                     use_reach: bool, check_forms: bool) -> ExponentResult:
    d = denominator or default_denominator(spec.num_inputs, spec.num_outputs)
    grid = SimplexGrid(d)
    K, J, D, I_q, f_q, q_y = _outer_sweep(spec, grid)
    g_q = f_q + np.maximum(spec.r2 - I_q, 0.0)
    n = K.shape[0]
    values = np.empty(n)
    alt_values = np.empty(n) if check_forms else None
    cache: dict = {}
    rate_gap = spec.r1 - spec.r2

    for key, members in _group_indices(q_y).items():
        stats = _stats_for(q_y[members[0]], spec, grid, cache)
        ts = f_q[members]
        if use_reach:
            lattice_rate = stats.min_rate_reaching(ts)
        else:
            lattice_rate = stats.min_rate_outscoring(ts)
        competing = np.minimum(lattice_rate, I_q[members])
        values[members] = D[members] + np.maximum(competing - spec.r1, 0.0)

        if check_forms:
            s1 = np.maximum(stats.typical_score, ts)
            e1_lattice = stats.score_exponent(s1)
            own_v = np.where(g_q[members] >= s1, np.maximum(I_q[members] - spec.r2, 0.0), np.inf)
            e1 = np.minimum(e1_lattice, own_v)
            alt_values[members] = D[members] + np.maximum(e1 - rate_gap, 0.0)

    w = int(np.argmin(values))
    diagnostics: dict = {"outer_count": n}
    if check_forms:
        both_inf = np.isinf(values) & np.isinf(alt_values)
        gaps = np.where(both_inf, 0.0, np.abs(values - alt_values))
        form_gap = float(gaps.max())
        diagnostics["form_gap"] = form_gap
        if form_gap > 1e-9:
            raise RuntimeError(
                f"simplified and unsimplified exponent forms disagree by {form_gap}"
            )

    # achieving inner conditional type at the winning outer point
    stats = _stats_for(q_y[w], spec, grid, cache)
    t = float(f_q[w])
    if use_reach:
        lattice_min, j = stats.argmin_rate_reaching(t)
    else:
        lattice_min, j = stats.argmin_rate_outscoring(t)
    if lattice_min <= I_q[w] and np.isfinite(lattice_min):
        inner = stats.kernels[j]
        competing_rate = lattice_min
    else:
        q_w = J[w]
        marg = q_w.sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            inner = np.where(marg[:, None] > 0, q_w.T / marg[:, None],
                             1.0 / spec.num_inputs)
        competing_rate = float(I_q[w])
    diagnostics.update(
        {"competing_rate": competing_rate, "divergence": float(D[w]),
         "inner_feasible_count": stats.feasible_count}
    )
    return ExponentResult(float(values[w]), K[w], inner, d, diagnostics)


def evaluate_outer_point(spec: FlatEnsembleSpec, kernel: np.ndarray,
                         denominator: int | None = None,
                         use_reach: bool = True) -> float:
    """Exponent objective at a single output kernel (for replaying results).

    ``use_reach`` selects the bin competing rate; with ``False`` the
    single-codeword rate of the ML-based decoder is used instead.
    """
    d = denominator or default_denominator(spec.num_inputs, spec.num_outputs)
    grid = SimplexGrid(d)
    K = np.asarray(kernel, dtype=np.float64)
    J = spec.composition[:, None] * K
    D = _batch_weighted_divergence(K[None], spec.channel, spec.composition)[0]
    I_q = _batch_mutual_information(J[None])[0]
    f_q = _batch_log_likelihood(J[None], spec.metric)[0]
    stats = ConditionalTypeStats(J.sum(axis=0), spec, grid)
    if use_reach:
        lattice_rate = stats.min_rate_reaching(np.array([f_q]))[0]
    else:
        lattice_rate = stats.min_rate_outscoring(np.array([f_q]))[0]
    return float(D + max(min(lattice_rate, I_q) - spec.r1, 0.0))


def optimal_bin_exponent(spec: FlatEnsembleSpec, denominator: int | None = None,
                         check_forms: bool = True) -> ExponentResult:
    """Exact random-coding exponent of the optimal bin-index decoder.

    Outer minimization over output kernels of ``D + max(0, rate - r1)`` where
    ``rate`` is the minimum competing rate of a whole bin
    (:func:`min_competing_rate_bin`).  With ``check_forms`` the equivalent
    unsimplified form (via the bin-score exponent at the typical true-bin
    score) is evaluated on every grid point and required to agree.
    """
    return _threshold_sweep(spec, denominator, use_reach=True, check_forms=check_forms)


def ml_bin_exponent(spec: FlatEnsembleSpec, denominator: int | None = None) -> ExponentResult:
    """Random-coding exponent of the ML-codeword-then-bin decoder.

    Same outer minimization as :func:`optimal_bin_exponent` but with the
    single-codeword competing rate (:func:`min_competing_rate_ml`).  With a
    matched metric this is the random coding exponent in threshold form; with
    a mismatched metric it is the exponent the mismatched ML-based bin
    decoder achieves, and it is never below the mismatched optimal-decoder
    formula evaluated on the same grid.
    """
    return _threshold_sweep(spec, denominator, use_reach=False, check_forms=False)
