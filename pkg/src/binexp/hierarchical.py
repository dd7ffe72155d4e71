"""Exact bin-index decoding exponent for the superposition (cloud-center) ensemble.

Here each bin is a cloud: a center sequence is drawn uniformly from the type
class of a cloud distribution, and the bin's codewords are drawn
conditionally i.i.d. from a conditional type class given the center.  The
optimal bin decoder's error exponent is evaluated by a three-level nested
lattice search: an outer scan over output kernels given the (center, input)
pair, a middle scan over center-given-output conditionals, and an inner scan
over input conditionals given (center, output).

No simplified form is attempted for this ensemble: the exponent is reported
straight from the nested definition, across a grid of bin rates if desired,
so any dependence on the bin rate can be observed rather than assumed away.

Cost grows with the product of the lattice sizes, so the default denominator
is smaller (16) than in the flat engine; reports record the denominator used.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .flat import (
    ExponentResult,
    _batch_log_likelihood,
    _batch_mutual_information,
    _suffix_min,
)
from .gridopt import SimplexGrid, default_tolerance, kernel_lattice
from .probability import cond, dist

__all__ = [
    "HierEnsembleSpec",
    "CloudTypeStats",
    "within_cloud_score_exponent",
    "bin_score_exponent",
    "typical_cloud_score",
    "typical_true_bin_score",
    "optimal_bin_exponent",
    "DEFAULT_HIER_DENOMINATOR",
]

DEFAULT_HIER_DENOMINATOR = 16


@dataclass(frozen=True, eq=False)
class HierEnsembleSpec:
    """Superposition ensemble: cloud distribution, conditional composition,
    channel, and the total/bin rates in nats per symbol."""

    cloud_dist: np.ndarray
    conditional_composition: np.ndarray
    channel: np.ndarray
    r1: float
    r2: float
    metric: np.ndarray | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cloud_dist", dist(self.cloud_dist))
        object.__setattr__(self, "conditional_composition", cond(self.conditional_composition))
        object.__setattr__(self, "channel", cond(self.channel))
        metric = self.channel if self.metric is None else cond(self.metric)
        object.__setattr__(self, "metric", metric)
        if self.conditional_composition.shape[0] != self.cloud_dist.shape[0]:
            raise ValueError("conditional composition needs one row per cloud symbol")
        if self.channel.shape[0] != self.conditional_composition.shape[1]:
            raise ValueError("channel must have one row per input symbol")
        if metric.shape != self.channel.shape:
            raise ValueError("metric must have the same shape as the channel")
        if not 0.0 <= self.r2 <= self.r1:
            raise ValueError("rates must satisfy 0 <= r2 <= r1")
        pux = self.cloud_dist[:, None] * self.conditional_composition
        pux.flags.writeable = False
        object.__setattr__(self, "joint_composition", pux)

    @property
    def num_clouds(self) -> int:
        return self.cloud_dist.shape[0]

    @property
    def num_inputs(self) -> int:
        return self.channel.shape[0]

    @property
    def num_outputs(self) -> int:
        return self.channel.shape[1]


def _batch_conditional_mutual_information(J: np.ndarray) -> np.ndarray:
    """I(X;Y|U) for a batch of (U, X, Y) joints, matching the scalar formula."""
    qu = J.sum(axis=(2, 3))
    qux = J.sum(axis=3)
    quy = J.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            J > 0,
            J
            * (
                np.log(J)
                + np.log(qu)[:, :, None, None]
                - np.log(qux)[:, :, :, None]
                - np.log(quy)[:, :, None, :]
            ),
            0.0,
        )
    vals = terms.sum(axis=(1, 2, 3))
    return np.where(vals > 0.0, vals, 0.0)


def _per_cloud_slices(q_uy: np.ndarray, spec: HierEnsembleSpec, grid: SimplexGrid):
    """Per-cloud-symbol statistics of the input-conditional row groups.

    The feasibility constraint and both objective terms decompose across the
    cloud symbol: for each ``u``, enumerate the lattice choices of the rows
    ``K(x|u, y)`` over ``y`` and record whether the (cloud, input) marginal
    slice matches, the slice's contribution to I(X;Y|U), and its contribution
    to the log-likelihood rate.  Full-kernel statistics are outer sums.
    """
    tol = default_tolerance(grid)
    nu, ny, nx = spec.num_clouds, spec.num_outputs, spec.num_inputs
    rows = kernel_lattice(grid, ny, nx)
    ln_metric = np.log(spec.metric)
    slices = []
    for u in range(nu):
        J_u = np.swapaxes(rows, 1, 2) * q_uy[u][None, None, :]
        feas = np.abs(J_u.sum(axis=2) - spec.joint_composition[u][None, :]).max(axis=1) <= tol
        qu = J_u.sum(axis=(1, 2))
        qux = J_u.sum(axis=2)
        quy = J_u.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(
                J_u > 0,
                J_u
                * (
                    np.log(J_u)
                    + np.log(qu)[:, None, None]
                    - np.log(qux)[:, :, None]
                    - np.log(quy)[:, None, :]
                ),
                0.0,
            )
            f_terms = np.where(J_u > 0, J_u * ln_metric[None, :, :], 0.0)
        slices.append((feas, terms.sum(axis=(1, 2)), f_terms.sum(axis=(1, 2))))
    return slices


class CloudTypeStats:
    """Feasible input-conditional lattice statistics for one cloud/output joint type.

    For a fixed joint type ``q_uy`` of (cloud center, output), covers every
    lattice kernel ``K(x|u, y)`` whose induced (cloud, input) marginal matches
    the ensemble's joint composition within tolerance.  Stores, per feasible
    kernel, the conditional mutual information ``I = I(X;Y|U)``, the
    log-likelihood rate ``f`` of the induced input/output joint under the
    decoding metric, and the score reach ``g = f + max(0, r2 - I)``.  The
    arrays are assembled from per-cloud-symbol slices, which the constraint
    and both objectives factor over.
    """

    def __init__(self, q_uy: np.ndarray, spec: HierEnsembleSpec, grid: SimplexGrid,
                 keep_arrays: bool = True):
        self.q_uy = q_uy
        feas_all = np.array([True])
        i_all = np.zeros(1)
        f_all = np.zeros(1)
        for feas_u, i_u, f_u in _per_cloud_slices(q_uy, spec, grid):
            feas_all = (feas_all[:, None] & feas_u[None, :]).ravel()
            i_all = (i_all[:, None] + i_u[None, :]).ravel()
            f_all = (f_all[:, None] + f_u[None, :]).ravel()
        self.kernel_index = np.flatnonzero(feas_all)
        i_all = i_all[feas_all]
        self.I = np.where(i_all > 0.0, i_all, 0.0)
        self.f = f_all[feas_all]
        self.g = self.f + np.maximum(spec.r2 - self.I, 0.0)
        self.v = np.maximum(self.I - spec.r2, 0.0)
        self.feasible_count = int(self.I.shape[0])

        order = np.argsort(self.g, kind="stable")
        g_sorted = self.g[order]
        sufmin_v = _suffix_min(self.v[order])[:-1]
        # the query s -> min{v : g >= s} is a nondecreasing staircase; keep one
        # (g_end, value) pair per run of equal suffix minima
        if g_sorted.size:
            last_of_run = np.empty(g_sorted.size, dtype=bool)
            last_of_run[-1] = True
            last_of_run[:-1] = sufmin_v[1:] > sufmin_v[:-1]
            self._g_end = g_sorted[last_of_run]
            self._v_run = np.append(sufmin_v[last_of_run], np.inf)
        else:
            self._g_end = g_sorted
            self._v_run = np.array([np.inf])
        low = self.I <= spec.r2
        self.typical_score = float(np.max(self.g[low])) if np.any(low) else -np.inf
        if not keep_arrays:
            del self.I, self.f, self.g, self.v, self.kernel_index

    def score_exponent(self, thresholds: np.ndarray) -> np.ndarray:
        """min max(0, I - r2) over feasible kernels with score reach >= threshold."""
        idx = np.searchsorted(self._g_end, thresholds, side="left")
        return self._v_run[idx]


def _stats_cache_get(cache: dict, q_uy: np.ndarray, spec: HierEnsembleSpec,
                     grid: SimplexGrid) -> CloudTypeStats:
    key = q_uy.tobytes()
    hit = cache.get(key)
    if hit is None:
        hit = CloudTypeStats(q_uy, spec, grid, keep_arrays=False)
        cache[key] = hit
    return hit


def within_cloud_score_exponent(s: float, q_uy: np.ndarray, spec: HierEnsembleSpec,
                                denominator: int | None = None) -> float:
    """Decay rate of the probability that one cloud (with center/output joint
    type ``q_uy``) accumulates likelihood score ``e^{n s}``; ``+inf`` when no
    feasible conditional type reaches ``s``."""
    grid = SimplexGrid(denominator or DEFAULT_HIER_DENOMINATOR)
    stats = CloudTypeStats(np.asarray(q_uy, float), spec, grid)
    return float(stats.score_exponent(np.array([s]))[0])


def _cloud_children(q_y: np.ndarray, spec: HierEnsembleSpec, grid: SimplexGrid):
    """Feasible center-given-output kernels with their induced joints and I(U;Y)."""
    tol = default_tolerance(grid)
    K = kernel_lattice(grid, spec.num_outputs, spec.num_clouds)
    q_uy = np.swapaxes(K, 1, 2) * q_y[None, None, :]
    feasible = np.abs(q_uy.sum(axis=2) - spec.cloud_dist[None, :]).max(axis=1) <= tol
    return K[feasible], q_uy[feasible], _batch_mutual_information(q_uy[feasible])


def bin_score_exponent(s: float, q_y: np.ndarray, spec: HierEnsembleSpec,
                       denominator: int | None = None) -> float:
    """Decay rate of the probability that a freshly drawn cloud reaches score
    ``e^{n s}``, accounting for the randomness of its center: minimum over
    center conditionals of ``I(U;Y)`` plus the within-cloud score exponent."""
    grid = SimplexGrid(denominator or DEFAULT_HIER_DENOMINATOR)
    _, q_uys, i_uy = _cloud_children(np.asarray(q_y, float), spec, grid)
    best = np.inf
    cache: dict = {}
    for m in range(q_uys.shape[0]):
        stats = _stats_cache_get(cache, q_uys[m], spec, grid)
        value = float(i_uy[m]) + float(stats.score_exponent(np.array([s]))[0])
        if value < best:
            best = value
    return best


def typical_cloud_score(q_u0y: np.ndarray, spec: HierEnsembleSpec,
                        denominator: int | None = None) -> float:
    """Largest score rate a cloud with the given center/output joint type
    attains with probability ~1 (the within-cloud score exponent vanishes at
    and below this threshold)."""
    grid = SimplexGrid(denominator or DEFAULT_HIER_DENOMINATOR)
    stats = CloudTypeStats(np.asarray(q_u0y, float), spec, grid)
    return stats.typical_score


def typical_true_bin_score(q_u0x0y: np.ndarray, spec: HierEnsembleSpec,
                           denominator: int | None = None) -> float:
    """Typical score of the transmitted cloud: its own typical score or the
    transmitted codeword's likelihood rate, whichever is larger."""
    from .probability import log_likelihood_rate

    q = np.asarray(q_u0x0y, float)
    return max(
        typical_cloud_score(q.sum(axis=1), spec, denominator),
        log_likelihood_rate(q.sum(axis=0), spec.metric),
    )


def _outer_candidates(spec: HierEnsembleSpec, grid: SimplexGrid) -> np.ndarray:
    """Output kernels ``K(y|u,x)``: lattice rows plus the channel row of each
    input symbol appended last (the physical channel does not see the cloud)."""
    rows = grid.points(spec.num_outputs)
    per_row = []
    for u in range(spec.num_clouds):
        for x in range(spec.num_inputs):
            per_row.append(np.vstack([rows, spec.channel[x][None, :]]))
    counts = tuple(r.shape[0] for r in per_row)
    idx = np.indices(counts).reshape(len(per_row), -1).T
    stacked = np.stack([per_row[r][idx[:, r]] for r in range(len(per_row))], axis=1)
    return stacked.reshape(-1, spec.num_clouds, spec.num_inputs, spec.num_outputs)


def _batch_divergence_hier(K: np.ndarray, spec: HierEnsembleSpec) -> np.ndarray:
    ref = np.log(spec.channel)[None, None, :, :]
    w = spec.joint_composition[None, :, :, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(K > 0, K * (np.log(K) - ref), 0.0)
        weighted = np.where(w > 0, w * terms, 0.0)
    vals = weighted.sum(axis=(1, 2, 3))
    return np.where(vals > 0.0, vals, 0.0)


def _group_rows(arr: np.ndarray) -> dict[bytes, np.ndarray]:
    groups: dict[bytes, list[int]] = {}
    flat = arr.reshape(arr.shape[0], -1)
    for j in range(arr.shape[0]):
        groups.setdefault(flat[j].tobytes(), []).append(j)
    return {k: np.asarray(v) for k, v in groups.items()}


def _evaluate_candidates(spec: HierEnsembleSpec, K: np.ndarray, grid: SimplexGrid,
                         cache: dict):
    """Exponent objective at each outer candidate kernel ``K(y|u,x)``.

    The middle/inner candidate sets always include the outer joint's own
    conditional decomposition (its center conditional and its input
    conditional), so continuum-feasible points survive discretization.
    """
    J = spec.joint_composition[None, :, :, None] * K
    D = _batch_divergence_hier(K, spec)
    q_xy = J.sum(axis=1)
    f_x0y = _batch_log_likelihood(q_xy, spec.metric)
    q_u0y = J.sum(axis=2)
    q_y = q_xy.sum(axis=1)
    i_uy_own = _batch_mutual_information(q_u0y)
    i_cond_own = _batch_conditional_mutual_information(J)
    g_own = f_x0y + np.maximum(spec.r2 - i_cond_own, 0.0)
    v_own = np.maximum(i_cond_own - spec.r2, 0.0)

    n = K.shape[0]
    s1 = np.empty(n)
    own_child = np.empty(n)

    for members in _group_rows(q_u0y).values():
        stats = _stats_cache_get(cache, q_u0y[members[0]], spec, grid)
        s1_m = np.maximum(stats.typical_score, f_x0y[members])
        s1[members] = s1_m
        e1_lattice = stats.score_exponent(s1_m)
        e1_own = np.where(g_own[members] >= s1_m, v_own[members], np.inf)
        own_child[members] = i_uy_own[members] + np.minimum(e1_lattice, e1_own)

    e2 = np.full(n, np.inf)
    for members in _group_rows(q_y).values():
        _, q_uys, i_uy = _cloud_children(q_y[members[0]], spec, grid)
        s1_m = s1[members]
        best = np.full(members.shape[0], np.inf)
        for m in range(q_uys.shape[0]):
            stats = _stats_cache_get(cache, q_uys[m], spec, grid)
            best = np.minimum(best, float(i_uy[m]) + stats.score_exponent(s1_m))
        e2[members] = best
    e2 = np.minimum(e2, own_child)

    values = D + np.maximum(e2 - (spec.r1 - spec.r2), 0.0)
    return values, D, e2, s1


def evaluate_outer_point(spec: HierEnsembleSpec, kernel: np.ndarray,
                         denominator: int | None = None) -> float:
    """Exponent objective at a single outer kernel (for replaying results)."""
    d = denominator or DEFAULT_HIER_DENOMINATOR
    grid = SimplexGrid(d)
    K = np.asarray(kernel, float)[None, :, :, :]
    values, _, _, _ = _evaluate_candidates(spec, K, grid, {})
    return float(values[0])


def optimal_bin_exponent(spec: HierEnsembleSpec,
                         denominator: int | None = None) -> ExponentResult:
    """Exact random-coding exponent of optimal bin-index decoding for the
    superposition ensemble.

    Outer minimization over output kernels given (cloud, input) of the
    weighted divergence to the channel plus the clamped shortfall of the
    cloud score exponent, evaluated at the transmitted cloud's typical score.
    """
    d = denominator or DEFAULT_HIER_DENOMINATOR
    grid = SimplexGrid(d)
    K = _outer_candidates(spec, grid)
    cache: dict = {}
    values, D, e2, s1 = _evaluate_candidates(spec, K, grid, cache)
    w = int(np.argmin(values))
    return ExponentResult(
        float(values[w]), K[w], None, d,
        {
            "outer_count": K.shape[0],
            "divergence": float(D[w]),
            "cloud_score_exponent": float(e2[w]),
            "typical_true_bin_score": float(s1[w]),
            "stats_cache_size": len(cache),
        },
    )
