"""Monte Carlo and exact evaluation of bin-index decoding error probabilities.

Codebooks are drawn uniformly from fixed-composition type classes, split into
equal bins, sent over a memoryless channel, and decoded by three bin-index
decoders:

* ``optimal``  - argmax over bins of the bin's total likelihood (log-sum-exp
  of per-codeword log-metric scores; the common 1/bin-size factor is dropped),
* ``ml``       - argmax over codewords of the log-metric score, then the bin
  containing the winner,
* ``mmi``      - argmax over codewords of the empirical mutual information
  with the output sequence, then the winner's bin.

All decoder arithmetic is in the log domain; a probability-domain oracle for
tiny blocklengths lives in the tests.  Ties break toward the lowest index.

Two ensemble estimators are provided.  The direct path materializes a fresh
codebook per trial.  The typed path (binary alphabets) samples the sufficient
statistics instead: given the output sequence, the joint type of a random
fixed-composition codeword with it is hypergeometric, so per-bin score
profiles are multinomial count vectors over the score lattice.  This is
exact in distribution and reaches code sizes far beyond what can be stored.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log

import numpy as np
from scipy.special import gammaln

from .flat import _batch_mutual_information

__all__ = [
    "CodebookSpec",
    "Codebook",
    "HierCodebookSpec",
    "HierCodebook",
    "TrialOutcome",
    "PeEstimate",
    "SimulationResult",
    "FitResult",
    "BudgetExceededError",
    "sample_codebook",
    "sample_hier_codebook",
    "transmit",
    "codeword_scores",
    "optimal_bin_scores",
    "mmi_codeword_scores",
    "decode_optimal_bin",
    "decode_ml_bin",
    "decode_mmi_bin",
    "exact_pe_given_codebook",
    "estimate_pe_mc",
    "estimate_pe_mc_hier",
    "estimate_pe_exact_ensemble",
    "fit_exponent",
    "wilson_interval",
    "round_composition",
]

DECODERS = ("optimal", "ml", "mmi")


class BudgetExceededError(ValueError):
    """Raised when an exact enumeration would exceed the configured budget."""


def _rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def round_composition(p: np.ndarray, n: int) -> np.ndarray:
    """Nearest length-``n`` type to ``p`` by largest-remainder rounding."""
    scaled = np.asarray(p, float) * n
    counts = np.floor(scaled).astype(np.int64)
    short = n - counts.sum()
    if short:
        order = np.argsort(scaled - counts, kind="stable")[::-1]
        counts[order[:short]] += 1
    return counts / n


@dataclass(frozen=True, eq=False)
class CodebookSpec:
    """Blocklength, code size, bin size and input composition of a codebook."""

    n: int
    num_codewords: int
    bin_size: int
    composition: np.ndarray

    def __post_init__(self) -> None:
        comp = np.asarray(self.composition, dtype=np.float64)
        object.__setattr__(self, "composition", comp)
        if self.n < 1 or self.num_codewords < 1 or self.bin_size < 1:
            raise ValueError("n, code size and bin size must be positive")
        if self.num_codewords % self.bin_size:
            raise ValueError("bin size must divide the number of codewords")
        counts = comp * self.n
        if np.abs(counts - np.rint(counts)).max() > 1e-9:
            raise ValueError("composition times n must be integer valued")
        object.__setattr__(self, "symbol_counts", np.rint(counts).astype(np.int64))

    @property
    def num_bins(self) -> int:
        return self.num_codewords // self.bin_size

    @property
    def num_inputs(self) -> int:
        return self.composition.shape[0]

    def realized_rates(self) -> tuple[float, float]:
        """(total rate, bin rate) in nats per symbol actually realized."""
        return log(self.num_codewords) / self.n, log(self.bin_size) / self.n


@dataclass(frozen=True, eq=False)
class Codebook:
    """Fixed-composition codewords with bins given by index blocks."""

    codewords: np.ndarray
    bin_size: int
    num_inputs: int

    @property
    def num_codewords(self) -> int:
        return self.codewords.shape[0]

    @property
    def num_bins(self) -> int:
        return self.num_codewords // self.bin_size

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    def bin_of(self, index: int) -> int:
        return index // self.bin_size


def sample_codebook(spec: CodebookSpec, seed) -> Codebook:
    """Draw every codeword independently and uniformly from the type class.

    Each codeword is a seeded uniform random permutation of the fixed
    composition multiset; identical seeds reproduce the codebook bit for bit.
    """
    rng = _rng_of(seed)
    base = np.repeat(np.arange(spec.num_inputs, dtype=np.int64), spec.symbol_counts)
    tiled = np.tile(base, (spec.num_codewords, 1))
    return Codebook(rng.permuted(tiled, axis=1), spec.bin_size, spec.num_inputs)


@dataclass(frozen=True, eq=False)
class HierCodebookSpec:
    """Superposition codebook: cloud centers plus conditional codewords."""

    n: int
    num_clouds: int
    bin_size: int
    cloud_composition: np.ndarray
    conditional_composition: np.ndarray

    def __post_init__(self) -> None:
        pu = np.asarray(self.cloud_composition, dtype=np.float64)
        pxu = np.asarray(self.conditional_composition, dtype=np.float64)
        object.__setattr__(self, "cloud_composition", pu)
        object.__setattr__(self, "conditional_composition", pxu)
        if self.n < 1 or self.num_clouds < 1 or self.bin_size < 1:
            raise ValueError("n, cloud count and bin size must be positive")
        u_counts = pu * self.n
        if np.abs(u_counts - np.rint(u_counts)).max() > 1e-9:
            raise ValueError("cloud composition times n must be integer valued")
        u_counts = np.rint(u_counts).astype(np.int64)
        object.__setattr__(self, "cloud_counts", u_counts)
        x_counts = pxu * u_counts[:, None]
        if np.abs(x_counts - np.rint(x_counts)).max() > 1e-9:
            raise ValueError(
                "conditional composition times each cloud symbol count must be integer"
            )
        object.__setattr__(self, "conditional_counts", np.rint(x_counts).astype(np.int64))

    @property
    def num_codewords(self) -> int:
        return self.num_clouds * self.bin_size

    @property
    def num_inputs(self) -> int:
        return self.conditional_composition.shape[1]

    def realized_rates(self) -> tuple[float, float]:
        """(total rate, bin rate) in nats per symbol actually realized."""
        return log(self.num_codewords) / self.n, log(self.bin_size) / self.n


@dataclass(frozen=True, eq=False)
class HierCodebook:
    """Cloud centers and the conditional codebook they induce."""

    centers: np.ndarray
    codebook: Codebook


def sample_hier_codebook(spec: HierCodebookSpec, seed) -> HierCodebook:
    """Draw cloud centers from their type class, then each cloud's codewords
    conditionally: within the positions of every cloud symbol, an independent
    uniform permutation of the conditional composition multiset."""
    rng = _rng_of(seed)
    base_u = np.repeat(np.arange(spec.cloud_composition.shape[0], dtype=np.int64),
                       spec.cloud_counts)
    centers = rng.permuted(np.tile(base_u, (spec.num_clouds, 1)), axis=1)
    codewords = np.empty((spec.num_codewords, spec.n), dtype=np.int64)
    for w in range(spec.num_clouds):
        rows = slice(w * spec.bin_size, (w + 1) * spec.bin_size)
        for a in range(spec.cloud_composition.shape[0]):
            pos = np.flatnonzero(centers[w] == a)
            if pos.size == 0:
                continue
            base_x = np.repeat(np.arange(spec.num_inputs, dtype=np.int64),
                               spec.conditional_counts[a])
            block = rng.permuted(np.tile(base_x, (spec.bin_size, 1)), axis=1)
            codewords[rows, pos[None, :]] = block
    return HierCodebook(centers, Codebook(codewords, spec.bin_size, spec.num_inputs))


def transmit(x: np.ndarray, channel: np.ndarray, seed) -> np.ndarray:
    """Send ``x`` through the memoryless channel, one symbol at a time."""
    rng = _rng_of(seed)
    cum = np.cumsum(channel, axis=1)
    cum[:, -1] = 1.0
    u = rng.random(x.shape[0])
    return (u[:, None] >= cum[x]).sum(axis=1)


# ---------------------------------------------------------------------------
# decoders
# ---------------------------------------------------------------------------

def codeword_scores(cb: Codebook, y: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Per-codeword log-metric scores; ``-inf`` where the metric forbids y."""
    with np.errstate(divide="ignore"):
        lm = np.log(metric)
    return lm[cb.codewords, y[None, :]].sum(axis=1)


def optimal_bin_scores(cb: Codebook, y: np.ndarray, metric: np.ndarray) -> np.ndarray:
    """Per-bin log-sum-exp of codeword scores (common 1/bin-size dropped)."""
    scores = codeword_scores(cb, y, metric).reshape(cb.num_bins, cb.bin_size)
    peak = scores.max(axis=1)
    out = np.full(cb.num_bins, -np.inf)
    finite = np.isfinite(peak)
    if np.any(finite):
        shifted = np.exp(scores[finite] - peak[finite][:, None])
        out[finite] = peak[finite] + np.log(shifted.sum(axis=1))
    return out


def mmi_codeword_scores(cb: Codebook, y: np.ndarray, num_outputs: int) -> np.ndarray:
    """Empirical mutual information between each codeword and ``y``."""
    nx, ny = cb.num_inputs, num_outputs
    pair = cb.codewords * ny + y[None, :]
    offsets = np.arange(cb.num_codewords, dtype=np.int64)[:, None] * (nx * ny)
    counts = np.bincount((pair + offsets).ravel(), minlength=cb.num_codewords * nx * ny)
    joints = counts.reshape(cb.num_codewords, nx, ny) / cb.n
    return _batch_mutual_information(joints)


def decode_optimal_bin(cb: Codebook, y: np.ndarray, metric: np.ndarray,
                       with_flag: bool = False):
    """Optimal bin decision; ties go to the lowest bin.  With ``with_flag``,
    also report whether every bin score was ``-inf`` (decision defaults to 0)."""
    scores = optimal_bin_scores(cb, y, metric)
    w = int(np.argmax(scores))
    if with_flag:
        return w, bool(np.all(np.isneginf(scores)))
    return w


def decode_ml_bin(cb: Codebook, y: np.ndarray, metric: np.ndarray) -> int:
    """Bin of the maximum-likelihood codeword; ties go to the lowest index."""
    return int(np.argmax(codeword_scores(cb, y, metric))) // cb.bin_size


def decode_mmi_bin(cb: Codebook, y: np.ndarray, num_outputs: int) -> int:
    """Bin of the empirical-MI-best codeword; ties go to the lowest index."""
    return int(np.argmax(mmi_codeword_scores(cb, y, num_outputs))) // cb.bin_size


@dataclass(frozen=True, eq=False)
class TrialOutcome:
    """Audit record of one direct-simulation trial."""

    index: int
    true_bin: int
    decoded: dict
    bin_scores: dict


# ---------------------------------------------------------------------------
# exact error probability for a fixed codebook
# ---------------------------------------------------------------------------

def exact_pe_given_codebook(cb: Codebook, channel: np.ndarray,
                            metric: np.ndarray | None = None,
                            decoders: tuple[str, ...] = ("optimal", "ml"),
                            budget: int = 1 << 22,
                            chunk: int = 4096) -> dict[str, float]:
    """Exact bin-error probability of each decoder, enumerating every output
    sequence (uniform prior on the transmitted index).

    Requires ``num_outputs ** n * num_codewords <= budget``.
    """
    metric = channel if metric is None else metric
    ny = channel.shape[1]
    n = cb.n
    total = ny ** n
    if total * cb.num_codewords > budget:
        raise BudgetExceededError(
            f"exact enumeration needs {total * cb.num_codewords} cells, budget {budget}"
        )
    bins = np.arange(cb.num_codewords, dtype=np.int64) // cb.bin_size
    powers = ny ** np.arange(n - 1, -1, -1, dtype=np.int64)
    pe = {name: 0.0 for name in decoders}
    with np.errstate(divide="ignore"):
        lm = np.log(metric)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        Y = (idx[:, None] // powers[None, :]) % ny
        probs = np.ones((idx.size, cb.num_codewords))
        scores = np.zeros((idx.size, cb.num_codewords))
        for t in range(n):
            probs *= channel[cb.codewords[:, t]][:, Y[:, t]].T
            scores += lm[cb.codewords[:, t]][:, Y[:, t]].T
        for name in decoders:
            if name == "ml":
                decision = np.argmax(scores, axis=1) // cb.bin_size
            elif name == "optimal":
                per_bin = scores.reshape(idx.size, cb.num_bins, cb.bin_size)
                peak = per_bin.max(axis=2)
                with np.errstate(invalid="ignore"):
                    shifted = np.where(np.isfinite(peak)[:, :, None],
                                       np.exp(per_bin - peak[:, :, None]), 0.0)
                bin_scores = np.where(np.isfinite(peak),
                                      peak + np.log(shifted.sum(axis=2)), -np.inf)
                decision = np.argmax(bin_scores, axis=1)
            elif name == "mmi":
                mi = np.empty((idx.size, cb.num_codewords))
                for k in range(idx.size):
                    mi[k] = mmi_codeword_scores(cb, Y[k], ny)
                decision = np.argmax(mi, axis=1) // cb.bin_size
            else:
                raise ValueError(f"unknown decoder {name!r}")
            err = decision[:, None] != bins[None, :]
            pe[name] += float((probs * err).sum())
    return {name: value / cb.num_codewords for name, value in pe.items()}


# ---------------------------------------------------------------------------
# Monte Carlo ensemble estimators
# ---------------------------------------------------------------------------

_Z95 = 1.959963984540054


def wilson_interval(errors: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    p = errors / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class PeEstimate:
    """Error-probability estimate with a 95% Wilson confidence interval."""

    errors: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, errors: int, trials: int) -> "PeEstimate":
        low, high = wilson_interval(errors, trials)
        return cls(errors, trials, errors / trials if trials else 0.0, low, high)


@dataclass(frozen=True)
class SimulationResult:
    """Per-decoder estimates plus joint error statistics for one configuration."""

    spec: CodebookSpec
    estimates: dict
    joint_errors: dict
    trials: int
    method: str
    realized_rate_total: float
    realized_rate_bin: float
    flags: dict = field(default_factory=dict)


def _direct_trial(spec: CodebookSpec, channel, metric, decoders, rng, num_outputs):
    cb = sample_codebook(spec, rng)
    i = int(rng.integers(spec.num_codewords))
    y = transmit(cb.codewords[i], channel, rng)
    true_bin = i // spec.bin_size
    decided = {}
    for name in decoders:
        if name == "optimal":
            decided[name] = decode_optimal_bin(cb, y, metric)
        elif name == "ml":
            decided[name] = decode_ml_bin(cb, y, metric)
        elif name == "mmi":
            decided[name] = decode_mmi_bin(cb, y, num_outputs)
        else:
            raise ValueError(f"unknown decoder {name!r}")
    return i, true_bin, decided, cb, y


def _score_lattice(n: int, n0: int, m0: int, ln_metric: np.ndarray):
    """Achievable joint types of (codeword, output) for binary alphabets.

    Returns the agreement counts ``k = #(x=0, y=0)``, their hypergeometric
    log-probabilities, the per-type log-metric scores, and the per-type
    empirical mutual informations.
    """
    k_lo = max(0, n0 - (n - m0))
    k_hi = min(n0, m0)
    k = np.arange(k_lo, k_hi + 1, dtype=np.int64)
    logpmf = (
        gammaln(m0 + 1) - gammaln(k + 1) - gammaln(m0 - k + 1)
        + gammaln(n - m0 + 1) - gammaln(n0 - k + 1) - gammaln(n - m0 - n0 + k + 1)
        - (gammaln(n + 1) - gammaln(n0 + 1) - gammaln(n - n0 + 1))
    )
    counts = np.stack(
        [np.stack([k, n0 - k], axis=1), np.stack([m0 - k, n - m0 - n0 + k], axis=1)],
        axis=1,
    )
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * ln_metric[None, :, :], 0.0)
    scores = terms.sum(axis=(1, 2))
    mi = _batch_mutual_information(counts / n)
    pmf = np.exp(logpmf - logpmf.max())
    pmf /= pmf.sum()
    return k, pmf, scores, mi


def _subset_min(rng, population: int, draws: int) -> int:
    """Minimum of a uniform random ``draws``-subset of ``range(population)``.

    Inverse-CDF sampling through ``P(min >= m) = C(population-m, draws) /
    C(population, draws)`` evaluated with log-gamma, so the population may be
    astronomically large.
    """
    if draws <= 0:
        raise ValueError("draws must be positive")
    if draws >= population:
        return 0
    log_u = log(rng.random())
    base = gammaln(population + 1) - gammaln(population - draws + 1)

    def log_sf(m: int) -> float:
        return float(gammaln(population - m + 1) - gammaln(population - m - draws + 1) - base)

    lo, hi = 0, population - draws  # log_sf(lo) = 0 >= log_u always
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if log_sf(mid) >= log_u:
            lo = mid
        else:
            hi = mid - 1
    return lo


def _argmax_side_error(values, k0_cell: int, inside: np.ndarray, outside: np.ndarray,
                       num_codewords: int, bin_size: int, rng) -> bool:
    """Error indicator for winner-takes-lowest-index decoding from type counts.

    ``values`` scores each type; the transmitted codeword occupies cell
    ``k0_cell``, the rest of its bin has counts ``inside`` and all other bins
    pooled have counts ``outside``.  On a tie at the top, the winning index is
    resolved by sampling achiever positions: within-bin achievers live in the
    transmitted codeword's index block, outside achievers anywhere else, so
    the lowest index is *not* uniform over achievers.
    """
    true_at_top_possible = np.zeros_like(inside, dtype=bool)
    true_at_top_possible[k0_cell] = True
    top_in = values[(inside > 0) | true_at_top_possible].max()
    top_out = values[outside > 0].max() if np.any(outside > 0) else -np.inf
    if top_out < top_in:
        return False
    if top_out > top_in:
        return True
    at_top = values == top_in
    true_at_top = bool(values[k0_cell] == top_in)
    c_in_other = int(inside[at_top].sum())
    c_out = int(outside[at_top].sum())
    if c_out == 0:
        return False

    num_bins = num_codewords // bin_size
    w = int(rng.integers(num_bins))
    offset_true = int(rng.integers(bin_size))
    min_in = offset_true if true_at_top else bin_size
    if c_in_other > 0:
        m = _subset_min(rng, bin_size - 1, c_in_other)
        if m >= offset_true:
            m += 1
        min_in = min(min_in, m)
    min_in += w * bin_size

    m_out = _subset_min(rng, num_codewords - bin_size, c_out)
    if m_out >= w * bin_size:
        m_out += bin_size
    return m_out < min_in


def _typed_trial(spec: CodebookSpec, channel, metric, decoders, rng,
                 max_cells: int) -> dict[str, bool]:
    n = spec.n
    n0 = int(spec.symbol_counts[0])
    with np.errstate(divide="ignore"):
        ln_metric = np.log(metric)
    # joint type of the transmitted codeword with the channel output
    joint_counts = np.stack(
        [rng.multinomial(int(c), channel[a]) for a, c in enumerate(spec.symbol_counts)]
    )
    m0 = int(joint_counts[:, 0].sum())
    k, pmf, scores, mi = _score_lattice(n, n0, m0, ln_metric)
    k0_cell = int(joint_counts[0, 0]) - int(k[0])

    m2 = spec.bin_size
    inside = rng.multinomial(m2 - 1, pmf)
    outside = rng.multinomial(spec.num_codewords - m2, pmf)

    errors = {}
    for name in decoders:
        if name == "ml":
            errors[name] = _argmax_side_error(
                scores, k0_cell, inside, outside, spec.num_codewords, m2, rng)
        elif name == "mmi":
            errors[name] = _argmax_side_error(
                mi, k0_cell, inside, outside, spec.num_codewords, m2, rng)
        elif name == "optimal":
            wrong_bins = spec.num_bins - 1
            if wrong_bins == 0:
                errors[name] = False
                continue
            if wrong_bins * pmf.size > max_cells:
                raise BudgetExceededError(
                    "optimal-decoder typed path needs "
                    f"{wrong_bins * pmf.size} cells per trial, cap {max_cells}"
                )
            true_counts = inside.copy()
            true_counts[k0_cell] += 1
            other = rng.multinomial(m2, pmf, size=wrong_bins)
            peak = scores.max()
            if not np.isfinite(peak):
                b0 = -np.inf
                b = np.full(wrong_bins, -np.inf)
            else:
                # one shared expression for every bin so that identical count
                # vectors produce bit-identical scores (exact ties)
                weights = np.exp(scores - peak)
                with np.errstate(divide="ignore"):
                    b0 = float(peak + np.log(true_counts @ weights))
                    b = peak + np.log(other @ weights)
            top = b.max()
            if top > b0:
                errors[name] = True
            elif top < b0:
                errors[name] = False
            else:
                ties = int((b == top).sum())
                errors[name] = bool(rng.random() * (ties + 1) < ties)
        else:
            raise ValueError(f"unknown decoder {name!r}")
    return errors


def estimate_pe_mc(spec: CodebookSpec, channel: np.ndarray,
                   metric: np.ndarray | None = None,
                   decoders: tuple[str, ...] = ("optimal", "ml"),
                   trials: int = 1000, seed: int = 0,
                   method: str = "auto", max_cells: int = 1 << 24,
                   trial_callback=None) -> SimulationResult:
    """Ensemble-average error probability: a fresh codebook, message and noise
    realization per trial (matching the expectation over codebooks), with
    per-trial seeds derived by splitting the seed stream by trial index.

    ``method='direct'`` materializes codebooks; ``method='typed'`` samples
    sufficient statistics (binary alphabets only) and is exact in
    distribution; ``'auto'`` picks ``typed`` for large binary instances.
    """
    metric = channel if metric is None else metric
    num_outputs = channel.shape[1]
    binary = spec.num_inputs == 2 and num_outputs == 2
    if method == "auto":
        method = "typed" if binary and spec.num_codewords * spec.n > 50_000 else "direct"
    if method == "typed" and not binary:
        raise ValueError("the typed estimator requires binary alphabets")

    children = np.random.SeedSequence(seed).spawn(trials)
    err_counts = {name: 0 for name in decoders}
    joint: dict[tuple[str, str], int] = {
        (a, b): 0 for i, a in enumerate(decoders) for b in decoders[i + 1:]
    }
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        if method == "direct":
            i, true_bin, decided, cb, y = _direct_trial(
                spec, channel, metric, decoders, rng, num_outputs
            )
            errs = {name: decided[name] != true_bin for name in decoders}
            if trial_callback is not None:
                bin_scores = {}
                for name in decoders:
                    if name == "optimal":
                        bin_scores[name] = optimal_bin_scores(cb, y, metric)
                    elif name == "ml":
                        bin_scores[name] = codeword_scores(cb, y, metric).reshape(
                            cb.num_bins, cb.bin_size).max(axis=1)
                    else:
                        bin_scores[name] = mmi_codeword_scores(cb, y, num_outputs).reshape(
                            cb.num_bins, cb.bin_size).max(axis=1)
                trial_callback(TrialOutcome(i, true_bin, decided, bin_scores), errs)
        else:
            errs = _typed_trial(spec, channel, metric, decoders, rng, max_cells)
            if trial_callback is not None:
                trial_callback(None, errs)
        for name in decoders:
            err_counts[name] += errs[name]
        for (a, b) in joint:
            joint[(a, b)] += errs[a] and errs[b]

    r1, r2 = spec.realized_rates()
    return SimulationResult(
        spec,
        {name: PeEstimate.from_counts(err_counts[name], trials) for name in decoders},
        {f"{a}&{b}": c for (a, b), c in joint.items()},
        trials, method, r1, r2,
    )


def estimate_pe_mc_hier(spec: HierCodebookSpec, channel: np.ndarray,
                        metric: np.ndarray | None = None,
                        decoders: tuple[str, ...] = ("optimal", "ml"),
                        trials: int = 1000, seed: int = 0) -> SimulationResult:
    """Ensemble-average error probability for the superposition ensemble:
    fresh cloud centers and conditional codewords every trial (direct only)."""
    metric = channel if metric is None else metric
    num_outputs = channel.shape[1]
    children = np.random.SeedSequence(seed).spawn(trials)
    err_counts = {name: 0 for name in decoders}
    joint: dict[tuple[str, str], int] = {
        (a, b): 0 for i, a in enumerate(decoders) for b in decoders[i + 1:]
    }
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        hcb = sample_hier_codebook(spec, rng)
        cb = hcb.codebook
        i = int(rng.integers(spec.num_codewords))
        y = transmit(cb.codewords[i], channel, rng)
        true_bin = i // spec.bin_size
        errs = {}
        for name in decoders:
            if name == "optimal":
                errs[name] = decode_optimal_bin(cb, y, metric) != true_bin
            elif name == "ml":
                errs[name] = decode_ml_bin(cb, y, metric) != true_bin
            elif name == "mmi":
                errs[name] = decode_mmi_bin(cb, y, num_outputs) != true_bin
            else:
                raise ValueError(f"unknown decoder {name!r}")
        for name in decoders:
            err_counts[name] += errs[name]
        for (a, b) in joint:
            joint[(a, b)] += errs[a] and errs[b]
    r1, r2 = spec.realized_rates()
    return SimulationResult(
        spec,
        {name: PeEstimate.from_counts(err_counts[name], trials) for name in decoders},
        {f"{a}&{b}": c for (a, b), c in joint.items()},
        trials, "direct", r1, r2,
    )


def estimate_pe_exact_ensemble(spec: CodebookSpec, channel: np.ndarray,
                               metric: np.ndarray | None = None,
                               decoders: tuple[str, ...] = ("optimal", "ml"),
                               codebooks: int = 100, seed: int = 0,
                               budget: int = 1 << 22) -> dict[str, float]:
    """Average of the exact per-codebook error probability over sampled
    codebooks: Monte Carlo only over the codebook draw, exact inside."""
    children = np.random.SeedSequence(seed).spawn(codebooks)
    totals = {name: 0.0 for name in decoders}
    for c in range(codebooks):
        cb = sample_codebook(spec, np.random.default_rng(children[c]))
        pe = exact_pe_given_codebook(cb, channel, metric, decoders, budget)
        for name in decoders:
            totals[name] += pe[name]
    return {name: value / codebooks for name, value in totals.items()}


@dataclass(frozen=True)
class FitResult:
    """Least-squares slope of -ln(pe) against blocklength, with OLS standard error."""

    slope: float
    stderr: float
    intercept: float
    points: int


def fit_exponent(pe_by_n) -> FitResult:
    """Fit the empirical error exponent from ``(n, estimate)`` pairs.

    Needs at least three blocklengths and strictly positive estimates; a zero
    estimate carries only one-sided information and is rejected here.
    """
    pts = sorted(pe_by_n)
    if len(pts) < 3:
        raise ValueError("need at least three blocklengths to fit a slope")
    ns = np.array([float(n) for n, _ in pts])
    pes = np.array([float(p) for _, p in pts])
    if np.any(pes <= 0):
        raise ValueError("zero estimates: only a lower bound on the exponent exists")
    ys = -np.log(pes)
    nbar = ns.mean()
    sxx = float(((ns - nbar) ** 2).sum())
    slope = float(((ns - nbar) * (ys - ys.mean())).sum() / sxx)
    intercept = float(ys.mean() - slope * nbar)
    resid = ys - (intercept + slope * ns)
    dof = len(pts) - 2
    stderr = float(np.sqrt((resid ** 2).sum() / dof / sxx)) if dof > 0 else np.nan
    return FitResult(slope, stderr, intercept, len(pts))
