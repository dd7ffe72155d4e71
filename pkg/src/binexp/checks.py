"""Self-contained verification suites: oracle equivalence and invariants.

Each check returns a :class:`CheckOutcome`; the command line `oracle-check`
subcommand runs them all, prints one line per check with the worst deviation
observed, and fails the process if any check fails.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from .flat import (
    FlatEnsembleSpec,
    bin_score_exponent,
    bin_type_exponent,
    bin_type_exponent_cases,
    min_competing_rate_bin,
    min_competing_rate_ml,
    min_competing_rate_mmi,
    ml_bin_exponent,
    optimal_bin_exponent,
    random_coding_exponent,
    typical_bin_score,
)
from .hierarchical import HierEnsembleSpec
from .hierarchical import optimal_bin_exponent as hier_optimal_bin_exponent
from .probability import binary_symmetric_channel, mutual_information, uniform
from .simulate import CodebookSpec, estimate_pe_mc, exact_pe_given_codebook, sample_codebook


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    passed: bool
    deviation: float
    detail: str


def _outcome(name: str, passed: bool, deviation: float, detail: str = "") -> CheckOutcome:
    return CheckOutcome(name, bool(passed), float(deviation), detail)


def check_small_grid_oracle_equivalence(channel=None, composition=None) -> CheckOutcome:
    """Engine minimizations must match the exhaustive enumerator bit for bit."""
    channel = binary_symmetric_channel(0.1) if channel is None else channel
    composition = uniform(2) if composition is None else composition
    worst = 0.0
    ok = True
    for d in (4, 6):
        for (r1, r2) in [(0.15, 0.05), (0.08, 0.08), (0.3, 0.0)]:
            spec = FlatEnsembleSpec(composition, channel, r1=r1, r2=r2)
            pairs = [
                (random_coding_exponent(spec, d).exponent,
                 oracles.brute_random_coding_exponent(spec, d)[0]),
                (optimal_bin_exponent(spec, d).exponent,
                 oracles.brute_bin_decoding_exponent(spec, d, reach=True)[0]),
                (ml_bin_exponent(spec, d).exponent,
                 oracles.brute_bin_decoding_exponent(spec, d, reach=False)[0]),
            ]
            q = composition[:, None] * channel
            pairs.append((min_competing_rate_bin(q, spec, d),
                          oracles.brute_min_competing_rate(q, spec, d, True)))
            pairs.append((min_competing_rate_ml(q, spec, d),
                          oracles.brute_min_competing_rate(q, spec, d, False)))
            qy = q.sum(axis=0)
            pairs.append((typical_bin_score(qy, spec, d),
                          oracles.brute_typical_bin_score(qy, spec, d)))
            for engine_value, oracle_value in pairs:
                if engine_value != oracle_value:
                    ok = False
                    worst = max(worst, abs(engine_value - oracle_value))
    return _outcome("small-grid oracle equivalence (bit-exact)", ok, worst)


def check_score_exponent_cases(samples: int = 500, seed: int = 0) -> CheckOutcome:
    """The compact and four-branch bin type exponents must agree everywhere."""
    rng = np.random.default_rng(seed)
    metric = binary_symmetric_channel(0.2)
    worst = 0.0
    for _ in range(samples):
        q = rng.dirichlet(np.ones(4)).reshape(2, 2)
        s = rng.uniform(-3.0, 0.5)
        r2 = rng.uniform(0.0, 0.8)
        a = bin_type_exponent(q, s, r2, metric)
        b = bin_type_exponent_cases(q, s, r2, metric)
        if np.isinf(a) and np.isinf(b):
            continue
        worst = max(worst, abs(a - b))
    return _outcome("bin type exponent two-case vs four-case", worst <= 1e-12, worst)


def check_score_threshold(denominator: int = 48) -> CheckOutcome:
    """The bin score exponent vanishes at the typical score and not above it."""
    spec = FlatEnsembleSpec(uniform(2), binary_symmetric_channel(0.2), r1=0.2, r2=0.05)
    delta = 2.0 / denominator
    worst = 0.0
    ok = True
    for qy0 in (0.5, 0.375, 0.25):
        qy = np.array([qy0, 1.0 - qy0])
        s0 = typical_bin_score(qy, spec, denominator)
        below = bin_score_exponent(s0 - delta, qy, spec, denominator)
        above = bin_score_exponent(s0 + delta, qy, spec, denominator)
        at = bin_score_exponent(s0, qy, spec, denominator)
        ok &= below == 0.0 and at == 0.0 and above > 0.0
        worst = max(worst, abs(below), abs(at))
    return _outcome("bin score exponent vanishes up to the typical score", ok, worst)


def check_competing_rate_order(denominator: int = 48) -> CheckOutcome:
    """Bin rate <= single-codeword rate <= empirical-MI closed form."""
    channel = binary_symmetric_channel(0.1)
    spec = FlatEnsembleSpec(uniform(2), channel, r1=0.2, r2=0.05)
    q = spec.composition[:, None] * channel
    i0 = min_competing_rate_bin(q, spec, denominator)
    i0p = min_competing_rate_ml(q, spec, denominator)
    i0pp = min_competing_rate_mmi(q)
    ok = i0 <= i0p <= i0pp
    return _outcome("competing rate ordering", ok, max(0.0, i0 - i0p, i0p - i0pp),
                    f"bin={i0:.6f} ml={i0p:.6f} mmi={i0pp:.6f}")


def check_refinement_monotone(coarse: int = 24, slack_constant: float = 8.0) -> CheckOutcome:
    """Doubling the denominator may lower a minimum, and may raise it only
    within the Lipschitz slack C/d."""
    worst = 0.0
    ok = True
    for p in (0.1, 0.25):
        channel = binary_symmetric_channel(p)
        for r1 in (0.05, 0.1, 0.2):
            spec = FlatEnsembleSpec(uniform(2), channel, r1=r1, r2=r1 / 2)
            for fn in (random_coding_exponent, optimal_bin_exponent):
                v_coarse = fn(spec, coarse).exponent
                v_fine = fn(spec, 2 * coarse).exponent
                rise = v_fine - v_coarse
                worst = max(worst, rise)
                ok &= rise <= slack_constant / coarse
    return _outcome("refinement monotone within C/d", ok, worst)


def check_rate_equalities(denominator: int = 48) -> CheckOutcome:
    """Theorem-style equalities on the grid: optimal-bin exponent independent
    of the bin rate and equal to the random coding exponent within the
    measured refinement slack."""
    worst = 0.0
    ok = True
    for p in (0.1, 0.25):
        channel = binary_symmetric_channel(p)
        for r1 in (0.05, 0.1):
            values = []
            for frac in (0.0, 0.5, 1.0):
                spec = FlatEnsembleSpec(uniform(2), channel, r1=r1, r2=r1 * frac)
                values.append(optimal_bin_exponent(spec, denominator).exponent)
            er = random_coding_exponent(
                FlatEnsembleSpec(uniform(2), channel, r1=r1, r2=0.0), denominator
            ).exponent
            er_coarse = random_coding_exponent(
                FlatEnsembleSpec(uniform(2), channel, r1=r1, r2=0.0), denominator // 2
            ).exponent
            slack = max(abs(er - er_coarse), 1e-9)
            spread = max(values) - min(values)
            gap = max(abs(v - er) for v in values)
            worst = max(worst, spread, gap)
            ok &= spread <= 2 * slack and gap <= 2 * slack
    return _outcome("bin-rate independence and random-coding equality", ok, worst)


def check_zero_above_capacity(denominator: int = 48) -> CheckOutcome:
    channel = binary_symmetric_channel(0.1)
    comp = uniform(2)
    cap = mutual_information(comp[:, None] * channel)
    spec_hi = FlatEnsembleSpec(comp, channel, r1=cap + 1.0 / denominator, r2=0.05)
    spec_lo = FlatEnsembleSpec(comp, channel, r1=cap - 0.05, r2=0.02)
    ok = (
        random_coding_exponent(spec_hi, denominator).exponent == 0.0
        and optimal_bin_exponent(spec_hi, denominator).exponent == 0.0
        and random_coding_exponent(spec_lo, denominator).exponent > 0.0
        and optimal_bin_exponent(spec_lo, denominator).exponent > 0.0
    )
    return _outcome("zero exponent above capacity, positive below", ok, 0.0)


def check_mismatch_inequality(denominator: int = 48) -> CheckOutcome:
    """The ML-based bin decoder is never worse under a mismatched metric."""
    worst = 0.0
    ok = True
    metric = binary_symmetric_channel(0.2)
    for r1 in (0.05, 0.1):
        for frac in (0.0, 0.5, 1.0):
            spec = FlatEnsembleSpec(uniform(2), binary_symmetric_channel(0.1),
                                    r1=r1, r2=r1 * frac, metric=metric)
            gap = optimal_bin_exponent(spec, denominator).exponent - \
                ml_bin_exponent(spec, denominator).exponent
            worst = max(worst, gap)
            ok &= gap <= 0.0
    return _outcome("mismatched ML-bin decoder never worse", ok, worst)


def check_hier_degenerate_reduction(denominator: int = 8) -> CheckOutcome:
    """A one-letter cloud alphabet reduces the superposition exponent to flat."""
    channel = binary_symmetric_channel(0.1)
    comp = uniform(2)
    worst = 0.0
    for (r1, r2) in [(0.15, 0.05), (0.08, 0.08)]:
        hspec = HierEnsembleSpec(np.array([1.0]), comp[None, :], channel, r1=r1, r2=r2)
        fspec = FlatEnsembleSpec(comp, channel, r1=r1, r2=r2)
        worst = max(worst, abs(hier_optimal_bin_exponent(hspec, denominator).exponent
                               - optimal_bin_exponent(fspec, denominator).exponent))
    return _outcome("degenerate cloud alphabet reduces to flat", worst <= 1e-9, worst)


def check_decoder_dominance(codebooks: int = 40, seed: int = 0) -> CheckOutcome:
    """Exactly computed optimal-decoder error never exceeds the ML-bin error."""
    channel = binary_symmetric_channel(0.25)
    spec = CodebookSpec(n=6, num_codewords=8, bin_size=2,
                        composition=np.array([0.5, 0.5]))
    children = np.random.SeedSequence(seed).spawn(codebooks)
    worst = 0.0
    ok = True
    for c in range(codebooks):
        cb = sample_codebook(spec, np.random.default_rng(children[c]))
        pe = exact_pe_given_codebook(cb, channel, decoders=("optimal", "ml"))
        worst = max(worst, pe["optimal"] - pe["ml"])
        ok &= pe["optimal"] <= pe["ml"]
    return _outcome("per-codebook optimal <= ML-bin error", ok, max(worst, 0.0))


def check_mc_cross_validation(seed: int = 0) -> CheckOutcome:
    """Typed and direct Monte Carlo agree with each other within joint CIs."""
    channel = binary_symmetric_channel(0.25)
    spec = CodebookSpec(n=8, num_codewords=8, bin_size=2,
                        composition=np.array([0.5, 0.5]))
    direct = estimate_pe_mc(spec, channel, decoders=("optimal", "ml"),
                            trials=8000, seed=seed, method="direct")
    typed = estimate_pe_mc(spec, channel, decoders=("optimal", "ml"),
                           trials=8000, seed=seed + 1, method="typed")
    worst = 0.0
    ok = True
    for name in ("optimal", "ml"):
        a, b = direct.estimates[name], typed.estimates[name]
        gap = abs(a.estimate - b.estimate)
        allowance = (a.ci_high - a.ci_low) / 2 + (b.ci_high - b.ci_low) / 2
        worst = max(worst, gap - allowance)
        ok &= gap <= allowance
    return _outcome("typed vs direct Monte Carlo agreement", ok, max(worst, 0.0))


ALL_CHECKS = (
    check_small_grid_oracle_equivalence,
    check_score_exponent_cases,
    check_score_threshold,
    check_competing_rate_order,
    check_refinement_monotone,
    check_rate_equalities,
    check_zero_above_capacity,
    check_mismatch_inequality,
    check_hier_degenerate_reduction,
    check_decoder_dominance,
    check_mc_cross_validation,
)


def run_all_checks() -> list[CheckOutcome]:
    return [check() for check in ALL_CHECKS]
