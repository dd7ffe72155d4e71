"""Command line interface: exponent tables, rate sweeps, simulations, checks.

Subcommands
-----------
``exponent``       exponent table over the configured rate grid (CSV)
``exponent-hier``  superposition-ensemble exponent table (CSV)
``simulate``       Monte Carlo bin-error estimates and fitted exponents (CSV)
``oracle-check``   run the built-in oracle and invariant suites

Exit codes: 0 on success, 1 when a check or assertion fails, 2 on
configuration errors.  Output CSV is byte-stable for a fixed config and seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from math import exp, log
from pathlib import Path

import numpy as np

from .checks import run_all_checks
from .config import ConfigError, RunConfig, load_config
from .flat import FlatEnsembleSpec, ml_bin_exponent, optimal_bin_exponent, random_coding_exponent
from .hierarchical import HierEnsembleSpec
from .hierarchical import optimal_bin_exponent as hier_optimal_bin_exponent
from .simulate import (
    CodebookSpec,
    HierCodebookSpec,
    estimate_pe_exact_ensemble,
    estimate_pe_mc,
    estimate_pe_mc_hier,
    fit_exponent,
    round_composition,
)

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _kernel_summary(kernel: np.ndarray) -> str:
    return json.dumps(np.round(kernel, 6).tolist())


def cmd_exponent(config: RunConfig, out_dir: Path, denominator: int | None) -> int:
    d = denominator or config.grid_denominator
    rows = []
    for (r1, r2) in config.rate_pairs:
        spec = FlatEnsembleSpec(config.composition, config.channel, r1=r1, r2=r2,
                                metric=config.metric)
        er = random_coding_exponent(spec, d)
        eml = ml_bin_exponent(spec, d)
        estar = optimal_bin_exponent(spec, d)
        rows.append([
            r1, r2, er.exponent, eml.exponent, estar.exponent, estar.denominator,
            _kernel_summary(estar.outer_kernel),
        ])
    _write_csv(out_dir / "exponents.csv",
               ["R1", "R2", "E_r", "E_r_ml", "E_star", "grid_denominator",
                "argmin_output_kernel"],
               rows)
    print(f"wrote {out_dir / 'exponents.csv'} ({len(rows)} rows)")
    return EXIT_OK


def cmd_exponent_hier(config: RunConfig, out_dir: Path, denominator: int | None) -> int:
    if config.cloud is None:
        raise ConfigError("cloud: required for exponent-hier")
    d = denominator or config.grid_denominator
    rows = []
    for (r1, r2) in config.rate_pairs:
        spec = HierEnsembleSpec(config.cloud.dist, config.cloud.conditional_composition,
                                config.channel, r1=r1, r2=r2, metric=config.metric)
        res = hier_optimal_bin_exponent(spec, d)
        rows.append([r1, r2, res.exponent, res.denominator,
                     _kernel_summary(res.outer_kernel)])
    _write_csv(out_dir / "exponents_hier.csv",
               ["R1", "R2", "E_star_hier", "grid_denominator", "argmin_output_kernel"],
               rows)
    print(f"wrote {out_dir / 'exponents_hier.csv'} ({len(rows)} rows)")
    return EXIT_OK


def _integer_code_sizes(n: int, r1: float, r2: float) -> tuple[int, int]:
    """Map target rates to integer code sizes.

    The code size is the rounded exponential clamped to at least 2; the bin
    size is the largest divisor whose realized rate does not exceed the
    requested bin rate (so it may fall well below it for awkward sizes).
    """
    m1 = max(2, round(exp(n * r1)))
    cap = exp(n * r2 + 1e-12)
    best = 1
    k = 1
    while k * k <= m1:
        if m1 % k == 0:
            for div in (k, m1 // k):
                if div <= cap and div > best:
                    best = div
        k += 1
    return m1, best


def cmd_simulate(config: RunConfig, out_dir: Path, trials: int | None,
                 seed: int | None, round_comp: bool, exact: bool) -> int:
    if config.simulation is None:
        raise ConfigError("simulation: required for simulate")
    sim = config.simulation
    trials = trials if trials is not None else sim.trials
    seed = seed if seed is not None else sim.seed
    exact = exact or sim.exact
    round_comp = round_comp or sim.round_composition

    audit_fh = None
    if sim.audit_records:
        audit_path = Path(sim.audit_records)
        audit_path.parent.mkdir(parents=True, exist_ok=True)
        audit_fh = open(audit_path, "w")

    rows = []
    series: dict[tuple[float, float, str], list[tuple[int, float]]] = {}
    row_index = 0
    try:
        for (r1, r2) in config.rate_pairs:
            for n in sim.blocklengths:
                comp = config.composition
                counts = comp * n
                if np.abs(counts - np.rint(counts)).max() > 1e-9:
                    if not round_comp:
                        raise ConfigError(
                            f"composition: {n} times the composition is not integer; "
                            "pass --round-composition to round it"
                        )
                    comp = round_composition(comp, n)
                m1, m2 = _integer_code_sizes(n, r1, r2)
                row_seed = seed + row_index
                row_index += 1
                if config.cloud is not None:
                    hspec = HierCodebookSpec(
                        n, m1 // m2, m2, round_composition(config.cloud.dist, n)
                        if round_comp else config.cloud.dist,
                        config.cloud.conditional_composition,
                    )
                    result = estimate_pe_mc_hier(
                        hspec, config.channel, config.metric,
                        decoders=sim.decoders, trials=trials, seed=row_seed,
                    )
                    spec = result.spec
                else:
                    spec = CodebookSpec(n, m1, m2, comp)
                    if exact:
                        pe = estimate_pe_exact_ensemble(
                            spec, config.channel, config.metric,
                            decoders=sim.decoders, codebooks=sim.exact_codebooks,
                            seed=row_seed,
                        )
                        result = None
                    else:
                        callback = None
                        if audit_fh is not None:
                            def callback(outcome, errs, _n=n, _r1=r1, _r2=r2):
                                record = {"n": _n, "R1": _r1, "R2": _r2,
                                          "errors": {k: bool(v) for k, v in errs.items()}}
                                if outcome is not None:
                                    record["index"] = int(outcome.index)
                                    record["true_bin"] = int(outcome.true_bin)
                                    record["decoded"] = {k: int(v) for k, v in
                                                         outcome.decoded.items()}
                                audit_fh.write(json.dumps(record) + "\n")
                        result = estimate_pe_mc(
                            spec, config.channel, config.metric,
                            decoders=sim.decoders, trials=trials, seed=row_seed,
                            method=sim.method, trial_callback=callback,
                        )
                real_r1, real_r2 = spec.realized_rates()
                row = [real_r1, real_r2, n, r1, r2, spec.num_codewords, spec.bin_size]
                if exact and config.cloud is None:
                    for name in sim.decoders:
                        row += [pe[name], "", ""]
                        series.setdefault((r1, r2, name), []).append((n, pe[name]))
                    row.append("exact")
                else:
                    for name in sim.decoders:
                        est = result.estimates[name]
                        row += [est.estimate, est.ci_low, est.ci_high]
                        series.setdefault((r1, r2, name), []).append((n, est.estimate))
                    row.append(result.method)
                rows.append(row)
    finally:
        if audit_fh is not None:
            audit_fh.close()

    header = ["realized_R1", "realized_R2", "n", "requested_R1", "requested_R2",
              "M1", "M2"]
    for name in sim.decoders:
        header += [f"pe_{name}", f"pe_{name}_ci_low", f"pe_{name}_ci_high"]
    header.append("method")
    _write_csv(out_dir / "simulation.csv", header, rows)

    fit_rows = []
    for (r1, r2, name), points in sorted(series.items()):
        positive = [(n, p) for (n, p) in points if p > 0]
        if len(positive) >= 3:
            fit = fit_exponent(positive)
            fit_rows.append([r1, r2, name, fit.slope, fit.stderr, fit.intercept,
                             fit.points])
        else:
            fit_rows.append([r1, r2, name, "", "", "", len(positive)])
    _write_csv(out_dir / "fitted_exponents.csv",
               ["requested_R1", "requested_R2", "decoder", "slope", "stderr",
                "intercept", "points"],
               fit_rows)
    print(f"wrote {out_dir / 'simulation.csv'} ({len(rows)} rows) and "
          f"{out_dir / 'fitted_exponents.csv'}")
    return EXIT_OK


def cmd_oracle_check(_config: RunConfig | None) -> int:
    outcomes = run_all_checks()
    failures = 0
    for outcome in outcomes:
        status = "PASS" if outcome.passed else "FAIL"
        extra = f"  {outcome.detail}" if outcome.detail else ""
        print(f"[{status}] {outcome.name}: max deviation {outcome.deviation:.3e}{extra}")
        failures += not outcome.passed
    print(f"{len(outcomes) - failures}/{len(outcomes)} checks passed")
    return EXIT_OK if failures == 0 else EXIT_CHECK_FAILURE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binexp",
        description="Bin-index decoding error exponents and simulations for DMCs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("exponent", "exponent-hier", "simulate", "oracle-check"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=(name != "oracle-check"),
                       help="path to the JSON run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="simulation seed")
        p.add_argument("--grid-denominator", type=int, default=None,
                       help="lattice denominator override")
        p.add_argument("--trials", type=int, default=None,
                       help="Monte Carlo trials per point")
        p.add_argument("--round-composition", action="store_true",
                       help="round non-integer compositions to the nearest type")
        p.add_argument("--exact", action="store_true",
                       help="average exact per-codebook error probabilities")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else None
        out_dir = Path(args.out if args.out is not None
                       else (config.out_dir if config else "."))
        if args.command == "exponent":
            return cmd_exponent(config, out_dir, args.grid_denominator)
        if args.command == "exponent-hier":
            return cmd_exponent_hier(config, out_dir, args.grid_denominator)
        if args.command == "simulate":
            return cmd_simulate(config, out_dir, args.trials, args.seed,
                                args.round_composition, args.exact)
        return cmd_oracle_check(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
