"""JSON run-configuration parsing and validation for the command line tools.

A configuration file is a single JSON object; the full schema is documented
in the project README.  Validation errors carry the key path of the
offending entry so they can be fixed without guessing.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """A configuration file failed validation; the message names the key."""


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _as_matrix(value, path: str, rows: int | None = None) -> np.ndarray:
    try:
        m = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        _fail(path, "must be a rectangular array of numbers")
    if m.ndim != 2 or m.size == 0:
        _fail(path, "must be a nonempty 2-D array")
    if rows is not None and m.shape[0] != rows:
        _fail(path, f"must have {rows} rows")
    if np.any(m < 0):
        _fail(path, "entries must be nonnegative")
    if np.abs(m.sum(axis=1) - 1.0).max() > 1e-9:
        _fail(path, "every row must sum to 1 within 1e-9")
    return m / m.sum(axis=1, keepdims=True)


def _as_dist(value, path: str) -> np.ndarray:
    try:
        p = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        _fail(path, "must be an array of numbers")
    if p.ndim != 1 or p.size == 0:
        _fail(path, "must be a nonempty 1-D array")
    if np.any(p < 0):
        _fail(path, "entries must be nonnegative")
    if abs(p.sum() - 1.0) > 1e-9:
        _fail(path, "must sum to 1 within 1e-9")
    return p / p.sum()


def _as_rate_list(value, path: str) -> list[float]:
    if isinstance(value, (int, float)):
        value = [value]
    if not isinstance(value, list) or not value:
        _fail(path, "must be a number or nonempty list of numbers")
    out = []
    for k, r in enumerate(value):
        if not isinstance(r, (int, float)) or r < 0:
            _fail(f"{path}[{k}]", "rates must be nonnegative numbers")
        out.append(float(r))
    return out


@dataclass(frozen=True)
class CloudConfig:
    dist: np.ndarray
    conditional_composition: np.ndarray


@dataclass(frozen=True)
class SimulationConfig:
    blocklengths: list[int]
    trials: int = 1000
    seed: int = 0
    decoders: tuple[str, ...] = ("optimal", "ml")
    method: str = "auto"
    round_composition: bool = False
    audit_records: str | None = None
    exact: bool = False
    exact_codebooks: int = 100


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration for the exponent and simulation commands."""

    channel: np.ndarray
    composition: np.ndarray
    rate_pairs: list[tuple[float, float]]
    metric: np.ndarray | None = None
    cloud: CloudConfig | None = None
    grid_denominator: int | None = None
    simulation: SimulationConfig | None = None
    out_dir: str = "."
    source: str = ""

    @property
    def mismatched(self) -> bool:
        return self.metric is not None and not np.array_equal(self.metric, self.channel)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a JSON configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file ({exc})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")

    known = {"channel", "metric", "composition", "cloud", "rates",
             "grid_denominator", "simulation", "out_dir"}
    for key in raw:
        if key not in known:
            _fail(key, "unknown configuration key")

    if "channel" not in raw:
        _fail("channel", "required")
    channel = _as_matrix(raw["channel"], "channel")

    if "composition" not in raw:
        _fail("composition", "required")
    composition = _as_dist(raw["composition"], "composition")
    if composition.shape[0] != channel.shape[0]:
        _fail("composition", "length must equal the number of channel rows")

    metric = None
    if raw.get("metric") is not None:
        metric = _as_matrix(raw["metric"], "metric", rows=channel.shape[0])
        if metric.shape != channel.shape:
            _fail("metric", "must have the same shape as channel")

    cloud = None
    if raw.get("cloud") is not None:
        c = raw["cloud"]
        if not isinstance(c, dict) or "dist" not in c or "conditional_composition" not in c:
            _fail("cloud", "must be an object with 'dist' and 'conditional_composition'")
        pu = _as_dist(c["dist"], "cloud.dist")
        pxu = _as_matrix(c["conditional_composition"], "cloud.conditional_composition",
                         rows=pu.shape[0])
        if pxu.shape[1] != channel.shape[0]:
            _fail("cloud.conditional_composition",
                  "columns must equal the number of channel rows")
        cloud = CloudConfig(pu, pxu)

    rates = raw.get("rates")
    if not isinstance(rates, dict) or "r1" not in rates or "r2" not in rates:
        _fail("rates", "must be an object with 'r1' and 'r2' rate grids")
    r1s = _as_rate_list(rates["r1"], "rates.r1")
    r2s = _as_rate_list(rates["r2"], "rates.r2")
    pairs = [(r1, r2) for r1 in r1s for r2 in r2s if r2 <= r1]
    if not pairs:
        _fail("rates", "no pair in the grid satisfies r2 <= r1")

    denom = raw.get("grid_denominator")
    if denom is not None and (not isinstance(denom, int) or denom < 1):
        _fail("grid_denominator", "must be a positive integer")

    sim = None
    if raw.get("simulation") is not None:
        s = raw["simulation"]
        if not isinstance(s, dict):
            _fail("simulation", "must be an object")
        if "blocklengths" not in s or not isinstance(s["blocklengths"], list) or not s["blocklengths"]:
            _fail("simulation.blocklengths", "required nonempty list of integers")
        ns = []
        for k, n in enumerate(s["blocklengths"]):
            if not isinstance(n, int) or n < 1:
                _fail(f"simulation.blocklengths[{k}]", "must be a positive integer")
            ns.append(n)
        decoders = tuple(s.get("decoders", ["optimal", "ml"]))
        for name in decoders:
            if name not in ("optimal", "ml", "mmi"):
                _fail("simulation.decoders", f"unknown decoder {name!r}")
        method = s.get("method", "auto")
        if method not in ("auto", "direct", "typed"):
            _fail("simulation.method", "must be 'auto', 'direct' or 'typed'")
        trials = s.get("trials", 1000)
        if not isinstance(trials, int) or trials < 1:
            _fail("simulation.trials", "must be a positive integer")
        seed = s.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            _fail("simulation.seed", "must be a nonnegative integer")
        sim = SimulationConfig(
            blocklengths=ns, trials=trials, seed=seed, decoders=decoders,
            method=method,
            round_composition=bool(s.get("round_composition", False)),
            audit_records=s.get("audit_records"),
            exact=bool(s.get("exact", False)),
            exact_codebooks=int(s.get("exact_codebooks", 100)),
        )

    out_dir = raw.get("out_dir", ".")
    if not isinstance(out_dir, str):
        _fail("out_dir", "must be a string path")

    return RunConfig(channel, composition, pairs, metric, cloud, denom, sim,
                     out_dir, str(path))
