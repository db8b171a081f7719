"""Command-line front end.

Usage::

    ofdmpn sweep  --config run.cfg [--out results.csv] [--seed N] [--workers N] [--estimators a,b]
    ofdmpn trace  --config one_cell.cfg [--out trace.csv]
    ofdmpn single --config one_cell.cfg [--out phase.csv] [--trial K]

Configs are flat ``key = value[, value...]`` files; ``#`` starts a comment.
List-valued keys span a scenario grid (their Cartesian product).
"""
from __future__ import annotations

import argparse
import csv
import itertools
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .harness import (
    AGGREGATE_COLUMNS,
    OfdmScenario,
    parse_estimator,
    run_monte_carlo,
    run_trials,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "cmd_sweep", "cmd_trace", "cmd_single", "main"]

EXIT_OK, EXIT_TRIAL_ERROR, EXIT_CONFIG_ERROR = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    n_c: list
    estimators: list
    phase_model: list = field(default_factory=lambda: ["wiener"])
    delta_f_hz: list = field(default_factory=lambda: [5000.0])
    snr_db: Optional[list] = None
    sigma: Optional[list] = None
    channel_length: int = 10
    channel_decay: float = 0.7
    sample_rate_hz: float = 20e6
    theta_rms_deg: float = 2.0
    symbol_policy: str = "per-trial"
    trials: int = 100
    master_seed: int = 0
    tolerance: float = 1e-8
    max_iters: int = 1000
    alt_outer_iters: int = 50
    workers: int = 1
    out: Optional[str] = None

    def scenarios(self) -> list:
        if self.sigma is not None:
            noise = [dict(snr_db=None, sigma=v) for v in self.sigma]
        else:
            noise = [dict(snr_db=v, sigma=None) for v in self.snr_db]
        grid = itertools.product(self.n_c, self.phase_model, self.delta_f_hz, noise)
        return [
            OfdmScenario(
                n_c=n_c, L=self.channel_length, decay_rate=self.channel_decay, phase_model=pm,
                delta_f_hz=df, f_s=self.sample_rate_hz, theta_rms_deg=self.theta_rms_deg,
                symbol_policy=self.symbol_policy, trials=self.trials, master_seed=self.master_seed,
                tolerance=self.tolerance, max_iters=self.max_iters, alt_outer_iters=self.alt_outer_iters,
                **nz,
            )
            for n_c, pm, df, nz in grid
        ]


def _int(v):
    f = float(v)
    if not f.is_integer():
        raise ValueError(v)
    return int(f)


def _pos_float(v):
    f = float(v)
    if not (f > 0 and math.isfinite(f)):
        raise ValueError(v)
    return f


def _snr(v):
    f = float(v)
    if math.isnan(f) or f == -math.inf:
        raise ValueError(v)
    return f


# key -> (converter, is_list)
_SCHEMA = {
    "n_c": (_int, True),
    "estimators": (str, True),
    "phase_model": (str, True),
    "delta_f_hz": (float, True),
    "snr_db": (_snr, True),
    "sigma": (float, True),
    "channel_length": (_int, False),
    "channel_decay": (float, False),
    "sample_rate_hz": (_pos_float, False),
    "theta_rms_deg": (float, False),
    "symbol_policy": (str, False),
    "trials": (_int, False),
    "master_seed": (_int, False),
    "tolerance": (_pos_float, False),
    "max_iters": (_int, False),
    "alt_outer_iters": (_int, False),
    "workers": (_int, False),
    "out": (str, False),
}


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; raises ``ConfigError`` listing every problem found."""
    errors = []
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rhs = line.partition("=")
        key = key.strip()
        if not sep:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        if key not in _SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno}: duplicate key {key!r}")
            continue
        conv, is_list = _SCHEMA[key]
        items = [x.strip() for x in rhs.split(",")] if is_list else [rhs.strip()]
        items = [x for x in items if x]
        if not items:
            errors.append(f"line {lineno}: {key!r} has no value")
            values[key] = [] if is_list else None
            continue
        if not is_list and len(items) != 1:
            errors.append(f"line {lineno}: {key!r} takes a single value")
            continue
        parsed = []
        for item in items:
            try:
                parsed.append(conv(item))
            except ValueError:
                errors.append(f"line {lineno}: bad value {item!r} for {key!r}")
        values[key] = parsed if is_list else (parsed[0] if parsed else None)

    for key in ("n_c", "estimators"):
        if key not in values:
            errors.append(f"missing required key {key!r}")
    if "estimators" in values and not values["estimators"]:
        errors.append("estimator list is empty")
    if "snr_db" in values and "sigma" in values:
        errors.append("give either 'snr_db' or 'sigma', not both")
    if "snr_db" not in values and "sigma" not in values:
        values["snr_db"] = [35.0]

    n_cs = [n for n in values.get("n_c", []) if isinstance(n, int)]
    for n in n_cs:
        if n < 2 or n & (n - 1):
            errors.append(f"n_c={n} is not a power of two")
    L = values.get("channel_length", 10)
    if isinstance(L, int):
        if L < 1:
            errors.append("channel_length must be >= 1")
        for n in n_cs:
            if L >= n:
                errors.append(f"channel_length={L} must be smaller than n_c={n}")
    for pm in values.get("phase_model", []):
        if pm not in ("wiener", "gaussian"):
            errors.append(f"unknown phase_model {pm!r}")
    for df in values.get("delta_f_hz", []):
        if not df >= 0:
            errors.append(f"delta_f_hz must be non-negative, got {df}")
    for sg in values.get("sigma", []):
        if not sg >= 0:
            errors.append(f"sigma must be non-negative, got {sg}")
    if values.get("symbol_policy", "per-trial") not in ("per-trial", "fixed"):
        errors.append(f"unknown symbol_policy {values['symbol_policy']!r}")
    for key in ("trials", "max_iters", "alt_outer_iters", "workers"):
        v = values.get(key)
        if isinstance(v, int) and v < 1:
            errors.append(f"{key} must be >= 1")
    if isinstance(values.get("master_seed"), int) and values["master_seed"] < 0:
        errors.append("master_seed must be non-negative")

    specs = []
    for name in values.get("estimators", []):
        try:
            specs.append(parse_estimator(name))
        except ValueError as exc:
            errors.append(str(exc))
    for spec in specs:
        if spec.n is None:
            continue
        for n in n_cs:
            if spec.n > n or n % spec.n:
                errors.append(f"estimator {spec.name}: N={spec.n} does not divide n_c={n}")

    if errors:
        raise ConfigError(errors)
    values["estimators"] = [s.name for s in specs]
    return RunConfig(**values)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return format(float(v), ".12g")
    return str(v)


def write_csv(path, columns, rows) -> None:
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _single_cell(config: RunConfig):
    cells = config.scenarios()
    if len(cells) != 1:
        raise ConfigError([f"this command needs exactly one scenario cell, config spans {len(cells)}"])
    return cells[0]


def cmd_sweep(config: RunConfig) -> int:
    rows = run_monte_carlo(config.scenarios(), config.estimators, workers=config.workers)
    write_csv(config.out, AGGREGATE_COLUMNS, rows)
    return EXIT_OK


TRACE_COLUMNS = ["estimator", "iteration", "objective", "delta_u_norm"]


def cmd_trace(config: RunConfig, trial_index: int = 0) -> int:
    scenario = _single_cell(config)
    specs = [parse_estimator(e) for e in config.estimators]
    _, _, results = run_trials(scenario, specs, trial_index, keep_estimates=True)
    rows = []
    for spec, res in zip(specs, results):
        for it, f in enumerate(res.objective_trace):
            delta = res.step_norms[it - 1] if 0 < it <= len(res.step_norms) else None
            rows.append({"estimator": spec.name, "iteration": it, "objective": f, "delta_u_norm": delta})
    write_csv(config.out, TRACE_COLUMNS, rows)
    return EXIT_OK


def cmd_single(config: RunConfig, trial_index: int = 0) -> int:
    scenario = _single_cell(config)
    specs = [parse_estimator(e) for e in config.estimators]
    block, metrics, _ = run_trials(scenario, specs, trial_index, keep_estimates=True)
    columns = ["index", "theta_true"] + [f"theta_hat_{s.name}" for s in specs]
    rows = []
    for k in range(block.n_c):
        row = {"index": k, "theta_true": float(block.theta[k])}
        for s, m in zip(specs, metrics):
            row[f"theta_hat_{s.name}"] = float(m.theta_hat[k])
        rows.append(row)
    write_csv(config.out, columns, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ofdmpn", description="OFDM phase-noise and channel estimation experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("sweep", "Monte Carlo sweep; writes the aggregate CSV"),
        ("trace", "per-iteration objective trace for one block"),
        ("single", "per-subcarrier phase estimates for one block"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", help="output CSV path (default: config 'out' or stdout)")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--estimators", help="comma-separated subset of the configured estimators")
        if name != "sweep":
            p.add_argument("--trial", type=int, default=0, help="trial index of the block")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            config = parse_config(fh.read())
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed must be non-negative"])
            config.master_seed = args.seed
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError(["--workers must be >= 1"])
            config.workers = args.workers
        if args.out is not None:
            config.out = args.out
        if args.estimators:
            wanted = [parse_estimator(e).name for e in args.estimators.split(",") if e.strip()]
            missing = [e for e in wanted if e not in config.estimators]
            if missing:
                raise ConfigError([f"estimator {e!r} is not in the config" for e in missing])
            config.estimators = [e for e in config.estimators if e in wanted]
    except (OSError, ConfigError, ValueError) as exc:
        errs = exc.errors if isinstance(exc, ConfigError) else [str(exc)]
        for e in errs:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    try:
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "trace":
            return cmd_trace(config, args.trial)
        return cmd_single(config, args.trial)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except Exception as exc:  # any trial failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRIAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
