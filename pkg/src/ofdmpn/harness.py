"""Monte Carlo driver: scenarios, estimator dispatch, error metrics, aggregation.

Every trial draws its block from a Philox stream keyed on
``(master_seed, trial_index)``; the noise stream is scaled per scenario, so
scenario cells that differ only in SNR share symbols, channel and phase
(common random numbers). Results are a pure function of the scenario grid
and the seed, whatever the worker count.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import signal_model as sm
from .baselines import AltConfig, altmm_run, altopt_run
from .estimators import (
    TQM,
    EstimateResult,
    MmConfig,
    channel_estimate_with,
    objective,
    opt_pct_estimate,
    pct,
    run_mm,
)
from .numerics import build_projector

__all__ = [
    "OfdmScenario",
    "EstimatorSpec",
    "TrialMetrics",
    "parse_estimator",
    "phase_mse",
    "channel_mse",
    "generate_block",
    "run_estimator",
    "run_trial",
    "run_trials",
    "run_monte_carlo",
    "aggregate",
    "AGGREGATE_COLUMNS",
    "TIMING_COLUMNS",
]

ESTIMATOR_KINDS = ("tqm", "lqm", "tqm-pct", "lqm-pct", "tqm-optpct", "altopt", "altmm",
                   "altopt-pct", "altmm-pct", "ignore-phn", "exact-phn")
_NEEDS_N = {"tqm-pct", "lqm-pct", "altopt-pct", "altmm-pct"}

STREAM_SYMBOLS, STREAM_CHANNEL, STREAM_PHASE, STREAM_NOISE = range(4)
FIXED_SYMBOL_TRIAL = 2**32 - 1


@dataclass(frozen=True)
class OfdmScenario:
    n_c: int = 512
    L: int = 10
    decay_rate: float = 0.7
    phase_model: str = "wiener"
    delta_f_hz: float = 5000.0
    f_s: float = 20e6
    theta_rms_deg: float = 2.0
    snr_db: Optional[float] = 35.0
    sigma: Optional[float] = None
    symbol_policy: str = "per-trial"
    trials: int = 100
    master_seed: int = 0
    tolerance: float = 1e-8
    max_iters: int = 1000
    alt_outer_iters: int = 50

    def __post_init__(self):
        if self.phase_model not in ("wiener", "gaussian"):
            raise ValueError(f"unknown phase model {self.phase_model!r}")
        if not 1 <= self.L < self.n_c:
            raise ValueError("need 1 <= L < n_c")
        if (self.snr_db is None) == (self.sigma is None):
            raise ValueError("give exactly one of snr_db and sigma")
        if self.symbol_policy not in ("per-trial", "fixed"):
            raise ValueError(f"unknown symbol policy {self.symbol_policy!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def phase_params(self):
        if self.phase_model == "wiener":
            return sm.WienerPhaseParams(f_s=self.f_s, delta_f_3db=self.delta_f_hz)
        return sm.GaussianPhaseParams(f_s=self.f_s, delta_f_3db=self.delta_f_hz,
                                      theta_rms_deg=self.theta_rms_deg)

    def mm_config(self, variant: str = TQM) -> MmConfig:
        return MmConfig(variant=variant, tolerance=self.tolerance, max_iters=self.max_iters)

    def alt_config(self, reduction=None) -> AltConfig:
        return AltConfig(outer_tolerance=self.tolerance, inner_tolerance=self.tolerance,
                         outer_max_iters=self.alt_outer_iters, inner_max_iters=self.max_iters,
                         reduction=reduction)


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    n: Optional[int] = None

    @property
    def name(self) -> str:
        return self.kind if self.n is None else f"{self.kind}:{self.n}"


def parse_estimator(text: str) -> EstimatorSpec:
    text = text.strip()
    kind, _, arg = text.partition(":")
    if kind not in ESTIMATOR_KINDS:
        raise ValueError(f"unknown estimator {text!r}")
    if kind in _NEEDS_N:
        if not arg:
            raise ValueError(f"estimator {kind!r} needs a reduced length, e.g. {kind}:32")
        try:
            n = int(arg)
        except ValueError:
            raise ValueError(f"bad reduced length in {text!r}") from None
        if n < 1:
            raise ValueError(f"reduced length must be positive in {text!r}")
        return EstimatorSpec(kind, n)
    if arg:
        raise ValueError(f"estimator {kind!r} takes no argument")
    return EstimatorSpec(kind)


@dataclass
class TrialMetrics:
    estimator: str
    trial_index: int
    phase_mse: float
    channel_mse: float
    phase_mse_avg: float
    channel_mse_avg: float
    objective_final: float
    iterations: int
    converged: bool
    wall_time: float
    mse_time: float
    n_reduced: Optional[int] = None
    bic: Optional[float] = None
    theta_hat: Optional[np.ndarray] = field(default=None, repr=False)


def _wrap(x: np.ndarray) -> np.ndarray:
    return np.angle(np.exp(1j * x))


def phase_mse(theta_hat, theta_true) -> float:
    """Summed squared phase error after removing the best common phase."""
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    theta_true = np.asarray(theta_true, dtype=np.float64)
    if theta_hat.shape != theta_true.shape:
        raise ValueError("phase vectors differ in length")
    d = theta_hat - theta_true
    alpha = np.angle(np.sum(np.exp(1j * d)))
    return float(np.sum(_wrap(d - alpha) ** 2))


def channel_mse(h_hat, h_true) -> float:
    """``min_alpha ||exp(j alpha) h_hat - h||^2``."""
    h_hat = np.asarray(h_hat, dtype=np.complex128)
    h_true = np.asarray(h_true, dtype=np.complex128)
    if h_hat.shape != h_true.shape:
        raise ValueError("channel vectors differ in length")
    # Equals ||h_hat||^2 + ||h||^2 - 2|<h_hat, h>|, evaluated without the cancellation.
    inner = np.vdot(h_hat, h_true)
    rot = inner / abs(inner) if inner != 0 else 1.0
    e = rot * h_hat - h_true
    return float(np.vdot(e, e).real)


def generate_block(scenario: OfdmScenario, trial_index: int) -> sm.BlockRealization:
    seed = scenario.master_seed
    sym_trial = FIXED_SYMBOL_TRIAL if scenario.symbol_policy == "fixed" else trial_index
    s = sm.gen_symbols(sm.trial_rng(seed, sym_trial, STREAM_SYMBOLS), scenario.n_c)
    h = sm.gen_channel(sm.trial_rng(seed, trial_index, STREAM_CHANNEL),
                       sm.ChannelParams(scenario.L, scenario.decay_rate))
    prng = sm.trial_rng(seed, trial_index, STREAM_PHASE)
    if scenario.phase_model == "wiener":
        theta = sm.gen_wiener_phase(prng, scenario.n_c, scenario.phase_params())
    else:
        theta = sm.gen_gaussian_phase(prng, scenario.n_c, scenario.phase_params())
    if scenario.sigma is not None:
        sigma = float(scenario.sigma)
    else:
        sigma = sm.snr_to_sigma(s, h, scenario.n_c, scenario.snr_db)
    return sm.transmit_receive(sm.trial_rng(seed, trial_index, STREAM_NOISE), s, h, theta, sigma)


def _fixed_phase_result(u: np.ndarray, block, b) -> EstimateResult:
    f = objective(u, block.y, b)
    return EstimateResult(u_star=u, theta_hat=0.0 - np.angle(u), h_hat=channel_estimate_with(u, block.y, b),
                          objective_trace=np.array([f]), step_norms=np.zeros(0), iterations=0,
                          converged=True)


def run_estimator(spec: EstimatorSpec, block: sm.BlockRealization, scenario: OfdmScenario) -> EstimateResult:
    kind, n_c = spec.kind, block.n_c
    if kind in ("altopt", "altopt-pct", "altmm", "altmm-pct"):
        red = pct(n_c, spec.n) if spec.n is not None else None
        run = altopt_run if kind.startswith("altopt") else altmm_run
        return run(scenario.alt_config(red), block.r, block.s, block.L)

    b = build_projector(block.s, block.L)
    if kind == "ignore-phn":
        return _fixed_phase_result(np.ones(n_c, dtype=np.complex128), block, b)
    if kind == "exact-phn":
        return _fixed_phase_result(np.exp(-1j * block.theta), block, b)
    if kind in ("tqm", "lqm"):
        return run_mm(scenario.mm_config(kind), block.y, b)
    if kind in ("tqm-pct", "lqm-pct"):
        cfg = replace(scenario.mm_config(kind[:3]), reduction=pct(n_c, spec.n))
        return run_mm(cfg, block.y, b)
    if kind == "tqm-optpct":
        sigma_sq = block.noise_sigma**2 if block.noise_sigma > 0 else None
        return opt_pct_estimate(block.y, b, sigma_sq, None, scenario.mm_config(TQM))
    raise ValueError(f"unknown estimator {spec.name!r}")


def _metrics(spec, trial_index, block, res, wall) -> TrialMetrics:
    t0 = time.perf_counter()
    pm = phase_mse(res.theta_hat, block.theta)
    cm = channel_mse(res.h_hat, block.h)
    mse_time = time.perf_counter() - t0
    if spec.kind == "tqm-optpct":
        n_red = res.selected_n
    elif spec.n is not None:
        n_red = spec.n
    else:
        n_red = block.n_c
    return TrialMetrics(
        estimator=spec.name, trial_index=trial_index, phase_mse=pm, channel_mse=cm,
        phase_mse_avg=pm / block.n_c, channel_mse_avg=cm / block.L,
        objective_final=res.objective, iterations=res.iterations, converged=res.converged,
        wall_time=wall, mse_time=mse_time, n_reduced=n_red, bic=res.bic, theta_hat=res.theta_hat,
    )


def run_trials(scenario: OfdmScenario, specs: Sequence[EstimatorSpec], trial_index: int,
               keep_estimates: bool = False):
    """One block, every estimator on it. Returns ``(block, [TrialMetrics], [EstimateResult])``."""
    block = generate_block(scenario, trial_index)
    metrics, results = [], []
    for spec in specs:
        t0 = time.perf_counter()
        res = run_estimator(spec, block, scenario)
        wall = time.perf_counter() - t0
        m = _metrics(spec, trial_index, block, res, wall)
        if not keep_estimates:
            m.theta_hat = None
        metrics.append(m)
        results.append(res if keep_estimates else None)
    return block, metrics, results


def run_trial(scenario: OfdmScenario, estimator_spec, trial_index: int) -> TrialMetrics:
    if isinstance(estimator_spec, str):
        estimator_spec = parse_estimator(estimator_spec)
    return run_trials(scenario, [estimator_spec], trial_index)[1][0]


def _work(args):
    cell, scenario, specs, trial_index = args
    return cell, trial_index, run_trials(scenario, specs, trial_index)[1]


AGGREGATE_COLUMNS = [
    "scenario_id", "n_c", "L", "phase_model", "delta_f_hz", "snr_db", "estimator", "n_reduced",
    "trials", "phase_mse_mean", "phase_mse_min", "phase_mse_max", "channel_mse_mean",
    "channel_mse_min", "channel_mse_max", "iters_mean", "wall_ms_mean", "wall_ms_min",
    "wall_ms_max", "bic_mean",
    # extra columns
    "sigma", "theta_rms_deg", "phase_mse_avg_mean", "channel_mse_avg_mean",
    "objective_mean", "converged_frac", "mse_ms_mean",
]
TIMING_COLUMNS = ("wall_ms_mean", "wall_ms_min", "wall_ms_max", "mse_ms_mean")


def aggregate(scenario_id: int, scenario: OfdmScenario, estimator: str, trials: Sequence[TrialMetrics]) -> dict:
    """Reduce per-trial metrics (in trial order) to one output row."""
    trials = sorted(trials, key=lambda m: m.trial_index)
    arr = lambda attr: np.array([getattr(m, attr) for m in trials], dtype=np.float64)
    pm, cm, wall = arr("phase_mse"), arr("channel_mse"), arr("wall_time") * 1e3
    bics = [m.bic for m in trials if m.bic is not None]
    n_red = [m.n_reduced for m in trials if m.n_reduced is not None]
    return {
        "scenario_id": scenario_id,
        "n_c": scenario.n_c,
        "L": scenario.L,
        "phase_model": scenario.phase_model,
        "delta_f_hz": scenario.delta_f_hz,
        "snr_db": scenario.snr_db,
        "estimator": estimator,
        "n_reduced": float(np.mean(n_red)) if n_red else None,
        "trials": len(trials),
        "phase_mse_mean": float(pm.mean()),
        "phase_mse_min": float(pm.min()),
        "phase_mse_max": float(pm.max()),
        "channel_mse_mean": float(cm.mean()),
        "channel_mse_min": float(cm.min()),
        "channel_mse_max": float(cm.max()),
        "iters_mean": float(arr("iterations").mean()),
        "wall_ms_mean": float(wall.mean()),
        "wall_ms_min": float(wall.min()),
        "wall_ms_max": float(wall.max()),
        "bic_mean": float(np.mean(bics)) if bics else None,
        "sigma": scenario.sigma,
        "theta_rms_deg": scenario.theta_rms_deg if scenario.phase_model == "gaussian" else None,
        "phase_mse_avg_mean": float(arr("phase_mse_avg").mean()),
        "channel_mse_avg_mean": float(arr("channel_mse_avg").mean()),
        "objective_mean": float(arr("objective_final").mean()),
        "converged_frac": float(arr("converged").mean()),
        "mse_ms_mean": float(arr("mse_time").mean() * 1e3),
    }


def run_monte_carlo(scenarios: Sequence[OfdmScenario], estimators: Sequence, workers: int = 1,
                    return_trials: bool = False):
    """Run every scenario cell against every estimator; one aggregate row per pair.

    Rows come out in (cell, estimator) order. With ``return_trials`` the
    per-trial metrics are returned as well, keyed by ``(cell, estimator)``.
    """
    if not scenarios:
        raise ValueError("empty scenario grid")
    specs = [parse_estimator(e) if isinstance(e, str) else e for e in estimators]
    if not specs:
        raise ValueError("no estimators given")
    tasks = [(cell, sc, specs, t) for cell, sc in enumerate(scenarios) for t in range(sc.trials)]

    if workers > 1 and len(tasks) > 1:
        chunk = max(1, len(tasks) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_work, tasks, chunksize=chunk))
    else:
        done = [_work(t) for t in tasks]

    per = {}
    for cell, _, metrics in done:
        for spec, m in zip(specs, metrics):
            per.setdefault((cell, spec.name), []).append(m)

    rows = [aggregate(cell, sc, spec.name, per[(cell, spec.name)])
            for cell, sc in enumerate(scenarios) for spec in specs]
    return (rows, per) if return_trials else rows
