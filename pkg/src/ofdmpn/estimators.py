"""Joint phase-noise / channel estimation by majorization-minimization.

The phase-noise vector is parameterised by ``u = exp(-j*theta)`` and
estimated by minimising the least-squares residual left after projecting out
the best channel fit,

    f(u) = || (I - B) F (y * u) ||^2,    |u_n| = 1,

where ``B`` projects onto the span of ``Diag(s) Fcheck``. Both MM variants
replace ``f`` by a linear surrogate whose minimiser over the unit torus is a
per-entry phase, so each iteration costs one FFT pair and one projector
apply.

* TQM majorises the projector part only (``lambda = 1``); fast.
* LQM majorises the whole weighted matrix (``lambda = ||y||_inf^2``); slow.

A piecewise-constant transform (PCT) restricts ``u`` to blockwise-constant
vectors; ``opt_pct_estimate`` picks the block count by BIC.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .numerics import Projector, build_projector, unitary_dft, unitary_idft

__all__ = [
    "TQM",
    "LQM",
    "PctTransform",
    "MmConfig",
    "EstimateResult",
    "pct",
    "objective",
    "tqm_step",
    "lqm_step",
    "tqm_step_reduced",
    "lqm_step_reduced",
    "run_mm",
    "remove_phase_ambiguity",
    "channel_estimate",
    "channel_estimate_with",
    "bic_score",
    "estimate_noise_variance",
    "default_pct_candidates",
    "opt_pct_estimate",
]

TQM = "tqm"
LQM = "lqm"
UNIMODULAR_TOL = 1e-9


@dataclass(frozen=True)
class PctTransform:
    """Sample-and-hold map from ``n`` block values to ``n_c`` samples."""

    n_c: int
    n: int

    @property
    def n_s(self) -> int:
        return self.n_c // self.n

    def expand(self, x: np.ndarray) -> np.ndarray:
        if self.n_s == 1:
            return np.asarray(x, dtype=np.complex128)
        return kernels.block_repeat(x, self.n_s)

    def adjoint(self, z: np.ndarray) -> np.ndarray:
        if self.n_s == 1:
            return np.asarray(z, dtype=np.complex128)
        return kernels.block_sum(z, self.n_s)

    def dense(self) -> np.ndarray:
        return np.kron(np.eye(self.n), np.ones((self.n_s, 1)))


def pct(n_c: int, n: int) -> PctTransform:
    if n < 1 or n > n_c or n_c % n:
        raise ValueError(f"reduced length {n} must divide n_c={n_c}")
    return PctTransform(n_c=n_c, n=n)


@dataclass(frozen=True)
class MmConfig:
    variant: str = TQM
    tolerance: float = 1e-8
    max_iters: int = 1000
    reduction: Optional[PctTransform] = None
    init: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant not in (TQM, LQM):
            raise ValueError(f"unknown MM variant {self.variant!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class EstimateResult:
    u_star: np.ndarray
    theta_hat: np.ndarray
    h_hat: np.ndarray
    objective_trace: np.ndarray
    step_norms: np.ndarray
    iterations: int
    converged: bool
    bic: Optional[float] = None
    selected_n: Optional[int] = None
    bic_by_n: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def _check_unimodular(u: np.ndarray) -> None:
    dev = np.max(np.abs(np.abs(u) - 1.0)) if u.size else 0.0
    if dev > UNIMODULAR_TOL:
        raise ValueError(f"u is not unimodular (max deviation {dev:.3g})")


def _project_out(u: np.ndarray, y: np.ndarray, b: Projector):
    """Return ``(conj(y) * F^H B F (y*u), f(u))`` sharing one FFT and one projection."""
    z = unitary_dft(y * u)
    bz = b.apply(z)
    resid = z - bz
    f = float(np.vdot(resid, resid).real)
    return np.conj(y) * unitary_idft(bz), f


def objective(u, y, b: Projector) -> float:
    u = np.asarray(u, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if u.shape != y.shape:
        raise ValueError("u and y must have equal length")
    _check_unimodular(u)
    return _project_out(u, y, b)[1]


def _lqm_constant(y: np.ndarray) -> float:
    return float(np.max(np.abs(y) ** 2))


def tqm_step(u, y, b: Projector) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    a, _ = _project_out(u, y, b)
    return kernels.unimodular_update(a, u)


def lqm_step(u, y, b: Projector) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    p, _ = _project_out(u, y, b)
    a = (_lqm_constant(y) - np.abs(y) ** 2) * u + p
    return kernels.unimodular_update(a, u)


def tqm_step_reduced(u_reduced, y, b: Projector, t: PctTransform) -> np.ndarray:
    u_reduced = np.asarray(u_reduced, dtype=np.complex128)
    p, _ = _project_out(t.expand(u_reduced), y, b)
    return kernels.unimodular_update(t.adjoint(p), u_reduced)


def lqm_step_reduced(u_reduced, y, b: Projector, t: PctTransform) -> np.ndarray:
    u_reduced = np.asarray(u_reduced, dtype=np.complex128)
    u = t.expand(u_reduced)
    p, _ = _project_out(u, y, b)
    # (lambda*N_s I - T^H Vtilde T) u_r with Vtilde u = |y|^2 u - p
    a = _lqm_constant(y) * t.n_s * u_reduced - t.adjoint(np.abs(y) ** 2 * u - p)
    return kernels.unimodular_update(a, u_reduced)


def remove_phase_ambiguity(u) -> np.ndarray:
    """Rotate ``u`` by a common unit scalar so that ``u[0] == 1``."""
    u = np.asarray(u, dtype=np.complex128)
    rot = np.conj(u[0]) / abs(u[0])
    out = u * rot
    out[0] = 1.0
    return out


def channel_estimate_with(u, y, b: Projector) -> np.ndarray:
    """Least-squares channel for phase correction ``u`` using a prebuilt projector."""
    y = np.asarray(y, dtype=np.complex128)
    return b.coefficients(unitary_dft(np.asarray(u) * y)) / math.sqrt(y.size)


def channel_estimate(u, y, s, L: int) -> np.ndarray:
    u = np.asarray(u, dtype=np.complex128)
    _check_unimodular(u)
    return channel_estimate_with(u, y, build_projector(s, L))


def run_mm(config: MmConfig, y, b: Projector, callback: Optional[Callable] = None) -> EstimateResult:
    """Iterate the selected MM step from ``config.init`` (all-ones by default).

    ``callback(x)`` is called with each new iterate, at reduced length when a
    PCT is active.
    """
    y = np.asarray(y, dtype=np.complex128)
    n_c = y.size
    t = config.reduction
    if t is not None and t.n_c != n_c:
        raise ValueError("reduction length does not match the block")
    n_free = n_c if t is None else t.n
    expand = (lambda x: x) if t is None else t.expand
    adjoint = (lambda x: x) if t is None else t.adjoint
    n_s = 1 if t is None else t.n_s

    if config.init is None:
        x = np.ones(n_free, dtype=np.complex128)
    else:
        x = np.array(config.init, dtype=np.complex128)
        if x.shape != (n_free,):
            raise ValueError(f"init must have length {n_free}")
        _check_unimodular(x)

    lqm = config.variant == LQM
    if lqm:
        lam = _lqm_constant(y) * n_s
        y2 = np.abs(y) ** 2

    trace = []
    steps = []
    converged = False
    for _ in range(config.max_iters):
        u = expand(x)
        p, f = _project_out(u, y, b)
        trace.append(f)
        if lqm:
            a = lam * x - adjoint(y2 * u - p)
        else:
            a = adjoint(p)
        x_new = kernels.unimodular_update(a, x)
        step = float(np.linalg.norm(x_new - x))
        steps.append(step)
        x = x_new
        if callback is not None:
            callback(x)
        if step <= config.tolerance:
            converged = True
            break

    x = remove_phase_ambiguity(x)
    u_star = expand(x)
    p, f = _project_out(u_star, y, b)
    trace.append(f)
    return EstimateResult(
        u_star=u_star,
        theta_hat=0.0 - np.angle(u_star),  # +0.0 rather than -0.0 where u == 1
        h_hat=channel_estimate_with(u_star, y, b),
        objective_trace=np.asarray(trace),
        step_norms=np.asarray(steps),
        iterations=len(steps),
        converged=converged,
    )


def bic_score(objective_value: float, sigma_sq: float, n: int, n_c: int) -> float:
    if not sigma_sq > 0:
        raise ValueError("sigma_sq must be positive")
    return objective_value / sigma_sq + n * math.log(n_c)


def estimate_noise_variance(objective_value: float, n_c: int, L: int, n: int) -> float:
    """Per-component noise variance from a residual with ``2L + n - 1`` fitted real parameters."""
    dof = 2 * n_c - 2 * L - n + 1
    if dof <= 0:
        raise ValueError("not enough residual degrees of freedom")
    return objective_value / dof


def default_pct_candidates(n_c: int, smallest: int = 32) -> list:
    out = []
    n = smallest
    while n <= n_c:
        if n_c % n == 0:
            out.append(n)
        n *= 2
    return out or [n_c]


def opt_pct_estimate(
    y,
    b: Projector,
    sigma_sq: Optional[float],
    candidate_ns: Optional[Sequence[int]] = None,
    config: MmConfig = MmConfig(),
) -> EstimateResult:
    """Run the MM solver for each PCT size and keep the minimum-BIC estimate.

    BIC uses the full-length objective of the expanded estimate. If
    ``sigma_sq`` is None it is estimated from the coarsest candidate's
    residual.
    """
    y = np.asarray(y, dtype=np.complex128)
    n_c = y.size
    ns = list(default_pct_candidates(n_c) if candidate_ns is None else candidate_ns)
    if not ns:
        raise ValueError("empty candidate list")
    transforms = [pct(n_c, n) for n in ns]

    results = [run_mm(replace(config, reduction=t, init=None), y, b) for t in transforms]
    if sigma_sq is None:
        i0 = int(np.argmin(ns))
        sigma_sq = estimate_noise_variance(results[i0].objective, n_c, b.L, ns[i0])

    best = None
    scores = {}
    for n, res in zip(ns, results):
        res.bic = bic_score(res.objective, sigma_sq, n, n_c)
        res.selected_n = n
        scores[n] = res.bic
        if best is None or res.bic < best.bic:
            best = res
    best.bic_by_n = scores
    return best
