"""Alternating-minimisation baselines working on the frequency-domain block.

Both alternate a channel update with a phase update for ``c = exp(j*theta)``.
Circulant matrices are never formed: ``circ(F c) = sqrt(N_c) F Diag(c) F^H``,
so with ``g = F^H (Diag(s) Fcheck h)`` the residual reduces to

    || r - P F c ||^2 = || y - sqrt(N_c) * g * c ||^2,    y = F^H r,

and ``F^H P^H P F = N_c Diag(|g|^2)``.

* AltOpt solves the phase update by unconstrained least squares and only
  normalises ``c`` to unit modulus at the very end.
* AltMM keeps ``c`` unimodular and runs an inner MM loop with
  ``lambda = N_c ||g||_inf^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .estimators import EstimateResult, PctTransform, channel_estimate_with, remove_phase_ambiguity
from .numerics import Projector, build_projector, circulant_dense, dft_matrix, unitary_idft

__all__ = [
    "AltConfig",
    "altopt_run",
    "altmm_run",
    "altmm_inner",
    "spectral_constraint_residual",
]

EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class AltConfig:
    outer_tolerance: float = 1e-8
    inner_tolerance: float = 1e-8
    outer_max_iters: int = 50
    inner_max_iters: int = 1000
    reduction: Optional[PctTransform] = None

    def __post_init__(self):
        if not (self.outer_tolerance > 0 and self.inner_tolerance > 0):
            raise ValueError("tolerances must be positive")
        if self.outer_max_iters < 1 or self.inner_max_iters < 1:
            raise ValueError("iteration budgets must be >= 1")


def _time_response(b: Projector, h: np.ndarray) -> np.ndarray:
    """``g = F^H Diag(s) Fcheck h``."""
    return unitary_idft(b.basis @ h)


def _residual(y, g, c) -> float:
    e = y - math.sqrt(y.size) * g * c
    return float(np.vdot(e, e).real)


def _channel_update_general(y: np.ndarray, b: Projector, c: np.ndarray) -> np.ndarray:
    """Least-squares channel for a possibly non-unimodular ``c``.

    Minimises ``|| y - sqrt(N_c) Diag(c) F^H A h ||`` over ``h``.
    """
    m = math.sqrt(y.size) * c[:, None] * np.fft.ifft(b.basis, axis=0, norm="ortho")
    h, *_ = np.linalg.lstsq(m, y, rcond=None)
    return h


def _finish(c: np.ndarray, y: np.ndarray, b: Projector, trace, steps, converged) -> EstimateResult:
    mag = np.abs(c)
    c = np.where(mag > 0, c / np.where(mag > 0, mag, 1.0), 1.0)
    u = remove_phase_ambiguity(np.conj(c))
    return EstimateResult(
        u_star=u,
        theta_hat=0.0 - np.angle(u),
        h_hat=channel_estimate_with(u, y, b),
        objective_trace=np.asarray(trace),
        step_norms=np.asarray(steps),
        iterations=len(steps),
        converged=converged,
    )


def altopt_run(config: AltConfig, r, s, L: int) -> EstimateResult:
    r = np.asarray(r, dtype=np.complex128)
    y = unitary_idft(r)
    n_c = y.size
    b = build_projector(s, L)
    t = config.reduction

    c = np.ones(n_c, dtype=np.complex128)
    trace, steps = [], []
    converged = False
    for _ in range(config.outer_max_iters):
        h = _channel_update_general(y, b, c)
        g = _time_response(b, h)
        w = n_c * np.abs(g) ** 2
        rhs = math.sqrt(n_c) * np.conj(g) * y
        if t is None:
            c_new = rhs / np.maximum(w, EIG_FLOOR * w.max())
        else:
            wr = t.adjoint(w).real
            c_new = t.expand(t.adjoint(rhs) / np.maximum(wr, EIG_FLOOR * wr.max()))
        trace.append(_residual(y, g, c_new))
        step = float(np.linalg.norm(c_new - c))
        steps.append(step)
        c = c_new
        if step <= config.outer_tolerance:
            converged = True
            break
    return _finish(c, y, b, trace, steps, converged)


def altmm_inner(y: np.ndarray, g: np.ndarray, c0: np.ndarray, tol: float, max_iters: int,
                reduction: Optional[PctTransform] = None):
    """Inner MM loop for ``min ||y - sqrt(N_c) g c||^2`` over unimodular ``c``.

    Each step is ``c <- phase(F^H P^H r + (lambda I - F^H P^H P F) c)``.
    With a reduction, ``c0`` and the returned iterate have reduced length.
    Returns ``(c, iterations, lambda)``.
    """
    n_c = y.size
    b_vec = math.sqrt(n_c) * np.conj(g) * y
    w = n_c * np.abs(g) ** 2
    lam = float(w.max())
    if reduction is not None:
        b_vec = reduction.adjoint(b_vec)
        w = reduction.adjoint(w).real
        lam *= reduction.n_s
    c, it, _ = kernels.separable_mm(b_vec, lam - w, c0, tol, max_iters)
    return c, it, lam


def altmm_run(config: AltConfig, r, s, L: int) -> EstimateResult:
    r = np.asarray(r, dtype=np.complex128)
    y = unitary_idft(r)
    n_c = y.size
    b = build_projector(s, L)
    t = config.reduction
    expand = (lambda x: x) if t is None else t.expand

    c_r = np.ones(n_c if t is None else t.n, dtype=np.complex128)
    trace, steps = [], []
    converged = False
    for _ in range(config.outer_max_iters):
        c = expand(c_r)
        # Unimodular c makes Phi^H Phi = N_c I, so the channel update is the plain LS fit.
        h = channel_estimate_with(np.conj(c), y, b)
        g = _time_response(b, h)
        c_new, _, _ = altmm_inner(y, g, c_r, config.inner_tolerance, config.inner_max_iters, t)
        trace.append(_residual(y, g, expand(c_new)))
        step = float(np.linalg.norm(c_new - c_r))
        steps.append(step)
        c_r = c_new
        if step <= config.outer_tolerance:
            converged = True
            break
    return _finish(expand(c_r), y, b, trace, steps, converged)


def spectral_constraint_residual(theta) -> float:
    """``||Phi^H Phi - N I||_F / N`` for ``Phi = circ(F exp(j theta))``, dense."""
    return spectral_residual_of(np.exp(1j * np.asarray(theta, dtype=np.float64)))


def spectral_residual_of(c) -> float:
    c = np.asarray(c, dtype=np.complex128)
    n = c.size
    phi = circulant_dense(dft_matrix(n) @ c)
    return float(np.linalg.norm(phi.conj().T @ phi - n * np.eye(n)) / n)
