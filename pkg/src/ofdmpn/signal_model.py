"""Ground-truth generation: symbols, channels, phase noise and the received block.

The received time-domain block follows

    y = sqrt(N_c) * Diag(exp(j*theta)) @ F^H @ Diag(s) @ Fcheck @ h + v,

with ``v ~ CN(0, 2 sigma^2 I)``. The cyclic prefix is implicit in the
circular convolution.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .numerics import apply_partial_dft, unitary_dft, unitary_idft

__all__ = [
    "WienerPhaseParams",
    "GaussianPhaseParams",
    "ChannelParams",
    "BlockRealization",
    "trial_rng",
    "gen_symbols",
    "gen_channel",
    "gen_wiener_phase",
    "gen_gaussian_phase",
    "gaussian_phase_covariance",
    "transmit_receive",
    "snr_to_sigma",
]


@dataclass(frozen=True)
class WienerPhaseParams:
    """Free-running oscillator: Brownian phase with per-sample increment
    variance ``2*pi*delta_f_3db / f_s``."""

    f_s: float = 20e6
    delta_f_3db: float = 5000.0

    def __post_init__(self):
        if not self.f_s > 0:
            raise ValueError("f_s must be positive")
        if not 0 <= self.delta_f_3db < self.f_s:
            raise ValueError("need 0 <= delta_f_3db < f_s")

    @property
    def increment_variance(self) -> float:
        return 2.0 * np.pi * self.delta_f_3db / self.f_s


@dataclass(frozen=True)
class GaussianPhaseParams:
    """PLL oscillator: stationary Gaussian phase with exponential covariance."""

    f_s: float = 20e6
    delta_f_3db: float = 100.0
    theta_rms_deg: float = 2.0

    def __post_init__(self):
        if not self.f_s > 0 or not self.delta_f_3db > 0 or self.theta_rms_deg < 0:
            raise ValueError("Gaussian phase parameters must be positive")

    @property
    def variance(self) -> float:
        return (np.pi * self.theta_rms_deg / 180.0) ** 2

    @property
    def correlation(self) -> float:
        """Lag-one correlation coefficient."""
        return float(np.exp(-2.0 * np.pi * self.delta_f_3db / self.f_s))


@dataclass(frozen=True)
class ChannelParams:
    length: int = 10
    decay_rate: float = 0.7

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("channel length must be >= 1")

    def tap_powers(self) -> np.ndarray:
        p = np.exp(-self.decay_rate * np.arange(self.length))
        return p / p.sum()


@dataclass(frozen=True)
class BlockRealization:
    s: np.ndarray
    h: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    r: np.ndarray
    noise_sigma: float

    @property
    def n_c(self) -> int:
        return self.s.size

    @property
    def L(self) -> int:
        return self.h.size


def trial_rng(master_seed: int, trial_index: int, *stream: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed on ``(master_seed, trial_index, *stream)``."""
    seq = np.random.SeedSequence([int(master_seed), int(trial_index), *map(int, stream)])
    return np.random.Generator(np.random.Philox(seq))


def _cn(rng: np.random.Generator, n: int, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def gen_symbols(rng: np.random.Generator, n_c: int) -> np.ndarray:
    """i.i.d. CN(0, 2) symbols, i.e. unit variance per real component."""
    if n_c < 1:
        raise ValueError("n_c must be >= 1")
    return _cn(rng, n_c, 2.0)


def gen_channel(rng: np.random.Generator, params: ChannelParams) -> np.ndarray:
    """Rayleigh taps with normalised exponential power profile."""
    return np.sqrt(params.tap_powers()) * _cn(rng, params.length, 1.0)


def gen_wiener_phase(rng: np.random.Generator, n_c: int, params: WienerPhaseParams) -> np.ndarray:
    if n_c < 1:
        raise ValueError("n_c must be >= 1")
    theta = np.zeros(n_c)
    if n_c > 1:
        steps = np.sqrt(params.increment_variance) * rng.standard_normal(n_c - 1)
        theta[1:] = np.cumsum(steps)
    return theta


def gaussian_phase_covariance(n: int, params: GaussianPhaseParams) -> np.ndarray:
    lag = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    return params.variance * np.exp(-2.0 * np.pi * params.delta_f_3db * lag / params.f_s)


def gen_gaussian_phase(rng: np.random.Generator, n_c: int, params: GaussianPhaseParams) -> np.ndarray:
    """Zero-mean Gaussian phase with covariance ``var * rho^|i-j|``.

    Sampled by the AR(1) recursion, which reproduces the exponential
    covariance exactly in O(n).
    """
    if n_c < 1:
        raise ValueError("n_c must be >= 1")
    eps = rng.standard_normal(n_c)
    return kernels.ar1_recursion(eps, params.correlation, np.sqrt(params.variance))


def noiseless_time_signal(s: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``sqrt(N_c) F^H Diag(s) Fcheck h``: the cyclic convolution of ``F^H s`` with ``h``."""
    n_c = s.size
    return np.sqrt(n_c) * unitary_idft(s * apply_partial_dft(h, n_c))


def transmit_receive(rng: np.random.Generator, s, h, theta, noise_sigma: float) -> BlockRealization:
    s = np.asarray(s, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    theta = np.asarray(theta, dtype=np.float64)
    if s.ndim != 1 or theta.shape != s.shape:
        raise ValueError("symbols and phase must be 1-D vectors of equal length")
    if h.ndim != 1 or not 1 <= h.size <= s.size:
        raise ValueError("channel length must be between 1 and n_c")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    y = np.exp(1j * theta) * noiseless_time_signal(s, h)
    if noise_sigma > 0:
        y = y + _cn(rng, s.size, 2.0 * noise_sigma**2)
    return BlockRealization(s=s, h=h, theta=theta, y=y, r=unitary_dft(y), noise_sigma=float(noise_sigma))


def snr_to_sigma(s, h, n_c: int, snr_db: float) -> float:
    """Per-component noise std so that per-sample SNR equals ``snr_db``.

    Signal power per sample is ``mean|s|^2 * ||h||^2`` (its expectation over
    i.i.d. symbols); noise power per sample is ``2 sigma^2``.
    """
    if np.isposinf(snr_db):
        return 0.0
    if not np.isfinite(snr_db):
        raise ValueError("snr_db must be finite or +inf")
    s = np.asarray(s)
    power = float(np.mean(np.abs(s) ** 2) * np.sum(np.abs(h) ** 2))
    return float(np.sqrt(power / (2.0 * 10.0 ** (snr_db / 10.0))))
