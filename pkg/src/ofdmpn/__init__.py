"""Joint OFDM phase-noise and channel estimation by majorization-minimization."""
from .kernels import BACKEND
from .numerics import build_projector, unitary_dft, unitary_idft
from .estimators import (
    EstimateResult,
    MmConfig,
    channel_estimate,
    objective,
    opt_pct_estimate,
    pct,
    run_mm,
)
from .baselines import AltConfig, altmm_run, altopt_run

__version__ = "0.1.0"
