import numpy as np
import pytest

from ofdmpn import signal_model as sm
from ofdmpn.numerics import build_projector


class Instance:
    def __init__(self, s, h, theta, block):
        self.s, self.h, self.theta, self.block = s, h, theta, block
        self.y, self.r = block.y, block.r
        self.L = h.size
        self.n_c = s.size
        self._b = None

    @property
    def b(self):
        if self._b is None:
            self._b = build_projector(self.s, self.L)
        return self._b


def make_instance(n_c, seed, L=4, sigma=0.0, delta_f=5000.0, model="wiener", theta=None, snr_db=None):
    rng = sm.trial_rng(seed, 0)
    s = sm.gen_symbols(rng, n_c)
    h = sm.gen_channel(rng, sm.ChannelParams(L, 0.7))
    if theta is None:
        if model == "wiener":
            theta = sm.gen_wiener_phase(rng, n_c, sm.WienerPhaseParams(delta_f_3db=delta_f))
        else:
            theta = sm.gen_gaussian_phase(rng, n_c, sm.GaussianPhaseParams(delta_f_3db=delta_f))
    if snr_db is not None:
        sigma = sm.snr_to_sigma(s, h, n_c, snr_db)
    block = sm.transmit_receive(rng, s, h, theta, sigma)
    return Instance(s, h, np.asarray(theta, float), block)


@pytest.fixture
def instance():
    return make_instance


def random_unimodular(rng, n):
    return np.exp(2j * np.pi * rng.random(n))


# Acceptance report: one line per criterion at the end of the session.
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {detail}")
