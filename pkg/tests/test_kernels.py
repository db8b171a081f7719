import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ofdmpn import kernels
from ofdmpn import _kernels_py

BACKENDS = kernels.available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def impl(request):
    return BACKENDS[request.param]


def test_compiled_backend_selected_when_built():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.unimodular_update is BACKENDS[kernels.BACKEND].unimodular_update


class TestUnimodularUpdate:
    def test_normalises(self, impl):
        a = np.array([3 + 4j, -2.0, 1j * 1e-200])
        out = impl.unimodular_update(a, np.ones(3, complex))
        np.testing.assert_allclose(out, [0.6 + 0.8j, -1, 1j], atol=1e-15)

    def test_zero_keeps_previous(self, impl):
        u = np.exp(1j * np.array([0.1, 0.2, 0.3]))
        out = impl.unimodular_update(np.array([0, 1e-310, 2.0 + 0j]), u)
        np.testing.assert_array_equal(out[:2], u[:2])
        assert out[2] == 1.0


class TestBlocks:
    def test_repeat_and_sum(self, impl):
        x = np.array([1, 2j, 3, 4j])
        np.testing.assert_array_equal(impl.block_repeat(x, 2), [1, 1, 2j, 2j, 3, 3, 4j, 4j])
        np.testing.assert_array_equal(impl.block_sum(impl.block_repeat(x, 3), 3), 3 * x)


class TestAr1:
    def test_recursion(self, impl):
        eps = np.array([1.0, -0.5, 2.0])
        rho, sc = 0.9, 2.0
        g = np.sqrt(1 - rho**2) * sc
        x0 = sc
        x1 = rho * x0 + g * -0.5
        x2 = rho * x1 + g * 2.0
        np.testing.assert_allclose(impl.ar1_recursion(eps, rho, sc), [x0, x1, x2], rtol=1e-14)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
class TestBackendsAgree:
    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 300), seed=st.integers(0, 2**31))
    def test_unimodular(self, n, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a[rng.random(n) < 0.1] = 0
        u = np.exp(1j * rng.random(n))
        c = BACKENDS["cython"].unimodular_update(a, u)
        p = _kernels_py.unimodular_update(a, u)
        np.testing.assert_allclose(c, p, rtol=0, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 64), ns=st.sampled_from([1, 2, 4, 32]), seed=st.integers(0, 2**31))
    def test_blocks(self, n, ns, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n * ns) + 1j * rng.standard_normal(n * ns)
        np.testing.assert_allclose(BACKENDS["cython"].block_sum(x, ns), _kernels_py.block_sum(x, ns), atol=1e-12)
        np.testing.assert_array_equal(BACKENDS["cython"].block_repeat(x[:n], ns), _kernels_py.block_repeat(x[:n], ns))

    def test_ar1(self):
        eps = np.random.default_rng(0).standard_normal(10000)
        np.testing.assert_allclose(BACKENDS["cython"].ar1_recursion(eps, 0.999, 0.03),
                                   _kernels_py.ar1_recursion(eps, 0.999, 0.03), rtol=1e-10, atol=1e-14)

    def test_separable_mm(self):
        rng = np.random.default_rng(1)
        n = 128
        b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        w = rng.random(n)
        c0 = np.ones(n, complex)
        c1, i1, s1 = BACKENDS["cython"].separable_mm(b, w, c0, 1e-10, 500)
        c2, i2, s2 = _kernels_py.separable_mm(b, w, c0, 1e-10, 500)
        assert i1 == i2
        np.testing.assert_allclose(c1, c2, atol=1e-12)


def test_separable_mm_reaches_exact_minimiser(impl):
    # min_c sum |b_n|... with w >= 0 the fixed point is phase(b).
    rng = np.random.default_rng(2)
    b = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    c, it, step = impl.separable_mm(b, np.full(50, 3.0), np.ones(50, complex), 1e-12, 10000)
    assert step <= 1e-12
    np.testing.assert_allclose(c, b / np.abs(b), atol=1e-10)
