"""Backend equivalence and exactness of the numerical kernels."""
import math

import numpy as np
import pytest

import oracles
from airsched import _kernels
from airsched._kernels import _fallback

BACKENDS = [_kernels.get_backend(name) for name in _kernels.available_backends()]
BACKEND_IDS = _kernels.available_backends()

pytestmark = pytest.mark.filterwarnings("ignore::DeprecationWarning")


def random_inputs(seed, n=4, m=2, t=5):
    rng = np.random.default_rng(seed)
    a = rng.uniform(size=(n, m, t))
    for s in range(t):
        slot = a[:, :, s]
        slot /= max(slot.sum(axis=0).max(), slot.sum(axis=1).max(), 1.0)
    pr = rng.uniform(1e-4, 1e-2, size=(n, m, t))
    return np.ascontiguousarray(a), np.ascontiguousarray(pr)


@pytest.mark.parametrize("backend", BACKENDS, ids=BACKEND_IDS)
class TestAgainstOracle:
    def test_interference_matches_loop(self, backend):
        a, pr = random_inputs(0)
        out = backend.interference(a, pr)
        n, m, t = a.shape
        for i in range(n):
            for j in range(m):
                for s in range(t):
                    expected = sum(a[p, :, s].sum() * pr[p, j, s]
                                   for p in range(n) if p != i)
                    assert out[i, j, s] == pytest.approx(expected, rel=1e-12, abs=1e-300)

    def test_rates_match_definition(self, backend):
        a, pr = random_inputs(1)
        n0 = 1e-9
        rates = backend.rates(a, pr, n0)
        inter = backend.interference(a, pr)
        expected = np.log2(1.0 + a * pr / (inter + n0))
        np.testing.assert_allclose(rates, expected, rtol=1e-12)

    def test_concave_grad_matches_finite_differences(self, backend):
        a, pr = random_inputs(2, n=3, m=2, t=2)
        n0 = 1e-6
        grad = backend.concave_grad(a, pr, n0)
        h = 1e-7

        def value(x):
            return float(np.log2(x * pr + _fallback.interference(x, pr) + n0).sum())

        for idx in np.ndindex(a.shape):
            up = a.copy(); up[idx] += h
            down = a.copy(); down[idx] -= h
            fd = (value(up) - value(down)) / (2 * h)
            assert grad[idx] == pytest.approx(fd, rel=2e-5)

    def test_tangent_row_slopes_match_finite_differences(self, backend):
        a, pr = random_inputs(3, n=3, m=2, t=2)
        n0 = 1e-6
        slopes = backend.tangent_row_slopes(a, pr, n0)
        h = 1e-7

        def value(x):
            return float(np.log2(_fallback.interference(x, pr) + n0).sum())

        for u in range(3):
            for s in range(2):
                up = a.copy(); up[u, 0, s] += h
                down = a.copy(); down[u, 0, s] -= h
                fd = (value(up) - value(down)) / (2 * h)
                assert slopes[u, s] == pytest.approx(fd, rel=2e-5)

    def test_fw_line_search_against_grid(self, backend):
        rng = np.random.default_rng(4)
        for _ in range(25):
            k = int(rng.integers(1, 30))
            d0 = np.ascontiguousarray(rng.uniform(0.5, 3.0, size=k))
            ed = np.ascontiguousarray(rng.uniform(-0.4, 1.0, size=k) * d0)
            slope = float(rng.normal() * k)

            def phi(s):
                return float(np.log2(d0 + s * ed).sum()) + s * slope

            s_star = backend.fw_line_search(d0, ed, slope)
            grid = np.linspace(0.0, 1.0, 20001)
            values = [phi(float(s)) for s in grid]
            assert phi(s_star) >= max(values) - 1e-7

    def test_matching_exact_on_all_small_shapes(self, backend):
        rng = np.random.default_rng(5)
        for n in range(1, 5):
            for m in range(1, 4):
                for _ in range(20):
                    w = np.ascontiguousarray(rng.normal(size=(n, m)))
                    row_to_col = backend.max_weight_matching(w)
                    value = sum(w[i, row_to_col[i]] for i in range(n) if row_to_col[i] >= 0)
                    expected = oracles.best_matching_value(w.tolist())
                    assert value == pytest.approx(expected, rel=1e-12, abs=1e-12)
                    used = [c for c in row_to_col if c >= 0]
                    assert len(used) == len(set(used))
                    assert all(w[i, c] > 0 for i, c in enumerate(row_to_col) if c >= 0)

    def test_matching_batch_consistent(self, backend):
        rng = np.random.default_rng(6)
        w = np.ascontiguousarray(rng.normal(size=(4, 3, 6)))
        batch = backend.max_weight_matching_batch(w)
        for s in range(6):
            single = backend.max_weight_matching(np.ascontiguousarray(w[:, :, s]))
            np.testing.assert_array_equal(batch[:, s], single)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
class TestBackendAgreement:
    def test_tensor_kernels_agree(self):
        core = _kernels.get_backend("compiled")
        for seed in range(5):
            a, pr = random_inputs(seed, n=5, m=3, t=4)
            n0 = 1e-9
            np.testing.assert_allclose(core.interference(a, pr),
                                       _fallback.interference(a, pr), rtol=1e-12)
            np.testing.assert_allclose(core.rates(a, pr, n0),
                                       _fallback.rates(a, pr, n0), rtol=1e-12)
            np.testing.assert_allclose(core.denominators(a, pr, n0),
                                       _fallback.denominators(a, pr, n0), rtol=1e-12)
            np.testing.assert_allclose(core.concave_grad(a, pr, n0),
                                       _fallback.concave_grad(a, pr, n0), rtol=1e-10)
            np.testing.assert_allclose(core.tangent_row_slopes(a, pr, n0),
                                       _fallback.tangent_row_slopes(a, pr, n0), rtol=1e-10)

    def test_matching_values_agree(self):
        core = _kernels.get_backend("compiled")
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 7))
            w = np.ascontiguousarray(rng.normal(size=(n, m)))
            rc_core = core.max_weight_matching(w)
            rc_py = _fallback.max_weight_matching(w)
            value_core = sum(w[i, c] for i, c in enumerate(rc_core) if c >= 0)
            value_py = sum(w[i, c] for i, c in enumerate(rc_py) if c >= 0)
            assert value_core == pytest.approx(value_py, rel=1e-12, abs=1e-12)

    def test_line_search_agrees(self):
        core = _kernels.get_backend("compiled")
        rng = np.random.default_rng(8)
        for _ in range(50):
            k = int(rng.integers(1, 40))
            d0 = np.ascontiguousarray(rng.uniform(0.1, 2.0, size=k))
            ed = np.ascontiguousarray(rng.uniform(-0.5, 1.5, size=k) * d0)
            slope = float(rng.normal() * 2)
            assert core.fw_line_search(d0, ed, slope) == pytest.approx(
                _fallback.fw_line_search(d0, ed, slope), abs=1e-9)


def test_matching_against_scipy():
    scipy = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(9)
    for _ in range(50):
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        w = np.ascontiguousarray(rng.normal(size=(n, m)) * rng.uniform(0.1, 10))
        rc = _kernels.max_weight_matching(w)
        value = sum(w[i, c] for i, c in enumerate(rc) if c >= 0)
        clipped = np.maximum(w, 0.0)
        rows, cols = scipy.linear_sum_assignment(clipped, maximize=True)
        expected = clipped[rows, cols].sum()
        assert value == pytest.approx(expected, rel=1e-12, abs=1e-12)
