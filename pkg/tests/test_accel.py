import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarexpress.accel import (
    FastApplyConfig,
    fast_apply,
    fast_cost,
    init_admissible,
    init_cubic,
    init_then_schedule,
    lifted_lower_bound,
    naive_apply,
    naive_cost,
    power_lower_bound,
    should_use_fast,
    spectrum_aware_init,
)
from polarexpress.engine import Arith, NonFiniteError, exact_polar, normalize, poly_step
from polarexpress.minimax import eval_poly
from polarexpress.schedule import build_schedule

from conftest import LISTING1, LISTING2, with_spectrum

two = lambda A: np.linalg.norm(A, 2)  # noqa: E731


def test_single_step_equals_poly_step(rng):
    X = normalize(rng.standard_normal((20, 5)))
    out = fast_apply(X, [LISTING1[0]], FastApplyConfig(first_pass_regularization=0.0))
    np.testing.assert_allclose(out, poly_step(X, LISTING1[0]), atol=1e-13)


def test_matches_naive_on_tall(rng):
    X = normalize(rng.standard_normal((64, 8)))
    cfg = FastApplyConfig(restart_interval=6, first_pass_regularization=0.0)
    assert two(fast_apply(X, LISTING1[:6], cfg) - naive_apply(X, LISTING1[:6])) <= 1e-8


def test_wide_input_goes_through_transpose(rng):
    X = normalize(rng.standard_normal((4, 24)))
    cfg = FastApplyConfig(first_pass_regularization=0.0)
    assert two(fast_apply(X, LISTING1[:5], cfg) - naive_apply(X, LISTING1[:5])) <= 1e-8


def test_restart_one_is_bitwise_naive(rng):
    X = normalize(rng.standard_normal((48, 6)))
    cfg = FastApplyConfig(restart_interval=1, first_pass_regularization=0.0)
    np.testing.assert_array_equal(fast_apply(X, LISTING1, cfg), naive_apply(X, LISTING1))


def test_flop_counter():
    n, a, d, T = 8, 8, 5, 6
    X = np.random.default_rng(0).standard_normal((a * n, n)) / 30
    fa, na = Arith(), Arith()
    fast_apply(X, LISTING1[:T], arith=fa)
    naive_apply(X, LISTING1[:T], arith=na)
    assert fa.madds == pytest.approx(fast_cost(n, a, d, T), rel=0.05)
    assert na.madds == pytest.approx(naive_cost(n, a, d, T), rel=0.05)
    assert fast_cost(n, a, d, T) == ((d + 3) / 2 * T + 2 * a) * n**3


def test_auto_falls_back_for_square(rng):
    X = normalize(rng.standard_normal((8, 8)))
    ar = Arith()
    out = fast_apply(X, LISTING1[:4], FastApplyConfig(auto=True), arith=ar)
    assert ar.madds == naive_cost(8, 1, 5, 4)
    assert two(out - naive_apply(X, LISTING1[:4])) <= 1e-12


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_overflow_suggests_restart():
    X = np.full((6, 2), 1e30)
    with pytest.raises(NonFiniteError, match="restart_interval"):
        fast_apply(X, [(1.0, 1.0, 1.0)] * 3, FastApplyConfig(first_pass_regularization=0.0))


def test_config_validation():
    with pytest.raises(ValueError):
        FastApplyConfig(restart_interval=0)


@pytest.mark.parametrize("aspect,T,want", [(4, 6, True), (1, 10, False), (3.0, 2, False), (3.01, 2, True), (100, 1, False)])
def test_should_use_fast(aspect, T, want):
    assert should_use_fast(aspect, T) is want


def test_inverse_square_root(rng):
    sigma = rng.uniform(0.5, 1.0, 6)
    X = with_spectrum(rng, sigma, m=30)
    polys = build_schedule(0.5, 6, safety=1.0).polys
    out = fast_apply(X, polys, FastApplyConfig(first_pass_regularization=0.0))
    Q = np.linalg.lstsq(X, out, rcond=None)[0]
    w, V = np.linalg.eigh(X.T @ X)
    Yinv = (V / np.sqrt(w)) @ V.T
    assert two(Q - Yinv) / two(Yinv) <= 1e-6


def test_bf16_restarts_stay_finite():
    rng = np.random.default_rng(11)
    cfg = FastApplyConfig(restart_interval=3)
    for _ in range(100):
        sigma = np.logspace(0, -6, 16)
        X = normalize(with_spectrum(rng, sigma, m=256))
        out = fast_apply(X, LISTING2, cfg, precision="bf16")
        assert np.all(np.isfinite(out))


# -- power method and init ----------------------------------------------------------

def test_power_rank_one():
    M = np.zeros((4, 4))
    M[0, 0] = 1.0
    assert power_lower_bound(M, iters=1).z == pytest.approx(1.0, abs=1e-15)


def test_power_explicit_spectrum(rng):
    sigma = np.array([0.9, 0.3, 0.2, 0.1, 0.05])
    M = with_spectrum(rng, sigma)
    M /= np.linalg.norm(M)
    s1 = np.linalg.svd(M, compute_uv=False)[0]
    assert power_lower_bound(M, iters=20).z == pytest.approx(s1, abs=1e-6)


def test_power_is_lower_bound():
    rng = np.random.default_rng(5)
    for k in range(1000):
        n, m = rng.integers(2, 12, 2)
        M = rng.standard_normal((n, m)) * rng.uniform(0.1, 3, m)
        M /= np.linalg.norm(M)
        est = power_lower_bound(M, iters=int(rng.integers(1, 10)), seed=k)
        assert 0 < est.z <= np.linalg.svd(M, compute_uv=False)[0] * (1 + 1e-14)


def test_init_admissibility():
    assert not init_admissible(0.70)
    assert init_admissible(0.9)
    assert not init_admissible(1.0)
    assert spectrum_aware_init(np.eye(2) / math.sqrt(2), 0.70) is None


def test_init_cubic_linear_solve():
    z = 0.9
    w = math.sqrt(1 - z * z)
    p = init_cubic(z)
    a, b = np.linalg.solve([[w, w**3], [z, z**3]], [1.0, 1.0])
    assert p.coeffs == pytest.approx((a, b), abs=1e-12)


@given(st.floats(1 / math.sqrt(2) + 1e-3, 1 - 1e-6))
def test_init_dominates_stretch_line(z):
    w = math.sqrt(1 - z * z)
    p = init_cubic(z)
    xs = np.linspace(0, w, 1001)[1:]
    assert np.all(eval_poly(p, xs) >= xs / w * (1 - 1e-12))
    # sigma_1 in [z, 1] stays positive and bounded
    top = eval_poly(p, np.linspace(z, 1, 101))
    assert np.all(top > 1 / math.sqrt(2))


def test_init_lifts_tail(rng):
    sigma = np.array([0.95, 0.1, 0.05, 0.01])
    M = with_spectrum(rng, sigma)
    M /= np.linalg.norm(M)
    z = power_lower_bound(M).z
    _, X = spectrum_aware_init(M, z)
    s_before = np.linalg.svd(M, compute_uv=False)
    s_after = np.linalg.svd(X, compute_uv=False)
    assert s_after.min() / s_before.min() >= 1 / math.sqrt(1 - z * z) * (1 - 1e-10)


def test_init_preserves_polar(rng):
    M = with_spectrum(rng, 1.0 / np.arange(1, 9) ** 3)
    M /= np.linalg.norm(M)
    _, X = spectrum_aware_init(M, power_lower_bound(M).z)
    np.testing.assert_allclose(exact_polar(X), exact_polar(M), atol=1e-10)


def test_init_then_schedule_falls_back(rng):
    M = rng.standard_normal((6, 6))
    M /= np.linalg.norm(M)
    out, s, used = init_then_schedule(M, 1e-3, 3, z=0.5)
    assert not used and s.intervals[0].lo == 1e-3
    out, s, used = init_then_schedule(M, 1e-3, 3, z=0.99)
    assert used and s.intervals[0].lo == pytest.approx(lifted_lower_bound(1e-3, 0.99))
