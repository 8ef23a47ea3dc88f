import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from polarexpress.engine import (
    BASELINES,
    Arith,
    BaselineRegistry,
    MatrixBuffer,
    MatrixFormatError,
    NonFiniteError,
    apply_schedule,
    exact_polar,
    iterate,
    metrics,
    normalize,
    poly_step,
    read_matrix,
    resolve_polys,
    round_bf16,
    steps_for,
    write_matrix,
)
from polarexpress.schedule import build_schedule, certified_error, save_schedule

from conftest import LISTING1

two = lambda A: np.linalg.norm(A, 2)  # noqa: E731
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# -- normalize ---------------------------------------------------------------

def test_normalize_identity():
    X = normalize(np.eye(3), eps_add=0.0)
    np.testing.assert_allclose(X, np.eye(3) / np.sqrt(3), rtol=1e-15)


def test_normalize_unit_frobenius(rng):
    M = rng.standard_normal((5, 4))
    M /= np.linalg.norm(M)
    np.testing.assert_allclose(normalize(M, 1e-2), M / 1.01, rtol=1e-15)


def test_normalize_bounds_spectrum(rng):
    X = normalize(rng.standard_normal((64, 64)))
    assert np.linalg.svd(X, compute_uv=False).max() <= 1


@pytest.mark.parametrize("mode", ["frobenius", "listing2", "spectral"])
def test_normalize_zero_matrix(mode):
    with pytest.raises(ValueError, match="zero"):
        normalize(np.zeros((3, 2)), mode=mode)


def test_normalize_modes(rng):
    M = rng.standard_normal((6, 3))
    np.testing.assert_allclose(normalize(M, mode="listing2"), M / (1.01 * np.linalg.norm(M) + 1e-7))
    assert two(normalize(M, mode="spectral")) == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_array_equal(normalize(M, mode="none"), M)
    with pytest.raises(ValueError):
        normalize(M, mode="max")


# -- poly_step -----------------------------------------------------------------

def test_poly_step_fixed_point():
    np.testing.assert_array_equal(poly_step(np.eye(4), (1.5, -0.5, 0.0)), np.eye(4))


def test_poly_step_scalar_diag():
    np.testing.assert_allclose(poly_step(0.5 * np.eye(3), (1.5, -0.5, 0.0)), 0.6875 * np.eye(3), rtol=1e-15)


def test_poly_step_matches_svd(rng):
    X = rng.standard_normal((8, 3))
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    p = LISTING1[1]
    want = (U * (p[0] * s + p[1] * s**3 + p[2] * s**5)) @ Vt
    np.testing.assert_allclose(poly_step(X, p), want, atol=1e-12 * two(want))


@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_left_right_gram_agree(m, n, seed):
    X = np.random.default_rng(seed).standard_normal((m, n)) / np.sqrt(m * n)
    p = LISTING1[3]
    R = poly_step(X, p, side="right")
    L = poly_step(X, p, side="left")
    assert two(R - L) <= 1e-13 * max(two(R), 1e-300)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_poly_step_overflow_names_iteration():
    with pytest.raises(NonFiniteError, match="iteration 3"):
        poly_step(np.full((2, 2), 1e120), (1.0, 1.0), iteration=3)


def test_poly_step_bad_side():
    with pytest.raises(ValueError):
        poly_step(np.eye(2), (1.0, 1.0), side="middle")


# -- apply_schedule -------------------------------------------------------------

def test_orthogonal_input(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    s = build_schedule(1e-3, 8)
    assert two(apply_schedule(Q, s, 8) - Q) <= 1e-6 + 1e-5  # safety leaves ~2e-6 of slack
    s1 = build_schedule(1e-3, 8, safety=1.0)
    assert two(apply_schedule(Q, s1, 8) - Q) <= 1e-6


def test_two_by_two_certified(rng):
    s = build_schedule(1e-3, 8, safety=1.0)
    M = np.diag([1e-3, 1.0])
    err = two(apply_schedule(M, s, 8, normalization="none") - exact_polar(M))
    assert err <= certified_error(s) + 1e-14


def test_rank_one(rng):
    u, v = rng.standard_normal(6), rng.standard_normal(4)
    u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
    # rounding noise in the null space grows by p'(0) = 15/8 per step, so stop early
    out = apply_schedule(0.5 * np.outer(u, v), "ns5", 10)
    np.testing.assert_allclose(out, np.outer(u, v), atol=1e-12)


@pytest.mark.parametrize("shape", [(5, 5), (12, 7), (7, 12), (32, 32)])
def test_oracle_equivalence(shape, rng):
    M = rng.standard_normal(shape)
    X0 = normalize(M)
    lo = np.linalg.svd(X0, compute_uv=False).min()
    s = build_schedule(lo * 0.99, 1, safety=1.0)
    T = 1
    while certified_error(s) >= 1e-10:
        T += 1
        s = build_schedule(lo * 0.99, T, safety=1.0)
    assert two(apply_schedule(M, s) - exact_polar(M)) <= 1e-8


@given(arrays(np.float64, (5, 3), elements=finite))
def test_odd_symmetry(M):
    if np.linalg.norm(M) < 1e-3:
        return
    np.testing.assert_array_equal(apply_schedule(-M, "polarexpress"), -apply_schedule(M, "polarexpress"))


def test_iterate_yields_T_plus_one(rng):
    assert len(list(iterate(rng.standard_normal((4, 4)), "jordan", 5))) == 6


def test_apply_rejects_zero_steps(rng):
    with pytest.raises(ValueError):
        apply_schedule(rng.standard_normal((3, 3)), "ns5", 0)


def test_steps_for_repeats_last():
    polys = resolve_polys(LISTING1[:2])
    assert steps_for(polys, 4) == [polys[0], polys[1], polys[1], polys[1]]
    assert steps_for(polys, 1) == [polys[0]]


# -- exact polar and metrics -----------------------------------------------------

def test_polar_examples(rng):
    np.testing.assert_allclose(exact_polar(3 * np.eye(4)), np.eye(4), atol=1e-15)
    V, _ = np.linalg.qr(rng.standard_normal((2, 2)))
    np.testing.assert_allclose(exact_polar(V @ np.diag([2, -1]) @ V.T), V @ np.diag([1, -1]) @ V.T, atol=1e-14)
    P = exact_polar(rng.standard_normal((16, 8)))
    np.testing.assert_allclose(np.linalg.svd(P, compute_uv=False), 1.0, atol=1e-12)


def test_polar_zero():
    with pytest.raises(ValueError):
        exact_polar(np.zeros((2, 2)))


def test_metrics_exact_and_negated(rng):
    M = rng.standard_normal((6, 4))
    P = exact_polar(M)
    m = metrics(P, M)
    assert m["spectral_error"] == pytest.approx(0, abs=1e-14)
    assert m["frob_error"] == pytest.approx(0, abs=1e-14)
    assert m["truncated_error"] == pytest.approx(0, abs=1e-14)
    assert m["cosine_sim"] == pytest.approx(1, abs=1e-14)
    assert metrics(-P, M)["cosine_sim"] == pytest.approx(-1, abs=1e-14)


def test_truncated_error_ignores_small_directions():
    m = metrics(np.diag([1.0, 0.0]), np.diag([1.0, 1e-4]), gamma=1e-3)
    assert m["truncated_error"] == 0.0
    assert m["spectral_error"] == 1.0


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.5, 2.0])
def test_metrics_gamma_domain(gamma):
    with pytest.raises(ValueError):
        metrics(np.eye(2), np.eye(2), gamma=gamma)


# -- precision ---------------------------------------------------------------------

def test_round_bf16_matches_reference():
    ml_dtypes = pytest.importorskip("ml_dtypes")
    rng = np.random.default_rng(3)
    x = (rng.standard_normal(200_000) * 10.0 ** rng.integers(-30, 30, 200_000)).astype(np.float32)
    ref = x.astype(ml_dtypes.bfloat16).astype(np.float32)
    np.testing.assert_array_equal(round_bf16(x), ref)


def test_round_bf16_ties_to_even():
    # 1 + 2^-8 is halfway between 1 and 1 + 2^-7; even mantissa wins
    assert round_bf16(np.float32(1 + 2**-8)) == 1.0
    assert round_bf16(np.float32(1 + 3 * 2**-8)) == np.float32(1 + 2**-6)
    assert np.isnan(round_bf16(np.float32(np.nan)))


def test_arith_counts_madds():
    ar = Arith("binary64")
    ar.mm(np.ones((4, 3)), np.ones((3, 5)))
    assert ar.madds == 60


def test_bf16_values_are_representable(rng):
    out = apply_schedule(rng.standard_normal((16, 8)), "polarexpress", precision="bf16")
    np.testing.assert_array_equal(round_bf16(out.astype(np.float32)), out.astype(np.float32))


def test_unknown_precision():
    with pytest.raises(ValueError):
        Arith("fp8")


# -- buffers, files, registry --------------------------------------------------------

def test_matrix_buffer_validation():
    with pytest.raises(ValueError):
        MatrixBuffer(np.array([[1.0, np.inf]]))
    with pytest.raises(ValueError):
        MatrixBuffer(np.zeros((2, 2, 2)))
    b = MatrixBuffer([[1, 2], [3, 4]], "bf16")
    assert (b.rows, b.cols, b.precision) == (2, 2, "bfloat16")


def test_matrix_file_round_trip(tmp_path, rng):
    M = rng.standard_normal((3, 5))
    write_matrix(tmp_path / "m.pxm", M)
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.pxm").data, M)
    (tmp_path / "m.csv").write_text("1,2\n3,4\n")
    np.testing.assert_array_equal(read_matrix(tmp_path / "m.csv").data, [[1, 2], [3, 4]])


@pytest.mark.parametrize("text", ["PXM1 2 2\n1 2 3\n", "PXM1 2\n1 2\n", "1,x\n", ""])
def test_matrix_file_errors(tmp_path, text):
    (tmp_path / "bad").write_text(text)
    with pytest.raises(MatrixFormatError):
        read_matrix(tmp_path / "bad")


def test_registry(tmp_path):
    assert {"newton_schulz_3", "newton_schulz_5", "jordan", "polarexpress"} <= set(BASELINES.names())
    assert BASELINES.get("jordan")[0].coeffs == (3.4445, -4.7750, 2.0315)
    reg = BaselineRegistry()
    save_schedule(build_schedule(0.01, 3), tmp_path / "s.json")
    reg.load("mine", tmp_path / "s.json")
    assert len(reg.get("mine")) == 3
    with pytest.raises(KeyError, match="mine"):
        reg.get("theirs")
    assert len(resolve_polys(str(tmp_path / "s.json"))) == 3
