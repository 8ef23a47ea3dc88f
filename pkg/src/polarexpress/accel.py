"""Cheaper ways to run a polynomial iteration.

``fast_apply`` handles tall matrices with only two rectangular products per
restart segment by tracking ``Q_t = q_t(X)`` with ``(p_t o ... o p_1)(x) =
x q_t(x)``. ``spectrum_aware_init`` spends one cubic step to lift the tail of
the spectrum when one singular value dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import Arith, NonFiniteError, PolyLike, _as_array, poly_step
from .minimax import OddPolynomial

INIT_Z_MARGIN_LO = 1e-3
INIT_Z_MARGIN_HI = 1e-6


@dataclass(frozen=True)
class FastApplyConfig:
    restart_interval: float = math.inf
    first_pass_regularization: float = 1e-3
    auto: bool = False  # fall back to the naive path when should_use_fast says no

    def __post_init__(self):
        if not self.restart_interval >= 1:
            raise ValueError(f"restart_interval must be >= 1, got {self.restart_interval}")


@dataclass(frozen=True)
class PowerEstimate:
    z: float
    iters: int


def should_use_fast(aspect: float, T: int) -> bool:
    """Fast path pays off when ``aspect > 1.5 T / (T - 1)``."""
    if T < 2:
        return False
    return aspect > 1.5 * T / (T - 1)


def _coeffs(p) -> tuple:
    return p.coeffs if isinstance(p, OddPolynomial) else tuple(float(c) for c in p)


def _h(R, coeffs, ar: Arith):
    # h(R) = c0 I + R (c1 I + R (c2 I + ...)), deg(h) - 1 products
    n = R.shape[0]
    if len(coeffs) == 1:
        return ar.eye(n, coeffs[0])
    H = ar.scale(coeffs[-1], R)
    for c in reversed(coeffs[1:-1]):
        H = ar.mm(R, ar.add_diag(H, c))
    return ar.add_diag(H, coeffs[0])


def fast_apply(
    X,
    polys: Sequence[PolyLike],
    cfg: FastApplyConfig = FastApplyConfig(),
    precision: str = "binary64",
    arith: Optional[Arith] = None,
) -> np.ndarray:
    """``(p_T o ... o p_1)(X)`` via the rectangular fast iteration.

    Per segment: ``Y = X^T X`` once, then ``R_t = Q^T Y Q`` and
    ``Q <- Q h_t(R_t)`` on ``n x n`` matrices, then ``X <- X Q``. A new
    segment starts every ``cfg.restart_interval`` steps; only the first
    segment adds ``first_pass_regularization * I`` to ``Y``. Wide inputs are
    handled through the transpose. No normalization is applied here.
    """
    ar = arith if arith is not None else Arith(precision)
    X = ar.cast(_as_array(X))
    if X.shape[0] < X.shape[1]:
        return fast_apply(X.T, polys, cfg, arith=ar).T
    polys = [_coeffs(p) for p in polys]
    if cfg.auto and not should_use_fast(X.shape[0] / X.shape[1], len(polys)):
        for t, p in enumerate(polys, start=1):
            X = poly_step(X, p, side="right", iteration=t, arith=ar)
        return np.asarray(X)

    n = X.shape[1]
    seg = len(polys) if math.isinf(cfg.restart_interval) else int(cfg.restart_interval)
    seg = max(seg, 1)
    for start in range(0, len(polys), seg):
        Y = ar.mm(X.T, X)
        if start == 0 and cfg.first_pass_regularization:
            Y = ar.add_diag(Y, cfg.first_pass_regularization)
        Q = ar.eye(n)
        for t, p in enumerate(polys[start:start + seg], start=start + 1):
            R = ar.mm(Q.T, ar.mm(Y, Q))
            Q = ar.mm(Q, _h(R, p, ar))
            if not np.all(np.isfinite(Q)):
                raise NonFiniteError(
                    f"non-finite entries in Q at iteration {t}; "
                    f"try a smaller restart_interval (currently {cfg.restart_interval})"
                )
        X = ar.mm(X, Q)
        if not np.all(np.isfinite(X)):
            raise NonFiniteError(f"non-finite output after iteration {min(start + seg, len(polys))}")
    return np.asarray(X)


def naive_apply(X, polys: Sequence[PolyLike], precision: str = "binary64", arith: Optional[Arith] = None):
    """Reference path: one Gram-matrix Horner step per polynomial, no normalization."""
    ar = arith if arith is not None else Arith(precision)
    X = ar.cast(_as_array(X))
    for t, p in enumerate(polys, start=1):
        X = poly_step(X, p, iteration=t, arith=ar)
    return np.asarray(X)


def fast_cost(n: int, aspect: float, d: int, T: int) -> float:
    """Multiply-adds of one fast segment: ``((d+3)/2 T + 2 aspect) n^3``."""
    return ((d + 3) / 2 * T + 2 * aspect) * n**3


def naive_cost(n: int, aspect: float, d: int, T: int) -> float:
    """Multiply-adds of ``T`` naive steps: ``((d-3)/2 + 2 aspect) T n^3``."""
    return ((d - 3) / 2 + 2 * aspect) * T * n**3


def power_lower_bound(M, iters: int = 20, seed: int = 0) -> PowerEstimate:
    """Lower bound ``z = ||M v||`` on ``sigma_1`` after ``iters`` power steps on ``M^T M``.

    ``M`` is expected to have unit Frobenius norm, so ``z <= 1``.
    """
    A = np.asarray(_as_array(M), dtype=np.float64)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
    z = float(np.linalg.norm(A @ v))
    return PowerEstimate(min(z, 1.0), iters)


def init_cubic(z: float) -> OddPolynomial:
    """Odd cubic with ``p(sqrt(1 - z^2)) = 1`` and ``p(z) = 1``."""
    w = math.sqrt(1 - z * z)
    den = z * w * (2 * z * z - 1)
    a = (z * z * (z + w) - w) / den
    b = (w - z) / den
    return OddPolynomial((a, b))


def init_admissible(z: float, lo_margin: float = INIT_Z_MARGIN_LO, hi_margin: float = INIT_Z_MARGIN_HI) -> bool:
    return 1 / math.sqrt(2) + lo_margin <= z <= 1 - hi_margin


def spectrum_aware_init(M, z: float, precision: str = "binary64"):
    """One cubic step that maps ``sigma_1 in [z, 1]`` into ``[p(1), 1]`` and
    stretches the tail ``<= sqrt(1 - z^2)`` by at least ``1/sqrt(1 - z^2)``.

    ``M`` must have unit Frobenius norm. Returns ``(p, p(M))``, or ``None``
    when ``z`` is outside the admissible band and the caller should fall back
    to the plain schedule.
    """
    if not init_admissible(z):
        return None
    p = init_cubic(z)
    return p, np.asarray(poly_step(M, p, precision), dtype=np.float64)


def lifted_lower_bound(l: float, z: float) -> float:
    """Lower bound on the tail after ``init_cubic(z)``: ``min(l / sqrt(1 - z^2), 1)``."""
    return min(l / math.sqrt(1 - z * z), 1.0)


def init_then_schedule(M, l: float, T: int, z: Optional[float] = None, precision: str = "binary64", **schedule_kw):
    """Spectrum-aware init followed by ``T`` steps of a schedule built on the lifted interval.

    ``M`` must have unit Frobenius norm and ``l`` bound its smallest singular
    value. Falls back to a plain schedule from ``l`` when ``z`` is inadmissible.
    Returns ``(output, schedule, used_init)``.
    """
    from .engine import apply_schedule
    from .schedule import build_schedule

    if z is None:
        z = power_lower_bound(M).z
    init = spectrum_aware_init(M, z, precision)
    if init is None:
        s = build_schedule(l, T, **schedule_kw)
        return apply_schedule(M, s, T, precision, normalization="none"), s, False
    _, X = init
    s = build_schedule(lifted_lower_bound(l, z), T, **schedule_kw)
    return apply_schedule(X, s, T, precision, normalization="none"), s, True
