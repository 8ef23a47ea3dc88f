"""Single-interval minimax approximation of the constant 1 by odd polynomials.

For an interval ``[l, u]`` with ``0 < l <= u`` we want the odd polynomial ``p``
of degree ``d`` minimizing ``max_{x in [l, u]} |1 - p(x)|``. Degree 3 has a
closed form; degree 5 is solved with a four-point Remez exchange whose interior
points are the critical points of ``p`` (a quadratic in ``x**2``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

EPS_DOUBLE = 1.11e-16
# |E| jitters by a few ulps once converged; a one-ulp stopping rule can stall
REMEZ_TOL = 1e-15
PADE_THRESHOLD = 5e-6
REMEZ_MAX_ITER = 50

PADE_QUINTIC = (15 / 8, -10 / 8, 3 / 8)
NEWTON_SCHULZ_CUBIC = (1.5, -0.5)


class RemezConvergenceError(RuntimeError):
    """Raised when the Remez exchange does not settle within its iteration cap."""


@dataclass(frozen=True)
class OddPolynomial:
    """``p(x) = c[0] x + c[1] x**3 + ... + c[q] x**(2q+1)``."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        coeffs = tuple(float(c) for c in coeffs)
        if not coeffs:
            raise ValueError("an odd polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return 2 * len(self.coeffs) - 1

    def __call__(self, x):
        return eval_poly(self, x)

    def __iter__(self):
        return iter(self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, i):
        return self.coeffs[i]

    def scaled_input(self, s: float) -> "OddPolynomial":
        """Return ``x -> p(x / s)``."""
        return OddPolynomial([c / s ** (2 * k + 1) for k, c in enumerate(self.coeffs)])

    def scaled_output(self, s: float) -> "OddPolynomial":
        """Return ``x -> s * p(x)``."""
        return OddPolynomial([s * c for c in self.coeffs])

    def derivative_roots(self) -> list[float]:
        """Positive real critical points of ``p`` (degree <= 5 only), ascending."""
        return _positive_critical_points(self.coeffs)


@dataclass(frozen=True)
class EquioscillationCertificate:
    points: tuple[float, ...]
    amplitude: float
    sign: int  # sign of 1 - p(points[0])


def eval_poly(p, x):
    """Evaluate an odd polynomial as ``x * h(x**2)`` with ``h`` in Horner form.

    Works on scalars and numpy arrays alike.
    """
    coeffs = p.coeffs if isinstance(p, OddPolynomial) else tuple(p)
    y = x * x
    h = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        h = h * y + c
    return x * h


def _check_interval(l, u, allow_zero=False):
    if not (math.isfinite(l) and math.isfinite(u)):
        raise ValueError(f"interval endpoints must be finite, got [{l}, {u}]")
    if (l < 0 if allow_zero else l <= 0) or l > u:
        raise ValueError(f"need 0 < l <= u, got l={l}, u={u}")


def optimal_cubic(l: float, u: float) -> OddPolynomial:
    """Minimax odd cubic for the constant 1 on ``[l, u]``.

    It is a rescaled Newton-Schulz cubic ``beta * p_ns(alpha * x)`` whose error
    equioscillates at ``l``, ``1/alpha`` and ``u`` with amplitude ``beta - 1``.
    ``l = 0`` is accepted and gives the degenerate solution with error 1.
    """
    _check_interval(l, u, allow_zero=True)
    alpha = math.sqrt(3.0 / (u * u + l * u + l * l))
    beta = 4.0 / (2.0 + l * u * (l + u) * alpha**3)
    return OddPolynomial((beta * 1.5 * alpha, -beta * 0.5 * alpha**3))


def pade_quintic(u: float = 1.0) -> OddPolynomial:
    a, b, c = PADE_QUINTIC
    return OddPolynomial((a / u, b / u**3, c / u**5))


def _quintic_critical_points(a, b, c):
    # roots of 5c y^2 + 3b y + a = 0 with y = x^2
    disc = 9 * b * b - 20 * a * c
    if c == 0 or disc < 0:
        return None
    s = math.sqrt(disc)
    y1 = (-3 * b - s) / (10 * c)
    y2 = (-3 * b + s) / (10 * c)
    if y1 < 0 or y2 < 0:
        return None
    return math.sqrt(y1), math.sqrt(y2)


def remez_quintic(
    l: float,
    u: float,
    *,
    pade_threshold: float = PADE_THRESHOLD,
    tol: float = REMEZ_TOL,
    max_iter: int = REMEZ_MAX_ITER,
    return_iterations: bool = False,
):
    """Minimax odd quintic for the constant 1 on ``[l, u]``.

    Returns ``(poly, certificate)``, plus the number of exchange steps when
    ``return_iterations`` is set. Near-degenerate intervals
    (``l / u >= 1 - pade_threshold``) return the Padé polynomial scaled to
    ``u``; its certificate then only records the error at the endpoints.
    """
    _check_interval(l, u)
    if l == u or l / u >= 1 - pade_threshold:
        p = pade_quintic(u)
        err = 1 - float(eval_poly(p, l))
        cert = EquioscillationCertificate((l, u), abs(err), 1 if err >= 0 else -1)
        return (p, cert, 0) if return_iterations else (p, cert)
    if u != 1.0:
        # solve on [l/u, 1] and rescale: exact scale covariance, and the
        # conditioning of the 4x4 system no longer depends on u
        p, cert, k = remez_quintic(
            l / u, 1.0, pade_threshold=pade_threshold, tol=tol, max_iter=max_iter, return_iterations=True
        )
        pts = (l, *(x * u for x in cert.points[1:-1]), u)
        cert = EquioscillationCertificate(pts, cert.amplitude, cert.sign)
        p = p.scaled_input(u)
        return (p, cert, k) if return_iterations else (p, cert)

    q = (3 * l + u) / 4
    r = (l + 3 * u) / 4
    E, old_E = math.inf, None
    rhs = np.ones(4)
    k = 0
    while old_E is None or abs(abs(E) - abs(old_E)) > tol:
        if k >= max_iter:
            raise RemezConvergenceError(
                f"Remez did not converge on [{l}, {u}] after {max_iter} iterations "
                f"(|E| change {abs(abs(E) - abs(old_E)):.3e})"
            )
        k += 1
        old_E = E
        lhs = np.array(
            [
                [l, l**3, l**5, 1.0],
                [q, q**3, q**5, -1.0],
                [r, r**3, r**5, 1.0],
                [u, u**3, u**5, -1.0],
            ]
        )
        a, b, c, E = (float(v) for v in np.linalg.solve(lhs, rhs))
        crit = _quintic_critical_points(a, b, c)
        if crit is None:
            raise RemezConvergenceError(
                f"Remez iterate on [{l}, {u}] has no real interior extrema"
            )
        q, r = crit
    p = OddPolynomial((a, b, c))
    cert = EquioscillationCertificate((l, q, r, u), abs(E), 1 if E >= 0 else -1)
    return (p, cert, k) if return_iterations else (p, cert)


def minimax_odd(l: float, u: float, degree: int) -> OddPolynomial:
    """Dispatch on degree (3 or 5)."""
    if degree == 3:
        return optimal_cubic(l, u)
    if degree == 5:
        return remez_quintic(l, u)[0]
    raise ValueError(f"only degrees 3 and 5 are supported, got {degree}")


def _positive_critical_points(coeffs) -> list[float]:
    if len(coeffs) == 1:
        return []
    if len(coeffs) == 2:
        a, b = coeffs
        if b == 0 or -a / (3 * b) < 0:
            return []
        return [math.sqrt(-a / (3 * b))]
    if len(coeffs) == 3:
        a, b, c = coeffs
        if c == 0:
            return _positive_critical_points((a, b))
        disc = 9 * b * b - 20 * a * c
        if disc < 0:
            return []
        s = math.sqrt(disc)
        ys = sorted({(-3 * b - s) / (10 * c), (-3 * b + s) / (10 * c)})
        return [math.sqrt(y) for y in ys if y > 0]
    raise ValueError("critical points are only available up to degree 5")


def verify_equioscillation(
    p, l: float, u: float, tol: float = 1e-10
) -> Optional[EquioscillationCertificate]:
    """Certify that ``p`` is the minimax odd polynomial for 1 on ``[l, u]``.

    All extrema of ``1 - p`` on the interval (endpoints and interior critical
    points) are collected; the certificate holds when there are exactly
    ``q + 2`` of them, they alternate in sign and their magnitudes agree within
    ``tol``. Returns ``None`` when certification fails.
    """
    p = p if isinstance(p, OddPolynomial) else OddPolynomial(p)
    if p.degree not in (3, 5):
        raise ValueError(f"certification needs degree 3 or 5, got {p.degree}")
    need = (p.degree + 1) // 2 + 1
    interior = [x for x in p.derivative_roots() if l < x < u]
    pts = [l, *interior, u]
    # merge critical points that coincide with an endpoint up to rounding
    pts = [x for i, x in enumerate(pts) if i == 0 or x - pts[i - 1] > 1e-14 * u]
    if len(pts) != need:
        return None
    errs = [1.0 - float(eval_poly(p, x)) for x in pts]
    if any(e == 0 for e in errs):
        return None
    if any(errs[i] * errs[i + 1] >= 0 for i in range(len(errs) - 1)):
        return None
    mags = [abs(e) for e in errs]
    if max(mags) - min(mags) > tol:
        return None
    return EquioscillationCertificate(
        tuple(pts), float(np.mean(mags)), 1 if errs[0] > 0 else -1
    )


def grid_max_error(p, l: float, u: float, n: int = 10**6) -> float:
    """Max of ``|1 - p(x)|`` over ``n`` uniform points of ``[l, u]``."""
    xs = np.linspace(l, u, n)
    return float(np.max(np.abs(1.0 - eval_poly(p, xs))))
