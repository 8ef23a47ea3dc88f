"""Matrix-side application of odd polynomial schedules.

Each step evaluates ``p(X) = X h(X^T X)`` (or ``h(X X^T) X`` for wide inputs)
with ``h`` in Horner form, so only the smaller Gram matrix is ever formed.
Arithmetic runs in binary64, binary32 or an emulated bfloat16 where every
matrix product and linear combination is rounded to an 8-bit mantissa.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence, Union

import numpy as np

from .minimax import OddPolynomial
from .schedule import Schedule, build_schedule, load_schedule

PRECISIONS = ("binary64", "binary32", "bfloat16")
NORMALIZATIONS = ("frobenius", "listing2", "spectral", "none")
_ALIASES = {
    "binary64": "binary64", "float64": "binary64", "fp64": "binary64", "double": "binary64",
    "binary32": "binary32", "float32": "binary32", "fp32": "binary32", "single": "binary32",
    "bfloat16": "bfloat16", "bf16": "bfloat16", "bfloat16-emulated": "bfloat16",
}
POLAR_RTOL = 1e-13


class NonFiniteError(ArithmeticError):
    """An iterate overflowed or produced NaN."""


def canonical_precision(tag: str) -> str:
    try:
        return _ALIASES[tag.lower()]
    except KeyError:
        raise ValueError(f"unknown precision {tag!r}; choose from {', '.join(PRECISIONS)}") from None


def round_bf16(x) -> np.ndarray:
    """Round to the nearest bfloat16 (ties to even), returned as float32."""
    x = np.asarray(x, dtype=np.float32)
    bits = x.view(np.uint32)
    nan = np.isnan(x)
    bias = ((bits >> 16) & 1) + np.uint32(0x7FFF)
    out = ((bits + bias) & np.uint32(0xFFFF0000)).view(np.float32)
    if nan.any():
        out = np.where(nan, np.float32(np.nan), out)
    return out


class Arith:
    """Arithmetic in one precision; results of each primitive are rounded.

    ``madds`` counts multiply-adds of matrix products (``m*k*n`` for an
    ``m x k`` by ``k x n`` product); linear combinations are not counted.
    """

    def __init__(self, precision: str = "binary64"):
        self.precision = canonical_precision(precision)
        self.dtype = np.float64 if self.precision == "binary64" else np.float32
        self.madds = 0

    def cast(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=self.dtype)
        return round_bf16(x) if self.precision == "bfloat16" else x

    def _r(self, x):
        return round_bf16(x) if self.precision == "bfloat16" else x

    def mm(self, a, b):
        self.madds += a.shape[0] * a.shape[1] * b.shape[1]
        return self._r(a @ b)

    def scale(self, c, a):
        return self._r(self.dtype(c) * a)

    def add(self, a, b):
        return self._r(a + b)

    def add_diag(self, a, c):
        # a + c*I; rounding only touches the diagonal
        out = a.copy()
        idx = np.diag_indices_from(out)
        out[idx] = self._r(out[idx] + self.dtype(c))
        return out

    def eye(self, n, c=1.0):
        return self.cast(np.eye(n) * c)


@dataclass
class MatrixBuffer:
    """Dense real matrix with an element-precision tag."""

    data: np.ndarray
    precision: str = "binary64"

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if data.ndim == 1:
            data = data[None, :]
        if data.ndim != 2 or data.size == 0:
            raise ValueError(f"matrix must be 2-D and non-empty, got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("matrix has non-finite entries")
        self.precision = canonical_precision(self.precision)
        self.data = data

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)


def _as_array(M) -> np.ndarray:
    return M.data if isinstance(M, MatrixBuffer) else np.asarray(M)


# -- coefficient schedules ---------------------------------------------------

PolyLike = Union[OddPolynomial, Sequence[float]]


@dataclass
class BaselineRegistry:
    """Named coefficient lists; a single entry is repeated for every step."""

    entries: dict = field(default_factory=dict)

    def register(self, name: str, polys: Sequence[PolyLike]) -> None:
        polys = [p if isinstance(p, OddPolynomial) else OddPolynomial(p) for p in polys]
        if not polys:
            raise ValueError(f"baseline {name!r} has no polynomials")
        self.entries[name] = polys

    def load(self, name: str, path) -> None:
        self.register(name, load_schedule(path).polys)

    def names(self) -> list[str]:
        return sorted(self.entries)

    def __contains__(self, name):
        return name in self.entries

    def get(self, name: str) -> list[OddPolynomial]:
        try:
            return list(self.entries[name])
        except KeyError:
            raise KeyError(
                f"unknown method {name!r}; available: {', '.join(self.names())}"
            ) from None


def default_registry() -> BaselineRegistry:
    reg = BaselineRegistry()
    reg.register("newton_schulz_3", [(1.5, -0.5)])
    reg.register("newton_schulz_5", [(15 / 8, -10 / 8, 3 / 8)])
    reg.register("jordan", [(3.4445, -4.7750, 2.0315)])
    reg.register("polarexpress", build_schedule(1e-3, 8, 5).polys)
    reg.entries["ns3"] = reg.entries["newton_schulz_3"]
    reg.entries["ns5"] = reg.entries["newton_schulz_5"]
    return reg


BASELINES = default_registry()


def resolve_polys(s, registry: Optional[BaselineRegistry] = None) -> list[OddPolynomial]:
    """Schedule, registry name, schedule file path or explicit coefficient list."""
    if isinstance(s, Schedule):
        return list(s.polys)
    if isinstance(s, (str, Path)):
        reg = registry or BASELINES
        if str(s) in reg:
            return reg.get(str(s))
        if Path(s).is_file():
            return list(load_schedule(s).polys)
        return reg.get(str(s))  # raises with the list of names
    return [p if isinstance(p, OddPolynomial) else OddPolynomial(p) for p in s]


def steps_for(polys: Sequence[OddPolynomial], T: int) -> list[OddPolynomial]:
    """First ``T`` polynomials, repeating the last one past the end."""
    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    return list(polys[:T]) + [polys[-1]] * max(0, T - len(polys))


# -- core operations ---------------------------------------------------------


def normalize(M, eps_add: float = 1e-2, mode: str = "frobenius", precision: str = "binary64"):
    """Scale so the spectral norm is at most 1.

    ``frobenius``: ``M / (||M||_F + eps_add)``; ``listing2``:
    ``M / (1.01 ||M||_F + 1e-7)``; ``spectral``: ``M / sigma_max`` (exact,
    via SVD, for experiments where the spectrum bounds are known); ``none``:
    no scaling.
    """
    ar = Arith(precision)
    X = ar.cast(_as_array(M))
    if mode == "none":
        return X
    nrm = float(np.linalg.norm(X.astype(np.float64)))
    if nrm == 0:
        raise ValueError("cannot normalize the zero matrix; its polar factor is undefined")
    if mode == "frobenius":
        denom = nrm + eps_add
    elif mode == "listing2":
        denom = nrm * 1.01 + 1e-7
    elif mode == "spectral":
        denom = spectral_norm(X)
    else:
        raise ValueError(f"unknown normalization {mode!r}")
    return ar.scale(1.0 / denom, X)


def _horner_gram(G, coeffs, ar: Arith):
    # h(G) = c0 I + G (c1 I + G (c2 I + ...))
    n = G.shape[0]
    if len(coeffs) == 1:
        return ar.eye(n, coeffs[0])
    H = ar.scale(coeffs[-1], G)
    for c in reversed(coeffs[1:-1]):
        H = ar.mm(G, ar.add_diag(H, c))
    return ar.add_diag(H, coeffs[0])


def poly_step(
    X,
    p: PolyLike,
    precision: str = "binary64",
    side: str = "auto",
    iteration=None,
    arith: Optional[Arith] = None,
):
    """One Gram-matrix Horner step ``X -> p(X)``.

    ``side='right'`` forms ``X^T X`` and returns ``X h(X^T X)``; ``'left'``
    forms ``X X^T`` and returns ``h(X X^T) X``; ``'auto'`` picks the smaller.
    Passing ``arith`` overrides ``precision`` and accumulates its counter.
    """
    ar = arith if arith is not None else Arith(precision)
    X = ar.cast(_as_array(X))
    coeffs = p.coeffs if isinstance(p, OddPolynomial) else tuple(float(c) for c in p)
    if side == "auto":
        side = "right" if X.shape[0] >= X.shape[1] else "left"
    if len(coeffs) == 1:
        out = ar.scale(coeffs[0], X)
    elif side == "right":
        out = ar.mm(X, _horner_gram(ar.mm(X.T, X), coeffs, ar))
    elif side == "left":
        out = ar.mm(_horner_gram(ar.mm(X, X.T), coeffs, ar), X)
    else:
        raise ValueError(f"side must be auto, left or right, got {side!r}")
    if not np.all(np.isfinite(out)):
        where = f" at iteration {iteration}" if iteration is not None else ""
        raise NonFiniteError(f"non-finite entries{where}")
    return out


def iterate(
    M,
    s,
    T: Optional[int] = None,
    precision: str = "binary64",
    normalization: str = "frobenius",
    eps_add: float = 1e-2,
) -> Iterator[np.ndarray]:
    """Yield ``X_0`` (normalized input) through ``X_T``."""
    polys = resolve_polys(s)
    T = len(polys) if T is None else T
    X = normalize(M, eps_add, normalization, precision)
    yield X
    for t, p in enumerate(steps_for(polys, T), start=1):
        X = poly_step(X, p, precision, iteration=t)
        yield X


def apply_schedule(
    M,
    s,
    T: Optional[int] = None,
    precision: Optional[str] = None,
    normalization: str = "frobenius",
    eps_add: float = 1e-2,
) -> np.ndarray:
    """Normalize ``M`` and run ``T`` steps of schedule ``s``.

    ``s`` may be a Schedule, a baseline name, a schedule file or a list of
    coefficient tuples. ``T`` beyond the schedule length repeats the last
    polynomial. The result is returned as a float64 array.
    """
    if precision is None:
        precision = M.precision if isinstance(M, MatrixBuffer) else "binary64"
    if T is not None and T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    X = None
    for X in iterate(M, s, T, precision, normalization, eps_add):
        pass
    return np.asarray(X, dtype=np.float64)


def exact_polar(M) -> np.ndarray:
    """``U V^T`` from the SVD, dropping singular values below ``1e-13 sigma_max``."""
    A = np.asarray(_as_array(M), dtype=np.float64)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("polar factor of the zero matrix is undefined")
    k = int(np.sum(s > POLAR_RTOL * s[0]))
    return U[:, :k] @ Vt[:k]


def truncated_polar(M, gamma: float):
    """``U_1 V_1^T`` over singular values above ``gamma * sigma_max``; also
    returns ``U_1`` and ``V_1``."""
    A = np.asarray(_as_array(M), dtype=np.float64)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    k = int(np.sum(s > gamma * s[0]))
    U1, V1 = U[:, :k], Vt[:k].T
    return U1 @ V1.T, U1, V1


def spectral_norm(A) -> float:
    return float(np.linalg.norm(np.asarray(A, dtype=np.float64), 2))


def metrics(X, M, gamma: float = 1e-3, P: Optional[np.ndarray] = None, trunc=None) -> dict:
    """Errors of an approximate polar factor ``X`` of ``M``.

    ``P`` and ``trunc`` (the ``truncated_polar`` triple) can be passed in to
    avoid recomputing SVDs of ``M`` across iterations.
    """
    if not (0 < gamma < 1):
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    X = np.asarray(_as_array(X), dtype=np.float64)
    if P is None:
        P = exact_polar(M)
    if X.shape != P.shape:
        raise ValueError(f"shape mismatch: {X.shape} vs {P.shape}")
    Pg, U1, V1 = trunc if trunc is not None else truncated_polar(M, gamma)
    D = P - X
    nP, nX = np.linalg.norm(P), np.linalg.norm(X)
    cos = float(np.sum(P * X) / (nP * nX)) if nX > 0 else 0.0
    proj = U1 @ (U1.T @ X @ V1) @ V1.T
    return {
        "spectral_error": spectral_norm(D),
        "frob_error": float(np.linalg.norm(D) / nP),
        "cosine_sim": cos,
        "truncated_error": float(np.linalg.norm(Pg - proj) / np.linalg.norm(Pg)),
    }


@dataclass
class IterationRecord:
    iter: int
    spectral_error: float
    frob_error: float
    cosine_sim: float
    truncated_error: float
    seconds: float = 0.0


@dataclass
class ConvergenceReport:
    method: str
    records: list = field(default_factory=list)

    def spectral(self) -> np.ndarray:
        return np.array([r.spectral_error for r in self.records])


# -- matrix files -------------------------------------------------------------


class MatrixFormatError(ValueError):
    pass


def read_matrix(path, precision: str = "binary64") -> MatrixBuffer:
    """Read a PXM1 file or a headerless CSV (rows inferred from lines)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixFormatError(f"{path}: empty file")
    head = lines[0].split()
    try:
        if head[0] == "PXM1":
            if len(head) != 3:
                raise MatrixFormatError(f"{path}: header must be 'PXM1 <rows> <cols>'")
            rows, cols = int(head[1]), int(head[2])
            vals = np.array(" ".join(lines[1:]).split(), dtype=np.float64)
            if vals.size != rows * cols:
                raise MatrixFormatError(
                    f"{path}: expected {rows * cols} values for {rows}x{cols}, found {vals.size}"
                )
            data = vals.reshape(rows, cols)
        else:
            data = np.array([[float(v) for v in ln.replace(",", " ").split()] for ln in lines])
    except ValueError as e:
        if isinstance(e, MatrixFormatError):
            raise
        raise MatrixFormatError(f"{path}: {e}") from None
    return MatrixBuffer(data, precision)


def write_matrix(path, M) -> None:
    A = np.asarray(_as_array(M), dtype=np.float64)
    out = [f"PXM1 {A.shape[0]} {A.shape[1]}"]
    out += [" ".join(format(v, ".17g") for v in row) for row in A]
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")
