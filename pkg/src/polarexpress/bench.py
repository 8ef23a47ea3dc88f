"""Synthetic test matrices and convergence comparisons."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .engine import (
    BASELINES,
    BaselineRegistry,
    ConvergenceReport,
    IterationRecord,
    MatrixBuffer,
    exact_polar,
    iterate,
    metrics,
    read_matrix,
    truncated_polar,
)
from .minimax import OddPolynomial
from .schedule import DEFAULT_CUSHION, build_schedule, load_schedule

CSV_HEADER = ["method", "iter", "spectral_error", "frob_error", "cosine_sim", "truncated_error", "seconds"]


@dataclass(frozen=True)
class SpectrumSpec:
    """``kind`` is ``log`` (``lo``..``hi`` log-spaced), ``pow``
    (``sigma_j = j**-exponent``) or ``explicit`` (``values``)."""

    kind: str
    n: int
    m: Optional[int] = None
    lo: float = 1e-6
    hi: float = 1.0
    exponent: float = 5.0
    values: tuple = ()
    seed: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.n, self.m if self.m is not None else self.n

    def singular_values(self) -> np.ndarray:
        k = min(self.shape)
        if self.kind == "log":
            if not (0 < self.lo <= self.hi):
                raise ValueError(f"need 0 < min <= max, got {self.lo}, {self.hi}")
            s = np.logspace(np.log10(self.hi), np.log10(self.lo), k)
            s[0], s[-1] = self.hi, self.lo
        elif self.kind == "pow":
            s = np.arange(1, k + 1, dtype=np.float64) ** -self.exponent
        elif self.kind == "explicit":
            s = np.sort(np.asarray(self.values, dtype=np.float64))[::-1]
            if s.size != k:
                raise ValueError(f"need {k} singular values for shape {self.shape}, got {s.size}")
        else:
            raise ValueError(f"unknown spectrum kind {self.kind!r}")
        if np.any(s <= 0):
            raise ValueError("singular values must be positive")
        return s


def parse_spectrum(text: str, seed: int = 0):
    """``log:<min>:<max>:<n>[x<m>]``, ``pow:<exp>:<n>[x<m>]`` or ``file:<path>``.

    Returns a SpectrumSpec, or a MatrixBuffer for ``file:``.
    """
    kind, _, rest = text.partition(":")
    try:
        if kind == "file":
            return read_matrix(rest)
        parts = rest.split(":")
        dims = parts[-1].lower().split("x")
        n = int(dims[0])
        m = int(dims[1]) if len(dims) > 1 else None
        if kind == "log" and len(parts) == 3:
            return SpectrumSpec("log", n, m, lo=float(parts[0]), hi=float(parts[1]), seed=seed)
        if kind == "pow" and len(parts) == 2:
            return SpectrumSpec("pow", n, m, exponent=float(parts[0]), seed=seed)
    except (ValueError, IndexError) as e:
        raise ValueError(f"bad spectrum spec {text!r}: {e}") from None
    raise ValueError(
        f"bad spectrum spec {text!r}; expected log:<min>:<max>:<n>[x<m>], pow:<exp>:<n>[x<m>] or file:<path>"
    )


def random_orthogonal(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """``n x k`` matrix with orthonormal columns, Haar distributed."""
    Q, R = np.linalg.qr(rng.standard_normal((n, k)))
    return Q * np.sign(np.diag(R))


def gen_matrix(spec: SpectrumSpec) -> np.ndarray:
    """``U diag(sigma) V^T`` with seeded random orthogonal factors."""
    rows, cols = spec.shape
    s = spec.singular_values()
    rng = np.random.default_rng(spec.seed)
    U = random_orthogonal(rng, rows, s.size)
    V = random_orthogonal(rng, cols, s.size)
    return (U * s) @ V.T


def resolve_method(name: str, T_max: int, registry: Optional[BaselineRegistry] = None) -> list[OddPolynomial]:
    """Baseline name, ``polarexpress:<l>[:<safety>]`` or a schedule file path.

    ``polarexpress:<l>`` builds a fresh degree-5 schedule of length ``T_max``
    from ``[l, 1]`` with the default cushion and no safety factor.
    """
    reg = registry or BASELINES
    if name in reg:
        return reg.get(name)
    head, _, rest = name.partition(":")
    if head == "polarexpress" and rest:
        parts = rest.split(":")
        l = float(parts[0])
        safety = float(parts[1]) if len(parts) > 1 else 1.0
        return list(build_schedule(l, T_max, 5, DEFAULT_CUSHION, safety).polys)
    path = Path(rest if head == "file" else name)
    if path.is_file():
        return list(load_schedule(path).polys)
    return reg.get(name)  # raises, listing the available names


def run_convergence(
    M,
    methods: Sequence[str],
    T_max: int,
    precision: str = "binary64",
    gamma: float = 1e-3,
    normalization: str = "frobenius",
    registry: Optional[BaselineRegistry] = None,
    parallel: bool = False,
    timing: bool = True,
) -> list[ConvergenceReport]:
    """Run each method for ``T_max`` steps, scoring every iterate against the
    SVD polar factor of ``M`` (row 0 is the normalized input)."""
    A = np.asarray(M.data if isinstance(M, MatrixBuffer) else M, dtype=np.float64)
    P = exact_polar(A)
    trunc = truncated_polar(A, gamma)
    resolved = [(name, resolve_method(name, T_max, registry)) for name in methods]

    def run_one(item):
        name, polys = item
        report = ConvergenceReport(name)
        it = iterate(A, polys, T_max, precision, normalization)
        for t in range(T_max + 1):
            t0 = time.perf_counter()
            X = next(it)
            dt = time.perf_counter() - t0 if timing else 0.0
            report.records.append(IterationRecord(t, **metrics(X, A, gamma, P, trunc), seconds=dt))
        return report

    if parallel:
        with ThreadPoolExecutor() as ex:
            return list(ex.map(run_one, resolved))
    return [run_one(item) for item in resolved]


def write_csv(reports: Sequence[ConvergenceReport], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rep in reports:
            for r in rep.records:
                w.writerow([
                    rep.method, r.iter,
                    format(r.spectral_error, ".17g"), format(r.frob_error, ".17g"),
                    format(r.cosine_sim, ".17g"), format(r.truncated_error, ".17g"),
                    format(r.seconds, ".6g"),
                ])
