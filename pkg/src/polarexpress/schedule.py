"""Greedy composition of per-step minimax polynomials into a schedule.

The offline stage: starting from ``[l_init, 1]``, pick the minimax odd
polynomial for the current interval, map the interval through it
(``lo' = p(lo)``, ``hi' = 2 - lo'``) and repeat. Cushioning and a safety factor
trade a little optimality for stability in low precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from .minimax import (
    PADE_THRESHOLD,
    RemezConvergenceError,
    OddPolynomial,
    eval_poly,
    grid_max_error,
    optimal_cubic,
    remez_quintic,
)

DEFAULT_CUSHION = 0.02407327424182761
DEFAULT_SAFETY = 1.01
FIXED_POINT_TOL = 8 * 2.0**-53
SCHEDULE_FORMAT_VERSION = 1

PADE_FALLBACK_TOL = 1e-12

PADE = {3: (1.5, -0.5), 5: (15 / 8, -10 / 8, 3 / 8)}


class ScheduleFormatError(ValueError):
    """A schedule file could not be parsed or failed validation."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 < self.lo <= self.hi):
            raise ValueError(f"need 0 < lo <= hi, got [{self.lo}, {self.hi}]")

    def __iter__(self):
        return iter((self.lo, self.hi))


@dataclass(frozen=True)
class ScheduleParams:
    l_init: float
    cushion: float = DEFAULT_CUSHION
    safety: float = DEFAULT_SAFETY
    safety_on_last: bool = False


@dataclass(frozen=True)
class Schedule:
    """Polynomials ``p_1..p_T`` (post-safety), their pre-safety versions and the
    interval trace ``[l_1, u_1] .. [l_{T+1}, u_{T+1}]``."""

    polys: tuple[OddPolynomial, ...]
    pre_safety_polys: tuple[OddPolynomial, ...]
    intervals: tuple[Interval, ...]
    degrees: tuple[int, ...]
    params: ScheduleParams = field(default_factory=lambda: ScheduleParams(1e-3))

    def __post_init__(self):
        if len(self.intervals) != len(self.polys) + 1:
            raise ValueError(
                f"need len(intervals) == len(polys) + 1, got "
                f"{len(self.intervals)} and {len(self.polys)}"
            )
        if len(self.pre_safety_polys) != len(self.polys):
            raise ValueError("pre_safety_polys and polys differ in length")
        if len(self.degrees) != len(self.polys):
            raise ValueError("degrees and polys differ in length")

    def __len__(self):
        return len(self.polys)

    @property
    def T(self) -> int:
        return len(self.polys)

    @property
    def degree(self) -> Union[int, tuple[int, ...]]:
        """Uniform degree, or the per-step tuple for a mixed schedule."""
        if len(set(self.degrees)) == 1:
            return self.degrees[0]
        if not self.degrees:
            return 5
        return self.degrees

    def coeffs(self) -> list[tuple[float, ...]]:
        return [p.coeffs for p in self.polys]


def _minimax_step(l: float, u: float, degree: int) -> OddPolynomial:
    if degree == 3:
        return optimal_cubic(l, u)
    if degree == 5:
        # near-degenerate: Padé polynomial scaled to the interval midpoint,
        # which is exactly 1 for every interval the greedy recurrence makes
        pade = OddPolynomial(PADE[5]).scaled_input((l + u) / 2)
        if l / u >= 1 - PADE_THRESHOLD:
            return pade
        try:
            return remez_quintic(l, u)[0]
        except RemezConvergenceError:
            # just above the threshold the 4x4 system is too ill-conditioned
            # for Remez, while Padé is already accurate to working precision
            if grid_max_error(pade, l, u, 4097) <= PADE_FALLBACK_TOL:
                return pade
            raise
    raise ValueError(f"only degrees 3 and 5 are supported, got {degree}")


def _cushioned_step(l: float, u: float, d: int, cushion: float) -> OddPolynomial:
    lo = max(l, cushion * u)
    p = _minimax_step(lo, u, d)
    if lo == l:
        return p
    p = p.scaled_output(2 / (eval_poly(p, l) + eval_poly(p, u)))
    # recentring must keep p([l, u]) inside [p(l), 2 - p(l)]; a wide cushion
    # on a low-degree step can lift the interior peak past that
    top = max([float(eval_poly(p, x)) for x in p.derivative_roots() if l < x < u] + [float(eval_poly(p, u))])
    if top > 2 - float(eval_poly(p, l)) + 1e-12:
        return _minimax_step(l, u, d)
    return p


def build_schedule(
    l_init: float,
    T: int,
    degree: Union[int, Sequence[int]] = 5,
    cushion: Optional[float] = None,
    safety: float = DEFAULT_SAFETY,
    safety_on_last: bool = False,
) -> Schedule:
    """Precompute ``T`` greedy minimax polynomials starting from ``[l_init, 1]``.

    ``degree`` is 3, 5 or a per-step list of those. Step ``t`` solves the
    minimax problem on ``[max(l_t, cushion * u_t), u_t]``; when cushioning
    moved the lower endpoint the polynomial is rescaled so that
    ``1 - p(l_t) == p(u_t) - 1``. Steps where that rescaling would push the
    interior peak above ``2 - p(l_t)`` are solved without the cushion.
    ``cushion=None`` uses ``DEFAULT_CUSHION`` for quintic steps and no cushion
    for cubic ones. The interval recurrence uses these pre-safety polynomials,
    and every polynomial except (by default) the last is then replaced by
    ``x -> p(x / safety)``.
    """
    if not (0 < l_init <= 1):
        raise ValueError(f"need 0 < l_init <= 1, got {l_init}")
    if T < 0:
        raise ValueError(f"T must be non-negative, got {T}")
    if cushion is not None and not (0 <= cushion < 1):
        raise ValueError(f"cushion must lie in [0, 1), got {cushion}")
    if not safety >= 1:
        raise ValueError(f"safety must be >= 1, got {safety}")
    degrees = [degree] * T if isinstance(degree, int) else list(degree)
    if len(degrees) != T:
        raise ValueError(f"got {len(degrees)} degrees for T={T}")
    for d in degrees:
        if d not in (3, 5):
            raise ValueError(f"only degrees 3 and 5 are supported, got {d}")

    l, u = float(l_init), 1.0
    intervals = [Interval(l, u)]
    pre = []
    for d in degrees:
        if abs(l - 1) < FIXED_POINT_TOL and abs(u - 1) < FIXED_POINT_TOL:
            p = OddPolynomial(PADE[d])
        else:
            c = cushion if cushion is not None else (DEFAULT_CUSHION if d == 5 else 0.0)
            p = _cushioned_step(l, u, d, c)
        pre.append(p)
        # p(l) <= 1 exactly; rounding near the fixed point can overshoot by an ulp
        l = min(float(eval_poly(p, l)), 1.0)
        u = 2 - l
        intervals.append(Interval(l, u))

    post = []
    for t, p in enumerate(pre):
        last = t == len(pre) - 1
        post.append(p if (last and not safety_on_last) or safety == 1 else p.scaled_input(safety))

    return Schedule(
        polys=tuple(post),
        pre_safety_polys=tuple(pre),
        intervals=tuple(intervals),
        degrees=tuple(degrees),
        params=ScheduleParams(
            float(l_init),
            float(cushion) if cushion is not None else (DEFAULT_CUSHION if 5 in degrees or not degrees else 0.0),
            float(safety),
            bool(safety_on_last),
        ),
    )


def certified_error(s: Schedule) -> float:
    """Worst-case ``|1 - p(x)|`` of the composition over the starting interval."""
    return 1.0 - s.intervals[-1].lo


def scalar_compose(s: Schedule, x, *, pre_safety: bool = False):
    """Apply ``p_T o ... o p_1`` to a scalar or array."""
    for p in s.pre_safety_polys if pre_safety else s.polys:
        x = eval_poly(p, x)
    return x


def replay_intervals(polys: Sequence[Sequence[float]], l_init: float) -> list[tuple[float, float]]:
    """Interval trace obtained by running the recurrence over given polynomials."""
    l, u = float(l_init), 1.0
    out = [(l, u)]
    for p in polys:
        l = float(eval_poly(tuple(p), l))
        u = 2 - l
        out.append((l, u))
    return out


# -- serialization ---------------------------------------------------------


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    return format(x, ".17g")


def _rows(rows) -> str:
    return "[" + ", ".join("[" + ", ".join(_num(v) for v in r) + "]" for r in rows) + "]"


def dumps(s: Schedule) -> str:
    deg = s.degree
    lines = [
        "{",
        f'  "version": {SCHEDULE_FORMAT_VERSION},',
        f'  "degree": {json.dumps(list(deg) if isinstance(deg, tuple) else deg)},',
        f'  "l_init": {_num(s.params.l_init)},',
        f'  "cushion": {_num(s.params.cushion)},',
        f'  "safety": {_num(s.params.safety)},',
        f'  "safety_on_last": {json.dumps(s.params.safety_on_last)},',
        f'  "polys": {_rows(p.coeffs for p in s.polys)},',
        f'  "pre_safety_polys": {_rows(p.coeffs for p in s.pre_safety_polys)},',
        f'  "intervals": {_rows(tuple(iv) for iv in s.intervals)}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def _field(obj, name, kind):
    if name not in obj:
        raise ScheduleFormatError(f"missing field {name!r}")
    v = obj[name]
    if kind == "number":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ScheduleFormatError(f"field {name!r} must be a number, got {v!r}")
        return float(v)
    if kind == "bool":
        if not isinstance(v, bool):
            raise ScheduleFormatError(f"field {name!r} must be true/false, got {v!r}")
        return v
    if kind == "rows":
        if not isinstance(v, list):
            raise ScheduleFormatError(f"field {name!r} must be a list")
        rows = []
        for i, r in enumerate(v):
            if not isinstance(r, list) or not r or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in r
            ):
                raise ScheduleFormatError(f"field {name!r}[{i}] must be a non-empty list of numbers")
            rows.append(tuple(float(x) for x in r))
        return rows
    raise AssertionError(kind)


def loads(text: str) -> Schedule:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScheduleFormatError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(obj, dict):
        raise ScheduleFormatError("top level must be a JSON object")
    version = obj.get("version", SCHEDULE_FORMAT_VERSION)
    if version != SCHEDULE_FORMAT_VERSION:
        raise ScheduleFormatError(f"unsupported version {version!r}")
    polys = _field(obj, "polys", "rows")
    pre = _field(obj, "pre_safety_polys", "rows") if "pre_safety_polys" in obj else list(polys)
    intervals = _field(obj, "intervals", "rows")
    if len(intervals) != len(polys) + 1:
        raise ScheduleFormatError(
            f"field 'intervals' has {len(intervals)} entries, expected len(polys) + 1 = {len(polys) + 1}"
        )
    if len(pre) != len(polys):
        raise ScheduleFormatError(
            f"field 'pre_safety_polys' has {len(pre)} entries, expected {len(polys)}"
        )
    for i, iv in enumerate(intervals):
        if len(iv) != 2 or not (0 < iv[0] <= iv[1]):
            raise ScheduleFormatError(f"field 'intervals'[{i}] must be [lo, hi] with 0 < lo <= hi, got {list(iv)}")
    raw_deg = obj.get("degree")
    if isinstance(raw_deg, list):
        degrees = tuple(int(d) for d in raw_deg)
    else:
        degrees = tuple(2 * len(p) - 1 for p in polys)
    if len(degrees) != len(polys) or any(2 * len(p) - 1 != d for p, d in zip(polys, degrees)):
        raise ScheduleFormatError("field 'degree' does not match the coefficient counts in 'polys'")
    l_init = _field(obj, "l_init", "number") if "l_init" in obj else intervals[0][0]
    params = ScheduleParams(
        l_init=l_init,
        cushion=_field(obj, "cushion", "number") if "cushion" in obj else 0.0,
        safety=_field(obj, "safety", "number") if "safety" in obj else 1.0,
        safety_on_last=_field(obj, "safety_on_last", "bool") if "safety_on_last" in obj else False,
    )
    return Schedule(
        polys=tuple(OddPolynomial(p) for p in polys),
        pre_safety_polys=tuple(OddPolynomial(p) for p in pre),
        intervals=tuple(Interval(*iv) for iv in intervals),
        degrees=degrees,
        params=params,
    )


def save_schedule(s: Schedule, path) -> None:
    Path(path).write_text(dumps(s), encoding="utf-8")


def load_schedule(path) -> Schedule:
    return loads(Path(path).read_text(encoding="utf-8"))


def schedule_from_coeffs(
    coeffs: Sequence[Sequence[float]], l_init: float = 1e-3, *, pre_safety=None, **params
) -> Schedule:
    """Wrap a fixed coefficient list (e.g. a reference table) as a Schedule.

    The interval trace is replayed from ``pre_safety`` (or ``coeffs``).
    """
    pre = pre_safety if pre_safety is not None else coeffs
    trace = replay_intervals(pre, l_init)
    return Schedule(
        polys=tuple(OddPolynomial(c) for c in coeffs),
        pre_safety_polys=tuple(OddPolynomial(c) for c in pre),
        intervals=tuple(Interval(lo, hi) for lo, hi in trace),
        degrees=tuple(2 * len(c) - 1 for c in coeffs),
        params=ScheduleParams(l_init=l_init, **params),
    )
