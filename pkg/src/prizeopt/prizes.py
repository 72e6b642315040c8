"""Prize schedules: non-negative, non-increasing, summing to the unit budget."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TOL = 1e-12


class PrizeValidationError(ValueError):
    pass


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PrizeSchedule:
    """Prizes ``v[0] >= v[1] >= ... >= v[n-1] >= 0`` with ``sum(v) == 1``."""

    v: np.ndarray

    def __post_init__(self):
        v = _frozen(self.v)
        object.__setattr__(self, "v", v)
        if v.ndim != 1 or v.size < 2:
            raise PrizeValidationError("a schedule needs at least two ranks")
        if not np.all(np.isfinite(v)):
            raise PrizeValidationError("prizes must be finite")
        if v[-1] < -TOL:
            raise PrizeValidationError(f"prizes must be non-negative, got v_n={float(v[-1])!r}")
        rises = np.nonzero(np.diff(v) > TOL)[0]
        if rises.size:
            r = int(rises[0]) + 1
            raise PrizeValidationError(f"prizes must be non-increasing: v_{r}={float(v[r - 1])!r} < v_{r + 1}={float(v[r])!r}")
        if abs(v.sum() - 1.0) > TOL:
            raise PrizeValidationError(f"prizes must sum to 1, got {float(v.sum())!r}")

    @property
    def n(self) -> int:
        return int(self.v.size)

    def differentials(self) -> "PrizeDifferentials":
        return differentials(self)

    def positive_count(self) -> int:
        return int(np.count_nonzero(self.v > TOL))

    def top_tie_count(self) -> int:
        """Number of ranks sharing the top prize."""
        return int(np.count_nonzero(np.abs(self.v - self.v[0]) <= TOL))

    def __eq__(self, other):
        return isinstance(other, PrizeSchedule) and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash(self.v.tobytes())


@dataclass(frozen=True, eq=False)
class PrizeDifferentials:
    """``d[r-1] = v_r - v_{r+1}`` for ``r = 1..n-1``."""

    d: np.ndarray

    def __post_init__(self):
        d = _frozen(self.d)
        object.__setattr__(self, "d", d)
        if np.any(d < -TOL):
            r = int(np.nonzero(d < -TOL)[0][0]) + 1
            raise PrizeValidationError(f"differential d_{r}={float(d[r - 1])!r} is negative")


def differentials(v: PrizeSchedule) -> PrizeDifferentials:
    return PrizeDifferentials(-np.diff(v.v))


def from_differentials(d, n: int) -> PrizeSchedule:
    """Inverse of :func:`differentials` with the bottom prize set to zero."""
    d = PrizeDifferentials(d).d
    if d.size != n - 1:
        raise PrizeValidationError(f"expected {n - 1} differentials for n={n}, got {d.size}")
    # v_r = sum_{k >= r} d_k
    v = np.append(np.cumsum(d[::-1])[::-1], 0.0)
    return PrizeSchedule(v)


def make_top_s(n: int, s: int) -> PrizeSchedule:
    """``s`` equal prizes of ``1/s`` at the top, zeros below."""
    if n < 2 or not 1 <= s <= n - 1:
        raise PrizeValidationError(f"top-s schedule needs 1 <= s <= n-1, got s={s}, n={n}")
    v = np.zeros(n)
    v[:s] = 1.0 / s
    return PrizeSchedule(v)


def make_winner_take_all(n: int) -> PrizeSchedule:
    return make_top_s(n, 1)


def make_equidistant(n: int) -> PrizeSchedule:
    """Linearly declining prizes ``2(n-r)/(n(n-1))``."""
    if n < 2:
        raise PrizeValidationError(f"n must be >= 2, got {n}")
    r = np.arange(1, n + 1)
    return PrizeSchedule(2.0 * (n - r) / (n * (n - 1)))


def make_flat(n: int) -> PrizeSchedule:
    """Everyone gets ``1/n``; no incentive at all."""
    return PrizeSchedule(np.full(n, 1.0 / n))


def parse_prizes(spec: str, n: int) -> PrizeSchedule:
    """Parse ``wta``, ``topk:<s>``, ``equidistant``, ``flat`` or a path to a JSON array."""
    text = spec.strip()
    low = text.lower()
    if low == "wta":
        return make_winner_take_all(n)
    if low == "equidistant":
        return make_equidistant(n)
    if low == "flat":
        return make_flat(n)
    if low.startswith("topk:"):
        try:
            s = int(low[5:])
        except ValueError:
            raise PrizeValidationError(f"bad top-k prize spec {spec!r}") from None
        return make_top_s(n, s)
    path = Path(text)
    if not path.is_file():
        raise PrizeValidationError(f"unknown prize spec {spec!r} (not a keyword and no such file)")
    values = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(values, list) or not all(isinstance(x, (int, float)) for x in values):
        raise PrizeValidationError(f"{path} must hold a JSON array of numbers")
    if len(values) != n:
        raise PrizeValidationError(f"{path} has {len(values)} prizes but n={n}")
    return PrizeSchedule(values)
