"""Running Shiryaev-Roberts statistics and the e-values built from them.

The statistic follows the recursion

    S_{k,t} = L_{k,t} (1 + S_{k,t-1})   if k is active at t
    S_{k,t} = S_{k,t-1}                 otherwise,

with ``S_{k,0} = 0``, and the e-value is ``E_{k,t} = S_{k,t} / t`` on the
global clock.

The ``"literal"`` convention instead evaluates the sum over start times with
empty products equal to 1, so an inactive tick adds 1 to ``S``.  A sensor first
activated at ``t0`` then enters with ``S = t0 - 1`` and its first e-value is
just its likelihood ratio.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import MissingHistory, MissingLr, NegativeLr, NonContiguousTime
from .types import ActiveSetLedger

CONVENTIONS = ("recursion", "literal")


@dataclass(frozen=True)
class SensorState:
    sensor: int
    s_value: float
    last_updated: int
    activation_time: int  # 0 if never active


@dataclass(frozen=True)
class EValueVector:
    t: int
    ids: np.ndarray
    values: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(v) for k, v in zip(self.ids, self.values)}

    def __len__(self):
        return self.ids.size


class EValueEngine:
    """Per-sensor ``S`` table for one run.  Not thread-safe; one engine per run."""

    def __init__(self, capacity: int = 0, convention: str = "recursion"):
        if convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        self.convention = convention
        self.t = 0
        self._s = np.zeros(capacity + 1)
        self._first = np.zeros(capacity + 1, dtype=np.int64)
        self._last = np.zeros(capacity + 1, dtype=np.int64)

    def _grow(self, max_id: int):
        if max_id >= self._s.size:
            n = max(max_id + 1, 2 * self._s.size)
            self._s = np.concatenate([self._s, np.zeros(n - self._s.size)])
            self._first = np.concatenate([self._first, np.zeros(n - self._first.size, dtype=np.int64)])
            self._last = np.concatenate([self._last, np.zeros(n - self._last.size, dtype=np.int64)])

    def s_values(self, ids) -> np.ndarray:
        """Current ``S_{k,t}`` for each id."""
        ids = np.asarray(ids, dtype=np.int64)
        out = np.zeros(ids.size)
        last = np.zeros(ids.size, dtype=np.int64)
        known = ids < self._s.size
        out[known] = self._s[ids[known]]
        last[known] = self._last[ids[known]]
        if self.convention == "literal":
            out += self.t - last
        return out

    def scale(self, ids, t: int) -> np.ndarray:
        """``c = (1 + S_{k,t-1}) / t`` so that ``E_{k,t} = c * L_{k,t}`` for active sensors."""
        if t != self.t + 1:
            raise NonContiguousTime(f"scale is defined for the next tick {self.t + 1}, got {t}")
        return (1.0 + self.s_values(ids)) / t

    def tick(self, t: int, active: Sequence[int], lr) -> EValueVector:
        """Advance one tick.  ``lr`` is a mapping id -> LR or an array aligned with ``active``."""
        if t != self.t + 1:
            raise NonContiguousTime(f"expected tick {self.t + 1}, got {t}")
        ids = np.asarray(list(active) if not isinstance(active, np.ndarray) else active, dtype=np.int64)
        if isinstance(lr, Mapping):
            missing = [int(k) for k in ids if int(k) not in lr]
            if missing:
                raise MissingLr(f"no likelihood ratio for sensors {missing}")
            vals = np.array([lr[int(k)] for k in ids], dtype=float)
        else:
            vals = np.asarray(lr, dtype=float)
            if vals.shape != ids.shape:
                raise MissingLr(f"{vals.size} likelihood ratios for {ids.size} active sensors")
        if np.any(vals < 0) or np.any(np.isnan(vals)):
            raise NegativeLr("likelihood ratios must be nonnegative")
        if ids.size:
            if ids.min() < 1:
                raise ValueError("sensor ids are positive integers")
            self._grow(int(ids.max()))
            prev = self._s[ids]
            if self.convention == "literal":
                prev = prev + (t - 1 - self._last[ids])
            self._s[ids] = vals * (1.0 + prev)
            self._last[ids] = t
            fresh = self._first[ids] == 0
            self._first[ids[fresh]] = t
        self.t = t
        return EValueVector(t, ids, self._s[ids] / t)

    def state(self, k: int) -> SensorState:
        s = float(self.s_values([k])[0])
        first = int(self._first[k]) if k < self._first.size else 0
        return SensorState(k, s, self.t, first)

    # serialization for resumable streaming

    def to_dict(self) -> dict:
        seen = np.flatnonzero(self._first)
        return {
            "t": self.t,
            "convention": self.convention,
            "ids": seen.tolist(),
            "s": self._s[seen].tolist(),
            "first": self._first[seen].tolist(),
            "last": self._last[seen].tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EValueEngine":
        ids = np.asarray(d["ids"], dtype=np.int64)
        eng = cls(int(ids.max()) if ids.size else 0, d.get("convention", "recursion"))
        eng._s[ids] = np.asarray(d["s"], dtype=float)
        eng._first[ids] = np.asarray(d["first"], dtype=np.int64)
        eng._last[ids] = np.asarray(d.get("last", d["first"]), dtype=np.int64)
        eng.t = int(d["t"])
        return eng


def evalue_direct(lrs: Mapping[int, float], ledger: ActiveSetLedger, k: int, t: int,
                  convention: str = "recursion") -> float:
    """Closed-form e-value of sensor ``k`` at time ``t``; a test oracle for ``EValueEngine``.

    ``lrs`` maps each time at which ``k`` was active to its likelihood ratio.
    The sum runs over start times ``s``, each term being the product of the
    LRs at active times in ``[s, t]``.  Only start times at which ``k`` was
    active contribute; an inactive start time adds 0, matching the recursion.
    """
    active = ledger.active_times(k, t)
    missing = [s for s in active if s not in lrs]
    if missing:
        raise MissingHistory(f"no LR for sensor {k} at times {missing}")
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    starts = active if convention == "recursion" else range(1, t + 1)
    total = 0.0
    for s in starts:
        total += float(np.prod([lrs[i] for i in active if i >= s]))
    return total / t
