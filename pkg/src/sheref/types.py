"""Shared domain vocabulary: change points, the active-set ledger, run configuration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable

from .errors import CapExceeded, ConfigError, NonContiguousTime, NotPreviouslyActive

if TYPE_CHECKING:
    from .models import ModelSpec

NEVER = math.inf


@dataclass(frozen=True)
class ChangePoint:
    """Last pre-change time of a sensor.

    ``0`` means post-change from the first observation, ``math.inf`` means the
    sensor never changes.  The sensor is post-change at every ``t > value``.
    """

    value: float

    def __post_init__(self):
        v = self.value
        if v != NEVER and (v < 0 or v != int(v)):
            raise ValueError(f"change point must be 0, a positive integer or inf, got {v!r}")

    @property
    def is_finite(self) -> bool:
        return self.value != NEVER

    def is_post_change(self, t: int) -> bool:
        return t > self.value


def _as_ids(ids: Iterable[int]) -> frozenset:
    out = frozenset(int(k) for k in ids)
    if any(k < 1 for k in out):
        raise ValueError("sensor ids are positive integers")
    return out


class ActiveSetLedger:
    """Full history of active sets ``A_1, A_2, ...`` and detection sets ``D_t``.

    Time is a dense 1-based clock.  Every append re-checks ``|A_t| <= cap`` and
    every recorded detection must be a subset of the previous active set.
    """

    def __init__(self, cap: int):
        if cap < 1:
            raise ValueError("cap must be a positive integer")
        self.cap = int(cap)
        self._active: list[frozenset] = []
        self._detections: dict[int, frozenset] = {}

    @property
    def time(self) -> int:
        """Last recorded time (0 for an empty ledger)."""
        return len(self._active)

    def append_active_set(self, t: int, active: Iterable[int]) -> "ActiveSetLedger":
        if t != self.time + 1:
            raise NonContiguousTime(f"expected t={self.time + 1}, got t={t}")
        a = _as_ids(active)
        if len(a) > self.cap:
            raise CapExceeded(f"|A_{t}| = {len(a)} exceeds cap K = {self.cap}")
        self._active.append(a)
        return self

    def record_detection(self, t: int, detected: Iterable[int]) -> "ActiveSetLedger":
        d = _as_ids(detected)
        if t < 1 or t - 1 > self.time:
            raise NonContiguousTime(f"D_{t} needs A_{t - 1} to be recorded first")
        if t in self._detections:
            raise NonContiguousTime(f"D_{t} already recorded")
        prev = self._active[t - 2] if t >= 2 else frozenset()
        if not d <= prev:
            raise NotPreviouslyActive(f"D_{t} contains sensors not in A_{t - 1}: {sorted(d - prev)}")
        self._detections[t] = d
        return self

    def active_at(self, t: int) -> frozenset:
        if not 1 <= t <= self.time:
            raise KeyError(t)
        return self._active[t - 1]

    def detected_at(self, t: int) -> frozenset:
        return self._detections.get(t, frozenset())

    def active_times(self, k: int, t: int | None = None) -> list[int]:
        """The set ``C_{k,t}`` of times ``s <= t`` at which sensor ``k`` was active."""
        t = self.time if t is None else t
        return [s for s in range(1, min(t, self.time) + 1) if k in self._active[s - 1]]

    @property
    def history(self) -> list[tuple[int, frozenset]]:
        return [(s + 1, a) for s, a in enumerate(self._active)]

    @property
    def detections(self) -> list[tuple[int, frozenset]]:
        return sorted(self._detections.items())

    def __len__(self):
        return self.time


class Method(str, Enum):
    SHEREF = "SHEREF"
    GD = "SHEREF-GD"
    TIPD = "SHEREF-TIPD"

    @classmethod
    def parse(cls, name: str) -> "Method":
        key = name.strip().upper().replace("_", "-")
        aliases = {"GD": cls.GD, "TIPD": cls.TIPD, "BASE": cls.SHEREF}
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown method {name!r}", key="run.method") from None

    @property
    def boost(self) -> str | None:
        return {Method.SHEREF: None, Method.GD: "GD", Method.TIPD: "TIPD"}[self]


class PolicyKind(str, Enum):
    FIXED_ALL = "fixed_all"
    DEACTIVATE_ONLY = "deactivate_only"
    REPLACE_FROM_POOL = "replace_from_pool"


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind = PolicyKind.REPLACE_FROM_POOL
    # number of sensors active at t=1; defaults to the cap
    initial_active: int | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to run one (method, alpha) Monte-Carlo scenario."""

    model: "ModelSpec"
    policy: PolicySpec = field(default_factory=PolicySpec)
    cap: int = 100
    horizon: int = 30
    alpha: float = 0.1
    method: Method = Method.SHEREF
    pool_size: int = 1000
    change_p: float = 0.1
    reps: int = 500
    seed: int = 0
    boost_tol: float = 1e-6
    boost_b_max: float | None = None
    evalue_convention: str = "recursion"

    def __post_init__(self):
        if self.evalue_convention not in ("recursion", "literal"):
            raise ConfigError(f"unknown e-value convention {self.evalue_convention!r}",
                              key="run.evalue_convention")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}", key="run.alpha")
        if self.cap < 1:
            raise ConfigError("cap must be positive", key="run.cap")
        if self.horizon < 2:
            raise ConfigError("horizon must be at least 2", key="run.horizon")
        if not 0 < self.change_p <= 1:
            raise ConfigError("change_p must lie in (0, 1]", key="run.change_p")
        if self.reps < 1:
            raise ConfigError("reps must be positive", key="run.reps")
        if self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer", key="run.seed")
        if self.initial_active > self.pool_size:
            raise ConfigError("pool size smaller than the initial active set", key="run.pool_size")
        if self.initial_active > self.cap:
            raise ConfigError("initial active set exceeds the cap", key="policy.initial_active")
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method.parse(str(self.method)))

    @property
    def initial_active(self) -> int:
        n = self.policy.initial_active
        return self.cap if n is None else n

    @property
    def b_max(self) -> float:
        return 10.0 / self.alpha if self.boost_b_max is None else self.boost_b_max

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)
