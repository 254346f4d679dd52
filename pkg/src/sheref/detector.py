"""e-BH selection over the active sensors.

``R_t`` is the largest ``r`` whose ``r``-th largest e-value is at least
``K / (alpha r)``, with ``K`` the network cap (not ``|A_t|``).  The canonical
computation goes through the threshold ``u = inf{u : u Q(u) >= K/alpha}`` where
``Q(u) = #{E >= u} v 1``; the detected set is then ``{E >= u}`` whenever
``R_t > 0``, which resolves ties set-wise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import CapViolation, NonFiniteInput


def _check(values: np.ndarray, cap: int, alpha: float):
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if cap < 1:
        raise ValueError("cap must be a positive integer")
    if values.size > cap:
        raise CapViolation(f"{values.size} e-values exceed the cap K = {cap}")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise NonFiniteInput("e-values must be finite and nonnegative")


def threshold_array(values: np.ndarray, cap: int, alpha: float) -> tuple[float, int]:
    """Return ``(u, Q(u))`` for an array of e-values."""
    values = np.asarray(values, dtype=float)
    _check(values, cap, alpha)
    n = values.size
    target = cap / alpha
    if n == 0:
        return target, 1
    asc = np.sort(values)
    r = np.arange(1, n + 1)
    levels = cap / (alpha * r)
    counts = n - np.searchsorted(asc, levels, side="left")
    ok = np.flatnonzero(counts >= r)
    q = int(r[ok[-1]]) if ok.size else 1
    return cap / (alpha * q), q


def select_array(values: np.ndarray, cap: int, alpha: float) -> tuple[int, float, np.ndarray]:
    """Vectorized e-BH: ``(R, u, mask)`` with ``mask`` flagging detected entries."""
    values = np.asarray(values, dtype=float)
    u, q = threshold_array(values, cap, alpha)
    mask = values >= u
    return int(mask.sum()), u, mask


@dataclass(frozen=True)
class DetectionReport:
    t: int | None
    evalues: dict
    cap: int
    alpha: float
    r_count: int
    threshold: float
    selected: frozenset = field(default_factory=frozenset)

    def ranked(self) -> list[int]:
        """Active sensors by decreasing e-value, ties broken by ascending id."""
        return sorted(self.evalues, key=lambda k: (-self.evalues[k], k))


def ebh_threshold(evalues: Mapping[int, float], cap: int, alpha: float) -> tuple[float, int]:
    return threshold_array(np.fromiter(evalues.values(), dtype=float, count=len(evalues)), cap, alpha)


def ebh_select(evalues: Mapping[int, float], cap: int, alpha: float, t: int | None = None) -> DetectionReport:
    ids = list(evalues)
    vals = np.fromiter((evalues[k] for k in ids), dtype=float, count=len(ids))
    r, u, mask = select_array(vals, cap, alpha)
    chosen = frozenset(k for k, m in zip(ids, mask) if m)
    return DetectionReport(t, dict(evalues), cap, alpha, r, u, chosen)
