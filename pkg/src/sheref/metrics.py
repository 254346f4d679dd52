"""FDR path, maxFDR, AFNR, TADD and rejection counts from run traces."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import EmptyTraceList, MismatchedHorizons


@dataclass(frozen=True)
class RunStats:
    """Per-replication quantities; ``fdr`` has one entry per decision epoch."""

    fdr: np.ndarray
    afnr: float
    tadd: float
    rejections: float


@dataclass(frozen=True)
class MetricsSummary:
    fdr_path: np.ndarray
    fdr_path_se: np.ndarray
    max_fdr: float
    max_fdr_se: float
    afnr: float
    afnr_se: float
    tadd: float
    tadd_se: float
    rejections: float
    rejections_se: float
    reps: int

    def row(self) -> dict:
        d = asdict(self)
        del d["fdr_path"], d["fdr_path_se"]
        return d


def tick_counts(tau: np.ndarray, t: int, active: np.ndarray, detected: np.ndarray) -> dict:
    """Confusion counts at epoch ``t`` for ``A_t`` against ``D_{t+1}``."""
    hit = np.isin(active, detected)
    post = tau[active] < t
    return {
        "false_det": int(np.sum(hit & ~post)),
        "true_det": int(np.sum(hit & post)),
        "false_nondet": int(np.sum(~hit & post)),
        "true_nondet": int(np.sum(~hit & ~post)),
    }


def trace_stats(trace) -> RunStats:
    n = trace.horizon - 1
    fdr = np.zeros(n)
    missed = nondet = rejections = 0
    for rec in trace.ticks:
        c = tick_counts(trace.tau, rec.t, rec.active, rec.detected)
        r = c["false_det"] + c["true_det"]
        fdr[rec.t - 1] = c["false_det"] / max(r, 1)
        missed += c["false_nondet"]
        nondet += c["false_nondet"] + c["true_nondet"]
        rejections += r
    return RunStats(fdr, missed / max(nondet, 1), float(missed), float(rejections))


def _se(x: np.ndarray, axis=0):
    n = x.shape[axis]
    if n < 2:
        return np.zeros(np.delete(x.shape, axis)) if x.ndim > 1 else 0.0
    return x.std(axis=axis, ddof=1) / np.sqrt(n)


def aggregate(stats: list, horizon: int) -> MetricsSummary:
    """Combine per-replication stats (mean of per-replication ratios)."""
    if not stats:
        raise EmptyTraceList("no replications to aggregate")
    fdr = np.vstack([s.fdr for s in stats])
    if fdr.shape[1] != horizon - 1:
        raise MismatchedHorizons("stats do not match the horizon")
    afnr = np.array([s.afnr for s in stats])
    tadd = np.array([s.tadd for s in stats])
    rej = np.array([s.rejections for s in stats])
    path = fdr.mean(axis=0)
    path_se = _se(fdr)
    j = int(np.argmax(path)) if path.size else 0
    return MetricsSummary(
        fdr_path=path,
        fdr_path_se=np.asarray(path_se),
        max_fdr=float(path[j]) if path.size else 0.0,
        max_fdr_se=float(np.asarray(path_se)[j]) if path.size else 0.0,
        afnr=float(afnr.mean()),
        afnr_se=float(_se(afnr)),
        tadd=float(tadd.mean()),
        tadd_se=float(_se(tadd)),
        rejections=float(rej.mean()),
        rejections_se=float(_se(rej)),
        reps=len(stats),
    )


def compute_metrics(traces: list, horizon: int | None = None) -> MetricsSummary:
    if not traces:
        raise EmptyTraceList("no traces to aggregate")
    horizon = traces[0].horizon if horizon is None else horizon
    if any(tr.horizon != horizon for tr in traces):
        raise MismatchedHorizons("all traces must share the same horizon")
    return aggregate([trace_stats(tr) for tr in traces], horizon)
