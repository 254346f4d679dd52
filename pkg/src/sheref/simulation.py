"""End-to-end simulation of the detection procedure on a reconfigurable network."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boosting import boost_factors
from .detector import select_array
from .evalues import EValueEngine
from .models import History
from .types import ActiveSetLedger, PolicyKind, PolicySpec, ScenarioConfig


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    """Stream for replication ``rep``: PCG64 seeded by ``SeedSequence(seed, spawn_key=(rep,))``.

    Depends only on ``(seed, rep)``, so serial and parallel runs coincide.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def sample_change_points(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` iid geometric change points on ``{0, 1, 2, ...}``: ``P(tau = t) = (1-p)^t p``."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    return (rng.geometric(p, size=n) - 1).astype(float)


@dataclass
class PoolState:
    """Sensors never yet activated, in id order."""

    unused: np.ndarray

    @classmethod
    def after_initial(cls, pool_size: int, n_initial: int) -> "PoolState":
        return cls(np.arange(n_initial + 1, pool_size + 1, dtype=np.int64))


def step_policy(policy: PolicySpec, prev_active: np.ndarray, detected: np.ndarray,
                pool: PoolState, rng: np.random.Generator) -> np.ndarray:
    """Next active set (sorted id array) after the detections ``D_{t+1}``."""
    prev_active = np.asarray(prev_active, dtype=np.int64)
    detected = np.asarray(detected, dtype=np.int64)
    if not np.isin(detected, prev_active).all():
        raise ValueError("detections must be a subset of the previous active set")
    if policy.kind is PolicyKind.FIXED_ALL:
        return prev_active
    kept = np.setdiff1d(prev_active, detected)
    if policy.kind is PolicyKind.DEACTIVATE_ONLY:
        return kept
    n_new = min(detected.size, pool.unused.size)
    if n_new == 0:
        return kept
    pick = rng.choice(pool.unused.size, size=n_new, replace=False)
    fresh = pool.unused[pick]
    pool.unused = np.delete(pool.unused, pick)
    return np.union1d(kept, fresh)


@dataclass
class TickRecord:
    t: int
    active: np.ndarray
    x: np.ndarray
    evalues: np.ndarray
    boosted: np.ndarray
    r: int
    threshold: float
    detected: np.ndarray  # D_{t+1}


@dataclass
class RunTrace:
    horizon: int
    tau: np.ndarray  # indexed by sensor id, entry 0 unused
    ticks: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    @property
    def n_epochs(self) -> int:
        return self.horizon - 1


def simulate_run(config: ScenarioConfig, rng: np.random.Generator) -> RunTrace:
    """One replication: observe, update e-values, (boost,) select, reconfigure."""
    tau_rng, param_rng, obs_rng, policy_rng = rng.spawn(4)
    n = config.pool_size
    tau = np.concatenate([[np.inf], sample_change_points(n, config.change_p, tau_rng)])
    model = config.model.build(n, param_rng)
    trace = RunTrace(config.horizon, tau, meta={"method": config.method.value, "alpha": config.alpha,
                                                 "evalue_convention": config.evalue_convention})
    if hasattr(model, "loadings"):
        trace.meta["loadings"] = model.loadings.tolist()

    active = np.arange(1, config.initial_active + 1, dtype=np.int64)
    pool = PoolState.after_initial(n, config.initial_active)
    history = History.empty(n)
    engine = EValueEngine(n, config.evalue_convention)
    ledger = ActiveSetLedger(config.cap)
    boost = config.method.boost

    for t in range(1, config.horizon):
        if active.size == 0:
            break
        ledger.append_active_set(t, active.tolist())
        post = tau[active] < t
        x = model.sample(active, t, post, history, obs_rng)
        lr = np.exp(model.log_lr(active, t, x, history))
        if boost:
            m, v = model.null_params(active, t, history)
            c = engine.scale(active, t)
        ev = engine.tick(t, active, lr).values
        if boost:
            b, _ = boost_factors(m, v, c, config.alpha, config.cap, boost, config.b_max, config.boost_tol)
            boosted = b * ev
        else:
            boosted = ev
        r, u, mask = select_array(boosted, config.cap, config.alpha)
        detected = active[mask]
        ledger.record_detection(t + 1, detected.tolist())
        trace.ticks.append(TickRecord(t, active, x, ev, boosted, r, u, detected))
        history = History.from_tick(n, t, active, x)
        active = step_policy(config.policy, active, detected, pool, policy_rng)
    return trace


def _run_stats(config: ScenarioConfig, rep: int, keep_trace: bool):
    from .metrics import trace_stats

    trace = simulate_run(config, replication_rng(config.seed, rep))
    return trace_stats(trace), (trace if keep_trace else None)


def monte_carlo(config: ScenarioConfig, workers: int = 1, keep_traces: bool = False):
    """Run ``config.reps`` replications and aggregate their metrics.

    Replication ``i`` always uses ``replication_rng(config.seed, i)`` and
    results are combined in replication order, so the summary does not depend
    on ``workers``.  Returns ``(summary, traces)``; ``traces`` is empty unless
    ``keep_traces``.
    """
    from .metrics import aggregate

    reps = range(config.reps)
    if workers <= 1:
        results = [_run_stats(config, i, keep_traces) for i in reps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _run_stats(config, i, keep_traces), reps))
    summary = aggregate([s for s, _ in results], config.horizon)
    traces = [tr for _, tr in results] if keep_traces else []
    return summary, traces
