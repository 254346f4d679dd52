"""Line-delimited JSON records: run traces and the streaming detector.

A trace file starts with a header record (``"type": "header"``) holding the
effective configuration, the change points and any drawn model parameters,
followed by one record per tick::

    {"t": 3, "active": [...], "x": [...], "evalues": [...], "boosted": [...],
     "r": 2, "threshold": 500.0, "detected": [...]}

The detector input uses the same tick records and only needs ``t``,
``active`` and ``x``, so a trace can be replayed through ``detect`` as is.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .boosting import boost_factors
from .detector import select_array
from .errors import ConfigError, MalformedRecord
from .evalues import EValueEngine
from .models import History, ModelSpec
from .simulation import RunTrace, TickRecord
from .types import Method


def _floats(a) -> list:
    return [float(x) for x in np.asarray(a, dtype=float)]


def _ints(a) -> list:
    return [int(x) for x in np.asarray(a, dtype=np.int64)]


def trace_header(trace: RunTrace, config: dict | None = None, rep: int | None = None) -> dict:
    tau = [None if math.isinf(x) else int(x) for x in trace.tau[1:]]
    head = {"type": "header", "horizon": trace.horizon, "tau": tau, "meta": trace.meta}
    if config is not None:
        head["config"] = config
    if rep is not None:
        head["rep"] = rep
    return head


def tick_record(rec: TickRecord) -> dict:
    return {
        "t": rec.t,
        "active": _ints(rec.active),
        "x": _floats(rec.x),
        "evalues": _floats(rec.evalues),
        "boosted": _floats(rec.boosted),
        "r": rec.r,
        "threshold": float(rec.threshold),
        "detected": _ints(rec.detected),
    }


def write_trace(path, trace: RunTrace, config: dict | None = None, rep: int | None = None):
    with open(path, "w") as fh:
        fh.write(json.dumps(trace_header(trace, config, rep)) + "\n")
        for rec in trace.ticks:
            fh.write(json.dumps(tick_record(rec)) + "\n")


def read_trace(path) -> RunTrace:
    lines = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                try:
                    lines.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise MalformedRecord(f"{path}: invalid JSON ({exc.msg})", line=lineno) from None
    if not lines or lines[0].get("type") != "header":
        raise MalformedRecord(f"{path} does not start with a trace header", line=1)
    head = lines[0]
    tau = np.array([np.inf] + [np.inf if x is None else float(x) for x in head["tau"]])
    trace = RunTrace(int(head["horizon"]), tau, meta=dict(head.get("meta", {})))
    for d in lines[1:]:
        trace.ticks.append(TickRecord(
            int(d["t"]),
            np.asarray(d["active"], dtype=np.int64),
            np.asarray(d["x"], dtype=float),
            np.asarray(d.get("evalues", []), dtype=float),
            np.asarray(d.get("boosted", []), dtype=float),
            int(d["r"]),
            float(d["threshold"]),
            np.asarray(d["detected"], dtype=np.int64),
        ))
    return trace


class StreamDetector:
    """Tick-by-tick detection on observed data.

    Holds the e-value engine and the previous tick's observations; the state
    round-trips through :meth:`state` / :meth:`load_state` so a stream can be
    split at any tick and resumed in another process.
    """

    def __init__(self, model_spec: ModelSpec, n_sensors: int, cap: int, alpha: float,
                 method: Method = Method.SHEREF, evalue_convention: str = "recursion",
                 b_max: float | None = None, tol: float = 1e-6):
        if model_spec.variant == "shared_factor" and model_spec.loadings is None:
            raise ConfigError("streaming detection on the shared-factor model needs model.loadings",
                              key="model.loadings")
        self.spec = model_spec
        self.n = int(n_sensors)
        self.model = model_spec.build(self.n)
        self.cap, self.alpha = int(cap), float(alpha)
        self.method = method if isinstance(method, Method) else Method.parse(method)
        self.b_max, self.tol = b_max, tol
        self.engine = EValueEngine(self.n, evalue_convention)
        self.history = History.empty(self.n)

    @property
    def t(self) -> int:
        return self.engine.t

    def step(self, t: int, active, x) -> dict:
        """Process one tick and return ``{t, r, selected, threshold}``."""
        active = np.asarray(active, dtype=np.int64)
        x = np.asarray(x, dtype=float)
        if t != self.t + 1:
            raise MalformedRecord(f"expected tick {self.t + 1}, got {t}")
        if active.shape != x.shape or active.ndim != 1:
            raise MalformedRecord("active and x must be equal-length lists")
        if active.size and (active.min() < 1 or active.max() > self.n):
            raise MalformedRecord(f"sensor ids must lie in 1..{self.n}")
        if np.unique(active).size != active.size:
            raise MalformedRecord("duplicate sensor ids")
        if active.size > self.cap:
            raise MalformedRecord(f"{active.size} active sensors exceed the cap {self.cap}")
        if not np.all(np.isfinite(x)):
            raise MalformedRecord("observations must be finite")
        lr = np.exp(self.model.log_lr(active, t, x, self.history))
        boost = self.method.boost
        if boost and active.size:
            m, v = self.model.null_params(active, t, self.history)
            c = self.engine.scale(active, t)
        ev = self.engine.tick(t, active, lr).values
        if boost and active.size:
            b, _ = boost_factors(m, v, c, self.alpha, self.cap, boost, self.b_max, self.tol)
            ev = b * ev
        r, u, mask = select_array(ev, self.cap, self.alpha)
        self.history = History.from_tick(self.n, t, active, x)
        return {"t": t, "r": r, "selected": _ints(active[mask]), "threshold": float(u)}

    def state(self) -> dict:
        h = self.history
        ids = np.flatnonzero(h.active)
        return {
            "engine": self.engine.to_dict(),
            "history": {"t": h.t, "ids": _ints(ids), "x": _floats(h.obs[ids])},
        }

    def load_state(self, d: dict):
        self.engine = EValueEngine.from_dict(d["engine"])
        self.engine._grow(self.n)
        h = d["history"]
        self.history = History.from_tick(self.n, int(h["t"]), h["ids"], h["x"])


def parse_tick(line: str, lineno: int) -> dict | None:
    """Decode one input line; ``None`` for blank lines and trace headers."""
    if not line.strip():
        return None
    try:
        d = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"invalid JSON ({exc.msg})", line=lineno) from None
    if not isinstance(d, dict):
        raise MalformedRecord("record must be a JSON object", line=lineno)
    if d.get("type") == "header":
        return None
    for key in ("t", "active", "x"):
        if key not in d:
            raise MalformedRecord(f"record lacks {key!r}", line=lineno)
    if not isinstance(d["t"], int) or isinstance(d["t"], bool):
        raise MalformedRecord("t must be an integer", line=lineno)
    if not isinstance(d["active"], list) or not isinstance(d["x"], list):
        raise MalformedRecord("active and x must be lists", line=lineno)
    return d


def read_header(path) -> dict | None:
    with open(path) as fh:
        first = fh.readline()
    try:
        d = json.loads(first)
    except json.JSONDecodeError:
        return None
    return d if isinstance(d, dict) and d.get("type") == "header" else None


def trace_files(paths) -> list[Path]:
    """Expand directories (recursively) into their ``*.jsonl`` files, sorted by path."""
    out = []
    for p in map(Path, paths):
        out.extend(sorted(p.rglob("*.jsonl")) if p.is_dir() else [p])
    return out
