"""Boosting factors for e-values under general dependence (GD) and TIPD.

Given the past, an active sensor's e-value is ``E = c * L`` where
``c = (1 + S_{k,t-1}) / t`` is known and ``L`` is the one-step likelihood
ratio with a known null law.  A factor ``b >= 1`` is admissible when

    GD:    E[b E 1(alpha b E >= 1)]            <= E[E]
    TIPD:  max_{y=1..K} y P(b E >= y / alpha)  <= alpha E[E]

Both left-hand sides are nondecreasing in ``b``, so the largest admissible
factor is found by bisection on ``[1, b_max]`` while keeping the lower end
feasible.  The returned factor is always a certified member of its set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import log_ndtr

from .errors import CeilingReached
from .models import LogNormalLaw, NullLrLaw, PointMassLaw

DEFAULT_TOL = 1e-6
METHODS = ("GD", "TIPD")
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def default_b_max(alpha: float) -> float:
    return 10.0 / alpha


def _log_hazard(z):
    return -0.5 * z * z - _LOG_SQRT_2PI - log_ndtr(-z)


def mills_root(sigma) -> np.ndarray:
    """Solve ``phi(z) / (1 - Phi(z)) = sigma`` for ``z`` (vectorized).

    The standard normal hazard is increasing, so ``y -> y P(L >= y/a)`` for
    lognormal ``L`` with log-sd ``sigma`` peaks at ``log y = log a + m + sigma z``.
    A coarse bisection brackets the root and Newton steps on the log hazard
    (whose derivative is ``hazard(z) - z > 0``) finish it.
    """
    sigma = np.asarray(sigma, dtype=float)
    target = np.log(sigma)
    lo = np.full(sigma.shape, -40.0)
    hi = np.maximum(sigma, -39.0)  # hazard(z) > z, so the root lies below sigma
    for _ in range(20):
        mid = 0.5 * (lo + hi)
        above = _log_hazard(mid) > target
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    z = 0.5 * (lo + hi)
    for _ in range(3):
        lh = _log_hazard(z)
        z = np.clip(z - (lh - target) / (np.exp(lh) - z), lo, hi)
    return z


# ---------------------------------------------------------------------------
# vectorized membership for lognormal / point-mass laws
#
# Laws are encoded as (m, v): log L ~ N(m, v), with v == 0 a point mass at exp(m).
# Each criterion is expressed as a log excess, ``log(lhs / rhs)``; ``b`` is
# admissible when the excess is at most ``log(1 + tol)``.


def _as_arrays(*args):
    return np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in args))


def gd_excess(b, m, v, c, alpha) -> np.ndarray:
    b, m, v, c = _as_arrays(b, m, v, c)
    out = np.empty(b.shape)
    ln = v > 0
    if ln.any():
        s = np.sqrt(v[ln])
        z = (m[ln] + v[ln] + np.log(alpha * b[ln] * c[ln])) / s
        # both sides divided by the conditional mean c * exp(m + v/2)
        out[ln] = np.log(b[ln]) + log_ndtr(z)
    pm = ~ln
    if pm.any():
        fires = alpha * b[pm] * c[pm] * np.exp(m[pm]) >= 1.0
        out[pm] = np.where(fires, np.log(b[pm]), -np.inf)
    return out


def gd_feasible(b, m, v, c, alpha, tol=0.0) -> np.ndarray:
    return gd_excess(b, m, v, c, alpha) <= math.log1p(tol)


def tipd_log_lhs(b, m, v, c, alpha, cap, zstar=None) -> np.ndarray:
    """``log max_{y=1..K} y P(b c L >= y / alpha)`` (vectorized)."""
    b, m, v, c = _as_arrays(b, m, v, c)
    out = np.empty(b.shape)
    ln = v > 0
    if ln.any():
        s = np.sqrt(v[ln])
        zs = mills_root(s) if zstar is None else np.broadcast_to(zstar, b.shape)[ln]
        mu = m[ln] + np.log(alpha * b[ln] * c[ln])
        # the continuous maximiser; the integer one is its floor or ceiling
        y_peak = np.exp(np.minimum(np.maximum(mu + s * zs, 0.0), math.log(cap)))
        y1 = np.maximum(np.floor(y_peak), 1.0)
        y2 = np.minimum(np.ceil(y_peak), float(cap))
        l1, l2 = np.log(y1), np.log(y2)
        out[ln] = np.maximum(l1 + log_ndtr((mu - l1) / s), l2 + log_ndtr((mu - l2) / s))
    pm = ~ln
    if pm.any():
        a = alpha * b[pm] * c[pm] * np.exp(m[pm])
        with np.errstate(divide="ignore"):
            out[pm] = np.log(np.where(a >= 1.0, np.minimum(cap, np.floor(a)), 0.0))
    return out


def tipd_lhs(b, m, v, c, alpha, cap, zstar=None) -> np.ndarray:
    """``max_{y=1..K} y P(b c L >= y / alpha)`` (vectorized)."""
    return np.exp(tipd_log_lhs(b, m, v, c, alpha, cap, zstar))


def tipd_excess(b, m, v, c, alpha, cap, zstar=None) -> np.ndarray:
    b, m, v, c = _as_arrays(b, m, v, c)
    log_rhs = math.log(alpha) + np.log(c) + m + 0.5 * v
    return tipd_log_lhs(b, m, v, c, alpha, cap, zstar) - log_rhs


def tipd_feasible(b, m, v, c, alpha, cap, tol=0.0, zstar=None) -> np.ndarray:
    return tipd_excess(b, m, v, c, alpha, cap, zstar) <= math.log1p(tol)


def point_mass_frontier(e, alpha, cap, method) -> np.ndarray:
    """Supremum of admissible factors for an e-value that equals ``e`` surely.

    GD admits ``b`` iff ``alpha b e < 1`` (or ``b = 1``); TIPD iff
    ``floor(alpha b e) <= alpha e``, i.e. ``alpha b e < floor(alpha e) + 1``,
    unless ``alpha e >= K`` where every factor is admissible.  The supremum
    itself is excluded.
    """
    a = alpha * np.asarray(e, dtype=float)
    with np.errstate(divide="ignore"):
        if method == "GD":
            return np.where(a >= 1.0, 1.0, 1.0 / a)
        return np.where(a >= cap, np.inf, (np.floor(a) + 1.0) / a)


def boost_factors(m, v, c, alpha, cap, method, b_max=None, tol=DEFAULT_TOL):
    """Largest certified factor per entry of 1-d ``(m, v, c)``; returns ``(b, at_ceiling)``.

    Point masses use the closed-form frontier.  Lognormal laws are solved in
    ``log b`` by regula falsi with the Illinois modification, interleaved with
    bisection steps; the lower end of the bracket is always admissible.
    """
    m, v, c = (np.ravel(a).astype(float) for a in np.broadcast_arrays(m, v, c))
    b_max = default_b_max(alpha) if b_max is None else float(b_max)
    if b_max < 1:
        raise ValueError("b_max must be at least 1")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    b = np.ones(m.size)
    top = np.zeros(m.size, dtype=bool)

    pm = v == 0
    if pm.any():
        f = point_mass_frontier(c[pm] * np.exp(m[pm]), alpha, cap, method)
        top[pm] = f > b_max
        b[pm] = np.where(top[pm], b_max, np.maximum(1.0, f * (1.0 - 0.5 * tol)))

    ln = np.flatnonzero(~pm)
    if ln.size == 0:
        return b, top
    m, v, c = m[ln], v[ln], c[ln]
    if method == "GD":
        def excess(x, idx):
            return gd_excess(np.exp(x), m[idx], v[idx], c[idx], alpha)
    else:
        zstar = mills_root(np.sqrt(v))

        def excess(x, idx):
            return tipd_excess(np.exp(x), m[idx], v[idx], c[idx], alpha, cap, zstar[idx])

    n = ln.size
    lo, hi = np.zeros(n), np.full(n, math.log(b_max))
    # -inf (underflow far from the frontier) would stall the secant step
    g_lo = np.maximum(excess(lo, np.arange(n)), -50.0)
    g_hi = excess(hi, np.arange(n))
    at_top = g_hi <= 0.0
    lo[at_top] = hi[at_top]
    side = np.zeros(n, dtype=np.int8)  # which end moved last: -1 lo, +1 hi
    width0 = hi - lo
    step = math.log1p(tol)
    idx = np.flatnonzero(~at_top & (hi - lo > step))
    it = 0
    while idx.size:
        a, bb, ga, gb = lo[idx], hi[idx], g_lo[idx], g_hi[idx]
        w = bb - a
        x = a - ga * w / (gb - ga)
        # staying a fraction of the tolerance inside the bracket lets a
        # converged secant estimate close the bracket from the other side
        x = np.clip(x, a + 0.4 * step, bb - 0.4 * step)
        if it % 3 == 2:
            # safeguard: bisect wherever three steps failed to halve the bracket
            slow = w > 0.5 * width0[idx]
            x = np.where(slow, a + 0.5 * w, x)
            width0[idx] = np.where(slow, 0.5 * w, w)
        g = excess(x, idx)
        ok = g <= 0.0
        g = np.maximum(g, -50.0)
        # Anderson-Bjorck: an end retained twice in a row has its value scaled down
        prev = side[idx]
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            m_lo = np.where(ok, 1.0, 1.0 - g / gb)
            m_hi = np.where(ok, 1.0 - g / ga, 1.0)
        g_keep_lo = np.where(prev == 1, ga * np.where(m_lo > 0, m_lo, 0.5), ga)
        g_keep_hi = np.where(prev == -1, gb * np.where(m_hi > 0, m_hi, 0.5), gb)
        lo[idx] = np.where(ok, x, a)
        hi[idx] = np.where(ok, bb, x)
        g_lo[idx] = np.where(ok, g, g_keep_lo)
        g_hi[idx] = np.where(ok, g_keep_hi, g)
        side[idx] = np.where(ok, -1, 1)
        idx = idx[hi[idx] - lo[idx] > step]
        it += 1
    b[ln] = np.exp(lo)
    top[ln] = at_top
    return b, top


# ---------------------------------------------------------------------------
# query-level API


@dataclass(frozen=True)
class BoostQuery:
    law: NullLrLaw
    scale: float
    alpha: float
    cap: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale c must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.cap < 1:
            raise ValueError("cap must be a positive integer")

    @property
    def mean_bound(self) -> float:
        """Conditional null mean of the e-value, ``c * E[L]``."""
        return self.scale * self.law.mean

    def _params(self):
        if isinstance(self.law, LogNormalLaw):
            return self.law.m, self.law.v
        if isinstance(self.law, PointMassLaw):
            return (math.log(self.law.value) if self.law.value > 0 else -math.inf), 0.0
        return None


@dataclass(frozen=True)
class BoostResult:
    factor: float
    method: str
    certified: bool
    at_ceiling: bool = False


def _empirical_gd(q: BoostQuery, b: float, tol: float) -> bool:
    e = q.scale * q.law.samples
    d = b * e * (q.alpha * b * e >= 1.0) - e
    se = d.std(ddof=1) / math.sqrt(d.size)
    return d.mean() <= tol * e.mean() + se


def _empirical_tipd(q: BoostQuery, b: float, tol: float) -> bool:
    e = np.sort(q.scale * q.law.samples)
    n = e.size
    y = np.arange(1, q.cap + 1, dtype=float)
    p = (n - np.searchsorted(e, y / (q.alpha * b), side="left")) / n
    terms = y * p
    j = int(np.argmax(terms))
    se = y[j] * math.sqrt(p[j] * (1 - p[j]) / n)
    return terms[j] <= q.alpha * e.mean() * (1.0 + tol) + se


def in_B1(query: BoostQuery, b: float, tol: float = 0.0) -> bool:
    """GD admissibility of ``b``; ``tol`` is a relative slack on the mean bound.

    Empirical laws compare paired sample averages and additionally allow one
    standard error of the estimate.
    """
    if b < 1:
        raise ValueError("boost factors are >= 1")
    params = query._params()
    if params is None:
        return _empirical_gd(query, b, tol)
    m, v = params
    return bool(gd_feasible(b, m, v, query.scale, query.alpha, tol))


def in_B2(query: BoostQuery, b: float, tol: float = 0.0) -> bool:
    """TIPD admissibility of ``b`` (max over integer ``y`` in ``1..K``)."""
    if b < 1:
        raise ValueError("boost factors are >= 1")
    params = query._params()
    if params is None:
        return _empirical_tipd(query, b, tol)
    m, v = params
    return bool(tipd_feasible(b, m, v, query.scale, query.alpha, query.cap, tol))


def boost_factor(
    query: BoostQuery,
    method: str,
    b_max: float | None = None,
    tol: float = DEFAULT_TOL,
    strict: bool = True,
) -> BoostResult:
    """Largest factor in ``[1, b_max]`` certified to lie in B1 (GD) or B2 (TIPD).

    If ``b_max`` itself is admissible the search cannot tell how far the set
    extends; with ``strict`` this raises :class:`CeilingReached` carrying the
    certified ceiling result, otherwise the result is returned flagged.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    b_max = default_b_max(query.alpha) if b_max is None else float(b_max)
    member = in_B1 if method == "GD" else in_B2
    params = query._params()
    if params is not None:
        m, v = params
        b, top = boost_factors(np.array([m]), np.array([v]), np.array([query.scale]),
                               query.alpha, query.cap, method, b_max, tol)
        factor, at_ceiling = float(b[0]), bool(top[0])
    else:
        if b_max < 1:
            raise ValueError("b_max must be at least 1")
        at_ceiling = member(query, b_max)
        lo, hi = (b_max, b_max) if at_ceiling else (1.0, b_max)
        while hi - lo > tol * lo:
            mid = 0.5 * (lo + hi)
            if member(query, mid):
                lo = mid
            else:
                hi = mid
        factor = lo
    result = BoostResult(factor, method, member(query, factor), at_ceiling)
    if at_ceiling and strict:
        raise CeilingReached(result)
    return result


def boosted_evalues(
    evalues: Mapping[int, float],
    queries: Mapping[int, BoostQuery],
    method: str,
    b_max: float | None = None,
    tol: float = DEFAULT_TOL,
    strict: bool = True,
) -> dict[int, float]:
    """``b_k * E_k`` for every active sensor in ``evalues``."""
    out = {}
    for k, e in evalues.items():
        out[k] = boost_factor(queries[k], method, b_max, tol, strict).factor * e
    return out
