"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

The table reproductions run the full protocol (K=100, pool 1000, horizon 30,
geometric change points with p=0.1, 500 replications) for both models, both
levels and all three methods, so this module takes a few minutes.
"""
import itertools
import math

import numpy as np
import pytest

from sheref import ActiveSetLedger, EValueEngine, ebh_select, evalue_direct
from sheref.boosting import BoostQuery, boost_factor, gd_excess, in_B1, in_B2, tipd_lhs
from sheref.models import MODEL_1, MODEL_2, LogNormalLaw, PointMassLaw, SharedFactor
from sheref.simulation import monte_carlo
from sheref.types import Method, ScenarioConfig

REPS = 500
SEED = 20240601
METHODS = (Method.SHEREF, Method.GD, Method.TIPD)
ALPHAS = (0.1, 0.05)
MODELS = {"model1": MODEL_1, "model2": MODEL_2}

TABLE1 = {  # alpha = 0.1
    Method.SHEREF: {"afnr": 0.2114, "tadd": 466.404, "max_fdr": 0.0125, "rejections": 794.592},
    Method.GD: {"afnr": 0.1951},
    Method.TIPD: {"afnr": 0.1133, "tadd": 237.982, "max_fdr": 0.0813, "rejections": 901.168},
}
TABLE2 = {  # alpha = 0.05
    Method.SHEREF: {"afnr": 0.4735},
    Method.GD: {"afnr": 0.4630},
    Method.TIPD: {"afnr": 0.4194, "tadd": 974.742},
}
RATES = ("afnr", "max_fdr")


@pytest.fixture(scope="module")
def protocol():
    out = {}
    for (name, model), method, alpha in itertools.product(MODELS.items(), METHODS, ALPHAS):
        cfg = ScenarioConfig(model=model, method=method, alpha=alpha, reps=REPS, seed=SEED,
                             evalue_convention="literal")
        out[name, method, alpha], _ = monte_carlo(cfg, workers=4)
    return out


def compare(summary, expected):
    """Yield ``(metric, got, want, tol, ok)`` with tol = max(abs/rel band, 3 SE)."""
    for metric, want in expected.items():
        got = getattr(summary, metric)
        se = getattr(summary, metric + "_se")
        band = 0.02 if metric in RATES else 0.05 * want
        tol = max(band, 3 * se)
        yield metric, got, want, tol, abs(got - want) <= tol


def table_check(protocol, model, alpha, table):
    ok, parts = True, []
    for method, expected in table.items():
        for metric, got, want, tol, good in compare(protocol[model, method, alpha], expected):
            ok &= good
            mark = "" if good else " X"
            parts.append(f"{method.value} {metric} {got:.4g} vs {want:.4g}±{tol:.3g}{mark}")
    return ok, "; ".join(parts)


def test_criterion_1_table1(protocol, acceptance_report):
    ok, detail = table_check(protocol, "model1", 0.1, TABLE1)
    acceptance_report(1, "Model 1 table reproduction at alpha=0.1", ok, detail)
    assert ok, detail


def test_criterion_2_table2(protocol, acceptance_report):
    ok, detail = table_check(protocol, "model2", 0.05, TABLE2)
    acceptance_report(2, "Model 2 table reproduction at alpha=0.05", ok, detail)
    assert ok, detail


def test_criterion_3_fdr_control(protocol, acceptance_report):
    ok, parts = True, []
    for (model, method, alpha), s in protocol.items():
        bound = alpha + 3 * s.max_fdr_se
        guaranteed = not (model == "model2" and method is Method.TIPD)
        good = s.max_fdr <= bound
        if guaranteed:
            ok &= good
        tag = "" if guaranteed else " (measured only)"
        parts.append(f"{model} {method.value} a={alpha}: {s.max_fdr:.4f} <= {bound:.4f}{tag}{'' if good else ' X'}")
    detail = "; ".join(parts)
    acceptance_report(3, "max FDR within alpha + 3 SE", ok, detail)
    assert ok, detail


def _null_factor_sample(model: SharedFactor, reps: int, m: int, rng):
    """One tick of all-null data for ``reps`` independent networks of ``m`` sensors."""
    z = rng.standard_normal(reps)
    eps = rng.standard_normal(reps * m)
    return np.repeat(z, m) * model.loadings + eps


def test_criterion_4_martingale(acceptance_report):
    reps, m, horizon, q = 10_000, 4, 30, 0.3
    rng = np.random.default_rng(404)
    # a small shift keeps the e-value tails light enough for a 10^4-sample mean
    model = SharedFactor(rng.uniform(0.0, 0.5, reps * m), mu=0.5)
    ids = np.arange(1, reps * m + 1)
    eng = EValueEngine(reps * m)
    parts, ok = [], True
    for t in range(1, horizon + 1):
        x = _null_factor_sample(model, reps, m, rng)
        e = eng.tick(t, ids, np.exp(model.log_lr(ids, t, x, None))).values
        if t in (1, 5, 30):
            per_rep = e.reshape(reps, m).mean(axis=1)
            mean, se = per_rep.mean(), per_rep.std(ddof=1) / math.sqrt(reps)
            good = abs(mean - 1) <= 3 * se
            ok &= good
            parts.append(f"E mean t={t}: {mean:.4f} (se {se:.4f})")

    # Bernoulli(q) activation, S copied forward while inactive
    eng = EValueEngine(reps * m)
    for t in range(1, horizon + 1):
        act = ids[rng.random(ids.size) < q]
        x = _null_factor_sample(model, reps, m, rng)[act - 1]
        eng.tick(t, act, np.exp(model.log_lr(act, t, x, None)))
        if t in (1, 5, 30):
            per_rep = eng.s_values(ids).reshape(reps, m).mean(axis=1)
            mean, se = per_rep.mean(), per_rep.std(ddof=1) / math.sqrt(reps)
            good = abs(mean - q * t) <= 3 * se
            ok &= good
            parts.append(f"S mean t={t}: {mean:.4f} vs {q * t:.1f} (se {se:.4f})")
    detail = "; ".join(parts)
    acceptance_report(4, "e-value martingale suite", ok, detail)
    assert ok, detail


def _brute_force(ev, cap, alpha):
    order = sorted(ev, key=lambda k: -ev[k])
    r = max([i for i, k in enumerate(order, start=1) if i * ev[k] * alpha >= cap], default=0)
    return set() if r == 0 else {k for k in ev if ev[k] >= ev[order[r - 1]]}


def _threshold_rule(ev, cap, alpha):
    for u in sorted(cap / (alpha * r) for r in range(1, cap + 1)):
        if u * max(sum(e >= u for e in ev.values()), 1) >= cap / alpha * (1 - 1e-15):
            return {k for k, e in ev.items() if e >= u}
    return set()


def test_criterion_5_ebh_oracles(acceptance_report):
    rng = np.random.default_rng(505)
    bad = 0
    for _ in range(1000):
        n = int(rng.integers(0, 13))
        cap = int(rng.integers(max(n, 1), 13))
        alpha = float(rng.choice([0.05, 0.1, 0.2, 0.5]))
        vals = np.where(rng.random(n) < 0.3, rng.choice([0.0, 2.0, 5.0, 10.0, 20.0], n), rng.exponential(30, n))
        ev = {int(k): float(v) for k, v in zip(rng.permutation(np.arange(1, 40))[:n], vals)}
        got = set(ebh_select(ev, cap, alpha).selected)
        bad += got != _brute_force(ev, cap, alpha) or got != _threshold_rule(ev, cap, alpha)
    ok = bad == 0
    acceptance_report(5, "e-BH matches brute-force and threshold oracles", ok, f"{bad} mismatches in 1000 cases")
    assert ok


def test_criterion_6_boosting(acceptance_report):
    rng = np.random.default_rng(606)
    parts, ok = [], True

    fails = 0
    for _ in range(100):
        law = LogNormalLaw.from_shift(float(rng.uniform(0.05, 4.0)))
        q = BoostQuery(law, float(rng.uniform(0.01, 30.0)), float(rng.choice([0.01, 0.05, 0.1, 0.2])), 100)
        gd = boost_factor(q, "GD", strict=False)
        tipd = boost_factor(q, "TIPD", strict=False)
        good = (gd.factor >= 1 and tipd.factor >= 1 and gd.certified and tipd.certified
                and in_B1(q, gd.factor) and in_B2(q, tipd.factor) and gd.factor <= tipd.factor * (1 + 1e-9))
        fails += not good
    ok &= fails == 0
    parts.append(f"randomized queries failing: {fails}/100")

    tol = 1e-6
    worst = 0.0
    for alpha, c in itertools.product((0.05, 0.1, 0.2), (0.1, 0.5, 1.0, 3.0)):
        frontier = 1 / (alpha * c)
        for method in ("GD", "TIPD"):
            r = boost_factor(BoostQuery(PointMassLaw(1.0), c, alpha, 100), method, b_max=1e6, tol=tol)
            worst = max(worst, abs(r.factor - frontier) / frontier)
            ok &= r.factor <= frontier
    ok &= worst <= tol
    parts.append(f"point-mass frontier worst rel error {worst:.2e}")

    m, v, c, alpha, b = -4.5, 9.0, 1.0, 0.1, 3.0
    e = c * np.exp(rng.normal(m, math.sqrt(v), 1_000_000))
    terms = b * e * (alpha * b * e >= 1)
    gd_closed = math.exp(float(gd_excess(b, m, v, c, alpha))) * c
    gd_z = abs(terms.mean() - gd_closed) / (terms.std(ddof=1) / math.sqrt(terms.size))
    e.sort()
    y = np.arange(1, 101)
    p = 1 - np.searchsorted(e, y / (alpha * b), side="left") / e.size
    j = int(np.argmax(y * p))
    tipd_closed = float(tipd_lhs(b, m, v, c, alpha, 100))
    tipd_z = abs(y[j] * p[j] - tipd_closed) / (y[j] * math.sqrt(p[j] * (1 - p[j]) / e.size))
    ok &= gd_z <= 3 and tipd_z <= 3
    parts.append(f"lognormal vs 10^6 draws: GD {gd_z:.2f} SE, TIPD {tipd_z:.2f} SE")
    detail = "; ".join(parts)
    acceptance_report(6, "boosting suite", ok, detail)
    assert ok, detail


def test_criterion_7_recursion_and_determinism(acceptance_report):
    rng = np.random.default_rng(707)
    worst = 0.0
    for case in range(300):
        convention = ("recursion", "literal")[case % 2]
        horizon = int(rng.integers(1, 13))
        eng, led = EValueEngine(convention=convention), ActiveSetLedger(6)
        lrs = {}
        for t in range(1, horizon + 1):
            act = sorted(int(k) for k in np.flatnonzero(rng.random(6) < 0.6) + 1)
            led.append_active_set(t, act)
            for k in act:
                lrs[t, k] = float(np.exp(rng.normal(-0.5, 1.0)))
            vec = eng.tick(t, act, {k: lrs[t, k] for k in act})
            for k, got in vec.as_dict().items():
                own = {s: lrs[s, k] for s in led.active_times(k, t)}
                want = evalue_direct(own, led, k, t, convention)
                worst = max(worst, abs(got - want) / abs(want) if want else abs(got))
    agree = worst <= 1e-12

    cfg = ScenarioConfig(model=MODEL_1, method=Method.TIPD, alpha=0.1, reps=24, seed=7, pool_size=300,
                         evalue_convention="literal")
    rows = {w: repr(sorted(monte_carlo(cfg, workers=w)[0].row().items())) for w in (1, 4, 8)}
    identical = len(set(rows.values())) == 1
    ok = agree and identical
    detail = f"worst relative gap {worst:.1e}; metrics identical across 1/4/8 workers: {identical}"
    acceptance_report(7, "recursion/direct agreement and determinism", ok, detail)
    assert ok, detail
