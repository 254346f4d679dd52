"""Likelihood models: sampling pre/post-change data and reading off the null LR law.

Run: python3 demos/01_models.py
"""
import numpy as np

from sheref.models import MODEL_1, MODEL_2, History

rng = np.random.default_rng(0)
n = 8

# Model 1: a shared factor correlates sensors within a tick; loadings are drawn per build.
m1 = MODEL_1.build(n, rng)
ids = np.arange(1, n + 1)
post = np.array([False] * 4 + [True] * 4)
x = m1.sample(ids, 1, post, History.empty(n), rng)
print("model 1 loadings:", np.round(m1.loadings, 3))
print("one tick (last four post-change):", np.round(x, 2))
print("log LRs:", np.round(m1.log_lr(ids, 1, x, History.empty(n)), 2))
m, v = m1.null_params(ids, 1, History.empty(n))
print("null law of log L: mean", np.round(m, 3), "var", np.round(v, 3))

# Model 2: AR dynamics within each sensor, so the LR depends on the previous observation.
m2 = MODEL_2.build(n, rng)
h = History.empty(n)
for t in (1, 2, 3):
    x = m2.sample(ids, t, post, h, rng)
    m, v = m2.null_params(ids, t, h)
    print(f"model 2 t={t}: null log-LR variance", np.round(v, 2))
    h = History.from_tick(n, t, ids, x)
