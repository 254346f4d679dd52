"""Per-sensor e-values: the running statistic S and E = S / t.

Run: python3 demos/02_evalues.py
"""
from sheref import ActiveSetLedger, EValueEngine, evalue_direct

lrs = {(1, 1): 2.0, (2, 1): 0.5, (3, 1): 3.0, (3, 2): 4.0}
schedule = [[1], [1], [1, 2]]

for convention in ("recursion", "literal"):
    eng, led = EValueEngine(convention=convention), ActiveSetLedger(cap=10)
    print(f"[{convention}]")
    for t, active in enumerate(schedule, start=1):
        led.append_active_set(t, active)
        vec = eng.tick(t, active, {k: lrs[t, k] for k in active})
        for k, e in vec.as_dict().items():
            own = {s: lrs[s, k] for s in led.active_times(k, t)}
            print(f"  t={t} sensor {k}: E={e:.4f}  direct sum={evalue_direct(own, led, k, t, convention):.4f}")

# The literal convention treats ticks before a sensor's first use as unit-LR
# ticks, so sensor 2 enters at t=3 carrying S=2 rather than 0.
