"""e-BH selection on one tick of e-values.

Run: python3 demos/03_ebh.py
"""
from sheref import ebh_select

evalues = {1: 250.0, 2: 40.0, 3: 120.0, 4: 0.3, 5: 60.0}
cap, alpha = 5, 0.1
rep = ebh_select(evalues, cap, alpha, t=7)
print("threshold u =", rep.threshold)
print("R =", rep.r_count, "selected:", sorted(rep.selected))
for k in rep.ranked():
    print(f"  sensor {k}: E={evalues[k]:g} {'*' if k in rep.selected else ''}")
