"""Boosting factors: how far e-values can be inflated while keeping FDR control.

Run: python3 demos/04_boosting.py
"""
from sheref import BoostQuery, LogNormalLaw, PointMassLaw, boost_factor

for shift in (0.0, 0.5, 1.0, 3.0):
    law = PointMassLaw(1.0) if shift == 0 else LogNormalLaw.from_shift(shift)
    for c in (0.5, 1.0, 2.0):
        q = BoostQuery(law, c, alpha=0.1, cap=100)
        gd = boost_factor(q, "GD", strict=False)
        tipd = boost_factor(q, "TIPD", strict=False)
        print(f"shift={shift:<4} c={c:<4} b_GD={gd.factor:9.4f}  b_TIPD={tipd.factor:9.4f}")
# A point-mass law (no information) allows b = 1/(alpha c); the TIPD factor is never smaller.
# For a wide null law the TIPD constraint is nearly scale-free, so b_TIPD barely moves with c.
