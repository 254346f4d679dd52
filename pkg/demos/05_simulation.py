"""Monte-Carlo protocol: reconfigurable network, geometric change points, metrics.

A reduced replication count keeps this quick; the acceptance suite runs 500.
Run: python3 demos/05_simulation.py
"""
from sheref.models import MODEL_1
from sheref.simulation import monte_carlo
from sheref.types import Method, ScenarioConfig

for method in (Method.SHEREF, Method.GD, Method.TIPD):
    cfg = ScenarioConfig(model=MODEL_1, method=method, alpha=0.1, reps=40, seed=1, evalue_convention="literal")
    s, _ = monte_carlo(cfg, workers=4)
    print(f"{method.value:12s} AFNR={s.afnr:.4f}±{s.afnr_se:.4f} TADD={s.tadd:7.1f} "
          f"maxFDR={s.max_fdr:.4f} rejections={s.rejections:.1f}")
