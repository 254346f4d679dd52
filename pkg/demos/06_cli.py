"""Command-line workflow: simulate with traces, replay one trace through detect, report FDR paths.

Run: python3 demos/06_cli.py   (writes into a temporary directory)
"""
import tempfile
from pathlib import Path

from sheref.cli import main

CONFIG = """\
[model]
variant = shared_factor
mu = 3.0
factor_loading_range = 0.0, 0.5

[policy]
kind = replace_from_pool

[run]
alpha = 0.1
method = SHEREF-TIPD
reps = 5
seed = 3
evalue_convention = literal
"""

with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    (d / "run.ini").write_text(CONFIG)
    main(["simulate", "--config", str(d / "run.ini"), "--out", str(d / "metrics.csv"), "--traces"])
    print((d / "metrics.csv").read_text())

    trace = next((d / "metrics_traces").glob("*/rep_00000.jsonl"))
    main(["detect", "--input", str(trace), "--out", str(d / "detect.jsonl")])
    print("first detect lines:")
    print("".join((d / "detect.jsonl").read_text().splitlines(keepends=True)[:3]))

    main(["report", str(d / "metrics_traces"), "--out", str(d / "fdr.csv")])
    rows = [l for l in (d / "fdr.csv").read_text().splitlines() if not l.startswith("#")]
    print("\n".join(rows[:6]))

    # the metrics file reproduces its own run
    main(["simulate", "--config", str(d / "metrics.csv"), "--out", str(d / "again.csv")])
