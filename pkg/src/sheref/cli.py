"""Command-line entry point: ``sheref simulate | detect | boost | report``.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 malformed input stream.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from pathlib import Path

import numpy as np

from .boosting import BoostQuery, boost_factor
from .config import RunConfig, apply_overrides, load_config, parse_config
from .errors import ConfigError, MalformedRecord, ShererError
from .metrics import compute_metrics
from .models import LogNormalLaw, PointMassLaw
from .records import StreamDetector, parse_tick, read_trace, trace_files, write_trace
from .simulation import monte_carlo

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_STREAM = 0, 2, 3, 4

METRIC_COLUMNS = ["method", "alpha", "afnr", "afnr_se", "tadd", "tadd_se", "max_fdr", "max_fdr_se",
                  "rejections", "rejections_se", "reps", "seed"]
BOOST_COLUMNS = ["alpha", "c", "shift", "law", "b_gd", "gd_certified", "gd_at_ceiling",
                 "b_tipd", "tipd_certified", "tipd_at_ceiling"]
REPORT_COLUMNS = ["method", "alpha", "t", "fdr", "fdr_se"]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv_text(columns, rows, echo: str, notes=()) -> str:
    buf = io.StringIO()
    buf.write(echo)
    for note in notes:
        buf.write(f"# {note}\n")
    buf.write(f"# created: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    methods = None if args.method is None else [m for arg in args.method for m in arg.split(",")]
    return apply_overrides(cfg, alpha=args.alpha, method=methods, reps=getattr(args, "reps", None),
                           seed=getattr(args, "seed", None))


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load(args)
    scenarios = cfg.scenarios()
    out = Path(args.out)
    if not out.parent.is_dir():
        raise OSError(f"output directory {out.parent} does not exist")
    trace_root = out.with_name(out.stem + "_traces") if args.traces else None
    rows = []
    for scn in scenarios:
        summary, traces = monte_carlo(scn, workers=args.workers, keep_traces=args.traces)
        row = {"method": scn.method.value, "alpha": scn.alpha, "seed": scn.seed, **summary.row()}
        rows.append(row)
        print(f"{scn.method.value} alpha={scn.alpha}: afnr={summary.afnr:.4f} tadd={summary.tadd:.2f} "
              f"max_fdr={summary.max_fdr:.4f} rejections={summary.rejections:.2f} reps={summary.reps}")
        if trace_root is not None:
            single = parse_config(cfg.to_ini())
            apply_overrides(single, alpha=scn.alpha, method=scn.method.value)
            d = trace_root / f"{scn.method.value}_alpha{scn.alpha:g}"
            d.mkdir(parents=True, exist_ok=True)
            for i, tr in enumerate(traces):
                write_trace(d / f"rep_{i:05d}.jsonl", tr, single.to_dict(), rep=i)
    notes = ["rejections = mean over replications of total detections across all ticks",
             "afnr = mean over replications of the per-replication ratio"]
    _emit(_csv_text(METRIC_COLUMNS, rows, cfg.echo(), notes), out)
    return EXIT_OK


def _detect_config(args, header_cfg: dict | None) -> RunConfig:
    if args.config is not None:
        cfg = load_config(args.config)
    elif header_cfg is not None:
        cfg = RunConfig.from_dict(header_cfg)
    else:
        raise ConfigError("detect needs --config or an input trace carrying its configuration", key="--config")
    methods = None if args.method is None else [args.method[0]]
    return apply_overrides(cfg, alpha=None if args.alpha is None else args.alpha[:1], method=methods)


def cmd_detect(args) -> int:
    with open(args.input) as fh:
        lines = fh.readlines()
    header = None
    if lines:
        try:
            first = json.loads(lines[0])
            if isinstance(first, dict) and first.get("type") == "header":
                header = first
        except json.JSONDecodeError:
            pass
    cfg = _detect_config(args, None if header is None else header.get("config"))
    if header is not None and cfg.get("model.loadings") is None and "loadings" in header.get("meta", {}):
        cfg.set("model.loadings", tuple(header["meta"]["loadings"]))
    methods, alphas = cfg.methods(), cfg.alphas()
    if len(methods) != 1 or len(alphas) != 1:
        raise ConfigError("detect runs a single method and alpha", key="run.method")
    spec = cfg.model_spec()

    def build():
        d = StreamDetector(
            spec,
            n_sensors=cfg.get("run.pool_size", 1000),
            cap=cfg.get("run.cap", 100),
            alpha=alphas[0],
            method=methods[0],
            evalue_convention=cfg.get("run.evalue_convention", "recursion"),
            b_max=cfg.get("run.boost_b_max"),
            tol=cfg.get("run.boost_tol", 1e-6),
        )
        if args.state_in:
            d.load_state(json.loads(Path(args.state_in).read_text()))
        return d

    # built on the first tick so that an empty stream needs no model parameters
    det = build() if (args.state_in or args.state_out) else None
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    try:
        for lineno, line in enumerate(lines, start=1):
            rec = parse_tick(line, lineno)
            if rec is None:
                continue
            if not rec["active"]:
                break
            if det is None:
                det = build()
            try:
                result = det.step(rec["t"], rec["active"], rec["x"])
            except MalformedRecord as exc:
                raise MalformedRecord(str(exc), line=lineno) from None
            except (ShererError, ValueError) as exc:
                raise MalformedRecord(str(exc), line=lineno) from None
            out.write(json.dumps(result) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.state_out:
        Path(args.state_out).write_text(json.dumps(det.state()))
    return EXIT_OK


def cmd_boost(args) -> int:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.alpha is not None:
        cfg.set("boost.alpha", tuple(args.alpha))
    alphas = cfg.get("boost.alpha", (0.1, 0.05))
    scales = cfg.get("boost.scale", (0.5, 1.0, 2.0))
    shifts = cfg.get("boost.shift", (0.0, 0.5, 1.0, 2.0))
    cap = cfg.get("boost.cap", 100)
    b_max = cfg.get("boost.b_max")
    tol = cfg.get("boost.tol", 1e-6)
    for key, vals, ok in (("boost.alpha", alphas, lambda a: 0 < a < 1), ("boost.scale", scales, lambda c: c > 0),
                          ("boost.shift", shifts, lambda d: d >= 0)):
        if not vals or not all(ok(v) for v in vals):
            raise ConfigError(f"invalid grid values for {key}: {vals}", key=key)
    if cap < 1:
        raise ConfigError("boost.cap must be positive", key="boost.cap")
    if not tol > 0:
        raise ConfigError("boost.tol must be positive", key="boost.tol")
    if b_max is not None and b_max < 1:
        raise ConfigError("boost.b_max must be at least 1", key="boost.b_max")
    rows = []
    for a in alphas:
        for c in scales:
            for d in shifts:
                law = PointMassLaw() if d == 0 else LogNormalLaw.from_shift(d)
                q = BoostQuery(law, c, a, cap)
                gd = boost_factor(q, "GD", b_max, tol, strict=False)
                tipd = boost_factor(q, "TIPD", b_max, tol, strict=False)
                rows.append({"alpha": a, "c": c, "shift": d, "law": "point" if d == 0 else "lognormal",
                             "b_gd": gd.factor, "gd_certified": gd.certified, "gd_at_ceiling": gd.at_ceiling,
                             "b_tipd": tipd.factor, "tipd_certified": tipd.certified,
                             "tipd_at_ceiling": tipd.at_ceiling})
    cfg.values["boost"].update({"alpha": tuple(alphas), "scale": tuple(scales), "shift": tuple(shifts),
                                "cap": cap, "tol": tol})
    if b_max is not None:
        cfg.values["boost"]["b_max"] = b_max
    _emit(_csv_text(BOOST_COLUMNS, rows, cfg.echo()), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    files = trace_files(args.traces)
    if not files:
        raise ConfigError("no trace files given", key="traces")
    groups: dict = {}
    first_cfg = None
    for f in files:
        tr = read_trace(f)
        key = (tr.meta.get("method", ""), tr.meta.get("alpha", ""))
        groups.setdefault(key, []).append(tr)
        if first_cfg is None:
            with open(f) as fh:
                first_cfg = json.loads(fh.readline()).get("config")
    rows = []
    for (method, alpha), traces in groups.items():
        s = compute_metrics(traces)
        for t, (f, se) in enumerate(zip(s.fdr_path, s.fdr_path_se), start=1):
            rows.append({"method": method, "alpha": alpha, "t": t, "fdr": f, "fdr_se": se})
    echo = RunConfig.from_dict(first_cfg).echo() if first_cfg else ""
    _emit(_csv_text(REPORT_COLUMNS, rows, echo, [f"traces: {len(files)}"]), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sheref", description="E-value change detection on reconfigurable sensor networks.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="INI config file (or an artifact echoing one)")
        sp.add_argument("--alpha", type=float, action="append", help="target level; repeatable")
        sp.add_argument("--method", action="append", help="SHEREF, SHEREF-GD or SHEREF-TIPD; repeatable")
        sp.add_argument("--out", help="output path (default: stdout)")

    s = sub.add_parser("simulate", help="Monte-Carlo metrics for every (method, alpha) pair")
    common(s)
    s.add_argument("--reps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--traces", action="store_true", help="write one JSON-lines trace per replication")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate, out="metrics.csv")

    d = sub.add_parser("detect", help="streaming detection on JSON-lines tick records")
    common(d, config_required=False)
    d.add_argument("--input", required=True)
    d.add_argument("--state-in")
    d.add_argument("--state-out")
    d.set_defaults(func=cmd_detect)

    b = sub.add_parser("boost", help="tabulate boosting factors over a grid")
    b.add_argument("--config")
    b.add_argument("--alpha", type=float, action="append")
    b.add_argument("--out")
    b.set_defaults(func=cmd_boost)

    r = sub.add_parser("report", help="per-tick FDR path from trace files")
    r.add_argument("traces", nargs="+", help="trace files or directories")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        where = f" [{exc.key}]" if exc.key else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MalformedRecord as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_STREAM
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
