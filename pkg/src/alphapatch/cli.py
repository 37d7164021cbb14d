"""Command line front-end: ``run``, ``sweep`` and ``analyze``.

Exit codes: 0 the run reached t_end, 2 a blow-up verdict was measured,
1 usage or I/O failure.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, build_state, load_yaml, parse_config, set_path
from .curve import write_curve_csv
from .diagnostics import BoundCurve, bound_exponent, calibrate_constant, dumps17, read_ndjson
from .integrator import Snapshot, TerminationVerdict, run

EXIT_OK, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2

RESOLVED_NAME = "resolved_config.yaml"


def _exit_code(verdict: TerminationVerdict) -> int:
    return EXIT_BLOWUP if verdict.is_blowup else EXIT_OK


def execute(cfg: RunConfig, out_dir: str | Path) -> TerminationVerdict:
    """Run one configuration and write its output tree under ``out_dir``.

    Raises OSError on I/O failures and ConfigError on bad initial data.
    """
    out = Path(out_dir)
    state = build_state(cfg)
    out.mkdir(parents=True, exist_ok=True)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for old in snap_dir.glob("curve_*.csv"):
        old.unlink()
    (out / RESOLVED_NAME).write_text(cfg.to_yaml(), encoding="utf-8")

    with open(out / "series.ndjson", "w", encoding="utf-8") as series:

        def on_record(rec) -> None:
            series.write(rec.to_json() + "\n")

        def on_snapshot(snap: Snapshot) -> None:
            for i, curve in enumerate(snap.state.curves):
                write_curve_csv(curve, snap_dir / f"curve_{i}_{snap.step:06d}.csv")

        _, verdict = run(state, cfg.ctrl, on_record=on_record, on_snapshot=on_snapshot)

    (out / "verdict.json").write_text(dumps17(verdict.to_dict()) + "\n", encoding="utf-8")
    return verdict


def _config_from_file(path: str) -> RunConfig:
    p = Path(path)
    return parse_config(p.read_text(encoding="utf-8"), base_dir=p.parent)


def cmd_run(args: argparse.Namespace) -> int:
    try:
        cfg = _config_from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.output_dir or cfg.output_dir
    try:
        verdict = execute(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{verdict.reason} at t = {verdict.t_final:.6g}" + (f" ({verdict.detail})" if verdict.detail else ""))
    return _exit_code(verdict)


def _slug(param: str, value) -> str:
    text = f"{param}={value}"
    return re.sub(r"[^A-Za-z0-9_.=+-]", "_", text)


def _sweep_entry(job: tuple[dict, str, object, str, str]) -> dict:
    """One sweep value: validate, run, summarise.  Never raises."""
    base_doc, param, value, base_dir, out_dir = job
    summary = {"value": value, "verdict": None, "t_final": None, "supF": None, "h3": None}
    try:
        doc = set_path(base_doc, param, value)
        cfg = parse_config(doc, base_dir=base_dir)
        verdict = execute(cfg, out_dir)
    except (ConfigError, OSError) as exc:
        summary.update(verdict="error", detail=str(exc))
        return summary
    recs = read_ndjson(Path(out_dir) / "series.ndjson")
    last = recs[-1]
    summary.update(
        verdict=verdict.reason,
        t_final=verdict.t_final,
        supF=max(p.supF for p in last.patches),
        h3=max(p.h3 for p in last.patches),
    )
    return summary


def cmd_sweep(args: argparse.Namespace) -> int:
    values = [load_yaml(v) for tok in args.values for v in tok.split(",") if v.strip()]
    if not values:
        print("usage error: --values needs at least one value", file=sys.stderr)
        return EXIT_USAGE
    try:
        path = Path(args.config)
        base_doc = load_yaml(path.read_text(encoding="utf-8"))
        base_cfg = parse_config(base_doc, base_dir=path.parent)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    root = Path(args.output_dir or base_cfg.output_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    jobs = [
        (base_doc, args.param, v, str(path.parent), str(root / f"{i:03d}_{_slug(args.param, v)}"))
        for i, v in enumerate(values)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_entry, jobs))
    else:
        results = [_sweep_entry(j) for j in jobs]

    with open(root / "summary.ndjson", "w", encoding="utf-8") as fh:
        for r in results:
            fh.write(dumps17(r) + "\n")
    for r in results:
        print(f"{args.param} = {r['value']}: {r['verdict']}")
    if any(r["verdict"] == "error" for r in results):
        return EXIT_USAGE
    return EXIT_BLOWUP if any(r["verdict"] != "reached_t_end" for r in results) else EXIT_OK


_OBSERVABLES = ("area", "l2", "h3", "c2", "c2half", "supF", "A", "udef", "tdef")


def analyze_dir(run_dir: Path, alpha: float | None = None) -> dict:
    """Fit the growth bound to one run and write analysis.ndjson plus .dat columns."""
    series = run_dir / "series.ndjson"
    if not series.is_file():
        raise FileNotFoundError(f"missing {series}")
    try:
        records = read_ndjson(series)
    except (ValueError, KeyError, TypeError) as exc:
        raise ValueError(f"malformed {series}: {exc}") from None
    if alpha is None:
        resolved = run_dir / RESOLVED_NAME
        if not resolved.is_file():
            raise FileNotFoundError(f"missing {resolved}; pass --alpha")
        alpha = float(load_yaml(resolved.read_text(encoding="utf-8"))["alpha"])
    if len(records) < 2:
        raise ValueError(f"{series}: need at least two records")

    t = np.array([r.t for r in records])
    q = np.array([r.growth_observable for r in records])
    if not np.isfinite(q).all():
        # the bound cannot dominate an infinite observable; fit the finite prefix
        keep = np.isfinite(q)
        keep[np.argmin(keep):] = False
        t, q = t[keep], q[keep]
    b = BoundCurve(alpha, float(q[0]))
    try:
        C = calibrate_constant(list(zip(t, q)), b)
        expiry, fit_note = b.with_constant(C).expiry_time, ""
    except ValueError as exc:
        # a property of the run, not a broken file: keep the other outputs
        C, expiry, fit_note = None, None, str(exc)

    result = {
        "run": str(run_dir),
        "alpha": alpha,
        "exponent": bound_exponent(alpha),
        "q0": float(q[0]),
        "C": C,
        "expiry": expiry,
        "fit_note": fit_note,
        "t_last": float(records[-1].t),
        "max_udef": max(p.udef for r in records for p in r.patches),
        "max_tdef": max(p.tdef for r in records for p in r.patches),
        "max_area_drift": max(
            abs(r.patches[i].area - records[0].patches[i].area) / abs(records[0].patches[i].area)
            for r in records
            for i in range(len(r.patches))
        ),
        "max_l2_drift": max(
            abs(r.patches[i].l2 - records[0].patches[i].l2) for r in records for i in range(len(r.patches))
        ),
    }
    (run_dir / "analysis.ndjson").write_text(dumps17(result) + "\n", encoding="utf-8")

    cols = run_dir / "columns"
    cols.mkdir(exist_ok=True)
    times = [r.t for r in records]

    def write_col(name: str, values) -> None:
        with open(cols / f"{name}.dat", "w", encoding="utf-8") as fh:
            for ti, vi in zip(times, values):
                fh.write(f"{ti:.16e} {_dat(vi)}\n")

    write_col("growth", [r.growth_observable for r in records])
    write_col("dt", [r.dt for r in records])
    write_col("max_speed", [r.max_speed for r in records])
    if records[0].min_dist is not None:
        write_col("min_dist", [r.min_dist for r in records])
    for i in range(len(records[0].patches)):
        for key in _OBSERVABLES:
            write_col(f"patch{i}_{key}", [getattr(r.patches[i], key) for r in records])
    return result


def _dat(v: float) -> str:
    return format(v, ".16e") if math.isfinite(v) else "nan"


def cmd_analyze(args: argparse.Namespace) -> int:
    failures = 0
    for d in args.dirs:
        try:
            res = analyze_dir(Path(d), args.alpha)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            failures += 1
            print(f"{d}: {exc}", file=sys.stderr)
            continue
        if res["C"] is None:
            print(f"{d}: no fit ({res['fit_note']})")
        else:
            print(f"{d}: C = {res['C']:.6g}, expiry = {res['expiry']:.6g}")
    return EXIT_USAGE if failures == len(args.dirs) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alphapatch", description="alpha-patch contour dynamics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="evolve one configuration")
    p.add_argument("config")
    p.add_argument("--output-dir", help="overrides output_dir from the config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="one run per value of a config parameter")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="dotted key path, e.g. alpha or patches[0].params.radius")
    p.add_argument("--values", required=True, nargs="+", help="values, space- or comma-separated")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--output-dir", help="overrides output_dir from the config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="fit the growth bound to finished runs")
    p.add_argument("dirs", nargs="+")
    p.add_argument("--alpha", type=float, help="alpha when resolved_config.yaml is absent")
    p.set_defaults(func=cmd_analyze)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
