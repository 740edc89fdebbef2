"""Command-line pipeline: simulate -> metrics -> bin -> fit, plus run-all.

Every stage is file-in/file-out and deterministic: rerunning a stage on the
same inputs reproduces its outputs byte for byte.  Each stage writes a
metadata sidecar echoing the defaults and assumption flags it applied.
Exit codes: 0 success, 1 internal error, 2 bad user input.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bands import default_band_registry, load_band_registry, resolve_band, save_band_registry
from .binning import BinnedMetricSeries, bin_by_altitude, read_binned_csv, write_binned_csv
from .errors import AdssmError, BandRangeError, InputError, InsufficientDataError
from .fitting import (FitOptions, FitReport, fit_exp, fit_exp_reduced, fit_logistic,
                      render_summary_table, write_fit_report)
from .metrics import (DEFAULT_EPS, ThresholdSpec, noise_floor, snapshot_metrics)
from .sweep import extract_band_psd, read_sweep_dataset, write_sweep_dataset
from .synth import gen_sweep_dataset, load_scenario

METRICS_COLUMNS = ("timestamp_s", "altitude_m", "band", "power_db",
                   "entropy_bits", "entropy_norm", "sparsity")


def _assumptions(eps: float = DEFAULT_EPS, percentile: float = 5.0, margin_db: float = 3.0,
                 min_count: int = 3) -> dict:
    """The defaults every stage echoes so downstream readers can see them."""
    return {
        "eps_absolute": eps,
        "welch_window": "hann",
        "welch_overlap_fraction": 0.5,
        "welch_scaling": "density",
        "percentile_convention": ("linear interpolation between the closest order "
                                  "statistics, computed on dB samples"),
        "threshold_rule": (f"{percentile:g}th-percentile noise floor plus "
                           f"{margin_db:g} dB margin, fixed per band per campaign"),
        "occupancy_comparison": "strictly greater than the threshold",
        "min_count": min_count,
        "entropy_scale": ("entropy fitted on the normalized scale; bits obtained by "
                          "multiplying with log2(band bin count)"),
    }


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require_file(path: str | Path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    return p


def _slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") or "band"


# ----------------------------------------------------------------- simulate

def cmd_simulate(scenario_path: str, out_dir: str, seed: int | None = None) -> None:
    """Generate a synthetic sweep dataset plus ground truth from a scenario."""
    scn = _require_file(scenario_path, "scenario file")
    spec = load_scenario(scn)
    seed_source = "scenario"
    if seed is not None:
        spec = replace(spec, seed=int(seed))
        seed_source = "override"
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    grid, records, truth = gen_sweep_dataset(spec)
    write_sweep_dataset(out / "sweeps.csv", out / "grid.json", grid, records)
    save_band_registry(out / "bands.json", list(spec.bands))
    truth = dict(truth)
    truth["seed_source"] = seed_source
    _write_json(out / "ground_truth.json", truth)
    _write_json(out / "simulate_meta.json", {
        "scenario": spec.name,
        "scenario_path": str(scn),
        "seed": spec.seed,
        "seed_source": seed_source,
        "n_snapshots": len(records),
        "n_grid_bins": grid.n_bins,
        "outputs": ["sweeps.csv", "grid.json", "bands.json", "ground_truth.json"],
        "assumptions": _assumptions(),
    })
    print(f"simulate: {len(records)} snapshots x {grid.n_bins} bins -> {out}")


# ------------------------------------------------------------------ metrics

def cmd_metrics(sweeps_path: str, out_dir: str, grid_path: str | None = None,
                bands_path: str | None = None, percentile: float = 5.0,
                margin_db: float = 3.0, eps: float = DEFAULT_EPS) -> None:
    """Compute per-snapshot band metrics from a sweep dataset.

    First pass pools each band over the whole campaign to fix its occupancy
    threshold; second pass emits one row per snapshot per band.
    """
    sweeps = _require_file(sweeps_path, "sweep dataset")
    grid_file = Path(grid_path) if grid_path else sweeps.parent / "grid.json"
    _require_file(grid_file, "grid file")
    if bands_path:
        band_ranges = load_band_registry(_require_file(bands_path, "band registry"))
    elif (sweeps.parent / "bands.json").is_file():
        band_ranges = load_band_registry(sweeps.parent / "bands.json")
    else:
        band_ranges = default_band_registry()

    grid, records = read_sweep_dataset(sweeps, grid_file)
    spec = ThresholdSpec(percentile=percentile, margin_db=margin_db)

    bands, skipped = [], []
    for br in band_ranges:
        try:
            bands.append(resolve_band(grid, br.name, br.f_low_hz, br.f_high_hz))
        except BandRangeError as exc:
            skipped.append({"band": br.name, "reason": str(exc)})
            print(f"warning: skipping band {br.name!r}: {exc}", file=sys.stderr)
    if not bands:
        raise InputError("no band in the registry overlaps the grid")

    floors, gammas = {}, {}
    for bd in bands:
        pool = np.concatenate([extract_band_psd(r, bd) for r in records])
        floors[bd.name] = noise_floor(pool, spec)
        gammas[bd.name] = floors[bd.name] + margin_db

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_sentinel = 0
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for rec in records:
            for bd in bands:
                ms = snapshot_metrics(rec.altitude, extract_band_psd(rec, bd),
                                      gammas[bd.name], eps=eps)
                if not np.isfinite(ms.power_db):
                    n_sentinel += 1
                writer.writerow([
                    str(float(rec.timestamp)), str(float(rec.altitude)), bd.name,
                    str(ms.power_db), str(ms.entropy_bits), str(ms.entropy_norm),
                    str(ms.sparsity),
                ])

    _write_json(out / "metrics_meta.json", {
        "sweeps_path": str(sweeps),
        "n_snapshots": len(records),
        "bands": [bd.name for bd in bands],
        "band_bin_counts": {bd.name: bd.n_bins for bd in bands},
        "noise_floor_db": floors,
        "threshold_db": gammas,
        "skipped_bands": skipped,
        "sentinel_rows": n_sentinel,
        "assumptions": _assumptions(eps=eps, percentile=percentile, margin_db=margin_db),
    })
    print(f"metrics: {len(records)} snapshots x {len(bands)} bands -> {out / 'metrics.csv'}")


def read_metrics_csv(path: str | Path) -> list[dict]:
    """Rows of a metrics CSV as dicts with floats (power may be -inf)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != METRICS_COLUMNS:
            raise InputError(f"{path}: expected columns {','.join(METRICS_COLUMNS)}")
        for raw in reader:
            try:
                rows.append({
                    "timestamp_s": float(raw["timestamp_s"]),
                    "altitude_m": float(raw["altitude_m"]),
                    "band": raw["band"],
                    "power_db": float(raw["power_db"]),
                    "entropy_bits": float(raw["entropy_bits"]),
                    "entropy_norm": float(raw["entropy_norm"]),
                    "sparsity": float(raw["sparsity"]),
                })
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}: bad row {raw!r}: {exc}") from exc
    return rows


# ---------------------------------------------------------------------- bin

METRIC_VALUE_COLUMN = {"power": "power_db", "entropy_norm": "entropy_norm",
                       "sparsity": "sparsity"}


def cmd_bin(metrics_path: str, out_dir: str, delta_h: float = 10.0,
            min_count: int = 3) -> None:
    """Aggregate metric rows into altitude bins, one series per band/metric."""
    metrics_file = _require_file(metrics_path, "metrics file")
    rows = read_metrics_csv(metrics_file)
    if not rows:
        raise InsufficientDataError(f"{metrics_file}: metrics file has no rows")

    band_order = list(dict.fromkeys(r["band"] for r in rows))
    series_list, skipped = [], []
    for band in band_order:
        band_rows = [r for r in rows if r["band"] == band]
        for metric, column in METRIC_VALUE_COLUMN.items():
            samples = [(r["altitude_m"], r[column]) for r in band_rows]
            try:
                series_list.append(bin_by_altitude(samples, delta_h=delta_h,
                                                   min_count=min_count,
                                                   band=band, metric=metric))
            except InsufficientDataError as exc:
                skipped.append({"band": band, "metric": metric, "reason": str(exc)})
                print(f"warning: {exc}", file=sys.stderr)
    if not series_list:
        raise InsufficientDataError(
            f"{metrics_file}: no band/metric series survived binning"
        )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_binned_csv(out / "binned.csv", series_list)

    carried = {}
    upstream_meta = metrics_file.parent / "metrics_meta.json"
    if upstream_meta.is_file():
        with open(upstream_meta, encoding="utf-8") as fh:
            carried = json.load(fh).get("band_bin_counts", {})
    _write_json(out / "bin_meta.json", {
        "metrics_path": str(metrics_file),
        "delta_h_m": delta_h,
        "min_count": min_count,
        "band_bin_counts": carried,
        "n_series": len(series_list),
        "skipped_series": skipped,
        "assumptions": _assumptions(min_count=min_count),
    })
    print(f"bin: {len(series_list)} series -> {out / 'binned.csv'}")


# ---------------------------------------------------------------------- fit

def _fit_one(series: BinnedMetricSeries, opts: FitOptions, q_list,
             flat_threshold: float) -> FitReport:
    if series.metric == "sparsity":
        return fit_logistic(series, opts, q_list)
    if series.metric == "entropy_norm":
        y = series.means
        scale = max(abs(float(y.mean())), 1e-12)
        if float(y.max() - y.min()) < flat_threshold * scale:
            rep = fit_exp_reduced(series, tau_fixed=None, opts=opts, q_list=q_list)
            return replace(rep, flags=rep.flags + ("entropy_flat_reduced",))
    return fit_exp(series, opts, q_list)


def _write_plot_data(out: Path, rep: FitReport, series: BinnedMetricSeries) -> None:
    slug = f"{_slug(rep.band)}_{rep.metric}"
    h_grid = np.arange(0.0, np.floor(series.centers[-1]) + 1.0, 1.0)
    values = np.atleast_1d(rep.predict(h_grid))
    with open(out / f"plot_curve_{slug}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["h_m", "value"])
        for h, v in zip(h_grid, values):
            writer.writerow([str(float(h)), str(float(v))])
    with open(out / f"plot_bins_{slug}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["center_m", "mean", "std", "count"])
        for b in series.bins:
            writer.writerow([str(float(b.center)), str(float(b.mean)),
                             str(float(b.std)), b.count])


def cmd_fit(binned_path: str, out_dir: str, q_list=(0.1, 0.5, 0.9),
            flat_threshold: float = 0.02, opts: FitOptions = FitOptions()) -> None:
    """Fit every binned series, then render reports, plot data and the
    per-band summary table."""
    binned_file = _require_file(binned_path, "binned metrics file")
    delta_h = None
    band_bin_counts: dict[str, int] = {}
    upstream_meta = binned_file.parent / "bin_meta.json"
    if upstream_meta.is_file():
        with open(upstream_meta, encoding="utf-8") as fh:
            meta = json.load(fh)
        delta_h = meta.get("delta_h_m")
        band_bin_counts = {k: int(v) for k, v in meta.get("band_bin_counts", {}).items()}

    series_list = read_binned_csv(binned_file, delta_h)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    reports, not_fitted = [], []
    for series in series_list:
        try:
            rep = _fit_one(series, opts, q_list, flat_threshold)
        except (InsufficientDataError, InputError) as exc:
            not_fitted.append({"band": series.band, "metric": series.metric,
                               "reason": str(exc)})
            print(f"warning: not fitted: {exc}", file=sys.stderr)
            continue
        reports.append(rep)
        write_fit_report(out / f"fit_{_slug(rep.band)}_{rep.metric}.json", rep)
        _write_plot_data(out, rep, series)

    with open(out / "summary_table.csv", "w", newline="", encoding="utf-8") as fh:
        fh.write(render_summary_table(reports, band_bin_counts or None))
    with open(out / "transitions.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band", "metric", "h10_m", "h50_m", "h90_m"])
        for rep in reports:
            tr = rep.transitions
            vals = [("" if not np.isfinite(v) else str(float(v)))
                    for v in (tr.h10, tr.h50, tr.h90)]
            writer.writerow([rep.band, rep.metric] + vals)

    _write_json(out / "fit_meta.json", {
        "binned_path": str(binned_file),
        "n_fitted": len(reports),
        "not_fitted": not_fitted,
        "transition_fractions": list(q_list),
        "entropy_flat_threshold": flat_threshold,
        "entropy_bits_conversion": ("band_bin_counts" if band_bin_counts
                                    else "unavailable: table keeps normalized scale"),
        "fit_options": {"max_iters": opts.max_iters, "x_tol": opts.x_tol,
                        "f_tol": opts.f_tol, "restarts": opts.restarts,
                        "seed": opts.seed},
        "extensions": ["r2 recorded for every metric in fit_*.json; the summary "
                       "table keeps only the power column"],
        "assumptions": _assumptions(),
    })
    print(f"fit: {len(reports)} fitted, {len(not_fitted)} skipped -> {out}")


# ------------------------------------------------------------------ run-all

def cmd_run_all(config_path: str) -> None:
    """Run the whole pipeline from a JSON config into one output directory."""
    cfg_file = _require_file(config_path, "config file")
    with open(cfg_file, encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad config {cfg_file}: {exc}") from exc
    if "out_dir" not in cfg:
        raise InputError(f"config {cfg_file} must set out_dir")
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    threshold = cfg.get("threshold", {})
    fit_cfg = cfg.get("fit", {})
    opts = FitOptions(
        max_iters=int(fit_cfg.get("max_iters", 2000)),
        x_tol=float(fit_cfg.get("x_tol", 1e-8)),
        f_tol=float(fit_cfg.get("f_tol", 1e-10)),
        restarts=int(fit_cfg.get("restarts", 3)),
        seed=int(fit_cfg.get("seed", 0)),
    )

    if cfg.get("scenario_path"):
        cmd_simulate(cfg["scenario_path"], str(out), seed=cfg.get("seed"))
        sweeps = out / "sweeps.csv"
        grid_path = out / "grid.json"
        bands_path = out / "bands.json"
    elif cfg.get("sweeps_path"):
        sweeps = Path(cfg["sweeps_path"])
        grid_path = Path(cfg["grid_path"]) if cfg.get("grid_path") else sweeps.parent / "grid.json"
        bands_path = Path(cfg["bands_path"]) if cfg.get("bands_path") else None
        if bands_path is None and (sweeps.parent / "bands.json").is_file():
            bands_path = sweeps.parent / "bands.json"
    else:
        raise InputError(f"config {cfg_file} must set scenario_path or sweeps_path")

    cmd_metrics(str(sweeps), str(out), grid_path=str(grid_path),
                bands_path=str(bands_path) if bands_path else None,
                percentile=float(threshold.get("percentile", 5.0)),
                margin_db=float(threshold.get("margin_db", 3.0)),
                eps=float(cfg.get("eps", DEFAULT_EPS)))
    cmd_bin(str(out / "metrics.csv"), str(out),
            delta_h=float(cfg.get("delta_h_m", 10.0)),
            min_count=int(cfg.get("min_count", 3)))
    cmd_fit(str(out / "binned.csv"), str(out),
            q_list=tuple(cfg.get("transitions_q", (0.1, 0.5, 0.9))),
            flat_threshold=float(cfg.get("entropy_flat_threshold", 0.02)),
            opts=opts)
    stages = (["simulate"] if cfg.get("scenario_path") else []) + ["metrics", "bin", "fit"]
    _write_json(out / "run_meta.json", {
        "config_path": str(cfg_file),
        "config": cfg,
        "stages": stages,
    })


# --------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adssm",
        description="Altitude-dependent spectral structure pipeline: synthesize "
                    "sweeps, compute band metrics, bin over altitude, fit response "
                    "curves and report transition heights.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic sweep dataset")
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")

    p = sub.add_parser("metrics", help="compute per-snapshot band metrics")
    p.add_argument("--sweeps", required=True, help="sweep dataset CSV")
    p.add_argument("--grid", default=None, help="grid JSON (default: grid.json next to sweeps)")
    p.add_argument("--bands", default=None,
                   help="band registry JSON (default: bands.json next to sweeps, "
                        "else the shipped registry)")
    p.add_argument("--out", required=True)
    p.add_argument("--percentile", type=float, default=5.0,
                   help="noise-floor percentile (default 5)")
    p.add_argument("--margin-db", type=float, default=3.0,
                   help="threshold margin above the floor (default 3)")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS,
                   help="entropy normalization regularizer (default 1e-20)")

    p = sub.add_parser("bin", help="aggregate metrics into altitude bins")
    p.add_argument("--metrics", required=True, help="metrics CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--delta-h", type=float, default=10.0, help="bin height in m (default 10)")
    p.add_argument("--min-count", type=int, default=3,
                   help="drop bins with fewer samples (default 3)")

    p = sub.add_parser("fit", help="fit response curves to binned series")
    p.add_argument("--binned", required=True, help="binned metrics CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--q", default="0.1,0.5,0.9",
                   help="three transition fractions (default 0.1,0.5,0.9)")
    p.add_argument("--flat-threshold", type=float, default=0.02,
                   help="relative entropy range below which the reduced fit is used")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--x-tol", type=float, default=1e-8)
    p.add_argument("--f-tol", type=float, default=1e-10)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--fit-seed", type=int, default=0)

    p = sub.add_parser("run-all", help="run the whole pipeline from a config")
    p.add_argument("--config", required=True, help="pipeline config JSON")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            cmd_simulate(args.scenario, args.out, seed=args.seed)
        elif args.command == "metrics":
            cmd_metrics(args.sweeps, args.out, grid_path=args.grid,
                        bands_path=args.bands, percentile=args.percentile,
                        margin_db=args.margin_db, eps=args.eps)
        elif args.command == "bin":
            cmd_bin(args.metrics, args.out, delta_h=args.delta_h,
                    min_count=args.min_count)
        elif args.command == "fit":
            try:
                q_list = tuple(float(v) for v in args.q.split(","))
            except ValueError as exc:
                raise InputError(f"bad --q value {args.q!r}: {exc}") from exc
            cmd_fit(args.binned, args.out, q_list=q_list,
                    flat_threshold=args.flat_threshold,
                    opts=FitOptions(max_iters=args.max_iters, x_tol=args.x_tol,
                                    f_tol=args.f_tol, restarts=args.restarts,
                                    seed=args.fit_seed))
        elif args.command == "run-all":
            cmd_run_all(args.config)
    except AdssmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
