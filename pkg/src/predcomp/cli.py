"""Command line interface.

Subcommands: simulate, standardize, detect, train-lstm, grid, eval,
report.  Exit codes: 0 success, 1 usage error, 2 config or data error,
3 internal error.  Every command is a pure function of its inputs plus
the seed, so re-running with the same config produces identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import lstm as lstm_mod
from .config import ConfigError, load_config
from .evaluate import (DetectorGrid, EvalRecord, Winner, average_max_fpc, find_target,
                       params_id, render_report, run_grid, select_best)
from .io import (DataError, load_model, read_detections_csv, read_labels_csv,
                 read_series_csv, save_model, write_detections_csv, write_metrics_csv,
                 write_series_csv, write_trace_csv, write_trace_svg)
from .pnc import PncConfig, run_stream
from .predictors import fit_predictor, predictor_from_dict
from .refdet import NigPrior, bocpd_detect, classic_cusum_detect, mosum_detect, ocd_detect
from .refdet.baseline import random_baseline
from .series import LabeledSeries
from .simulate import WearIntensity, sample_step_series, sample_wear_series
from .standardize import standardize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits with 2; we use 1
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# config-driven builders

def build_dataset(ds_cfg: dict, seed: int) -> LabeledSeries:
    src = ds_cfg["source"]
    kind = src["kind"]
    if kind == "wear":
        intensity = WearIntensity(a=src.get("a", 0.0), lam=src.get("lam", 1.0),
                                  c=src.get("c", 0.0), d=src.get("d", 0.0),
                                  t2=src.get("t2", 0),
                                  decay_cutoff=src.get("decay_cutoff", 0.05))
        return sample_wear_series(intensity, int(src["n"]), seed,
                                  stream=ds_cfg["id"], name=ds_cfg["id"],
                                  scale=float(src.get("scale", 1.0)))
    if kind == "step":
        return sample_step_series(src.get("pre_mean", 0.0), src.get("post_mean", 1.0),
                                  src.get("sigma", 1.0), int(src.get("cp_at", 1)),
                                  int(src["n"]), seed, stream=ds_cfg["id"], name=ds_cfg["id"])
    series = read_series_csv(src["path"], name=ds_cfg["id"])
    if src.get("labels"):
        series = LabeledSeries(series.values, read_labels_csv(src["labels"]), name=ds_cfg["id"])
    return series


def prepare_series(doc: dict, series: LabeledSeries) -> LabeledSeries:
    std = doc.get("standardize")
    if not std or not std.get("enabled", False):
        return series
    res = standardize(series, t0=int(std.get("t0", 0)), mode=std.get("mode", "offline"))
    return res.scores


def _pnc_runner(det_cfg: dict, doc: dict):
    spec = det_cfg["predictor"]
    train_prefix = int(doc.get("train_prefix", 600))
    cache: dict[str, object] = {}

    def runner(series: LabeledSeries, **params):
        fixed = dict(det_cfg.get("params", {}))
        fixed.update(params)
        cfg = PncConfig(window_len=int(fixed.get("l", 50)), horizon=int(fixed.get("b", 25)),
                        threshold=float(fixed["desInt"]), allowance=float(fixed.get("k", 0.5)),
                        direction=fixed.get("direction", "up"),
                        refit=fixed.get("refit", "never"),
                        min_refit_history=int(fixed.get("min_refit_history", 50)))
        key = series.name or str(id(series))
        if key not in cache:
            prefix = series.values[:min(train_prefix, len(series))]
            if spec["kind"] == "lstm":
                doc_model = load_model(spec["model_path"])
                cache[key] = lstm_mod.LstmPredictor(lstm_mod.LstmNet.from_dict(doc_model))
            else:
                cache[key] = fit_predictor(spec, prefix)
        detections, _ = run_stream(cache[key], cfg, series, name=det_cfg["id"])
        return detections

    return runner


def build_detector(det_cfg: dict, doc: dict) -> DetectorGrid:
    kind = det_cfg["kind"]
    fixed = dict(det_cfg.get("params", {}))
    grid = dict(det_cfg.get("grid", {}))
    if kind == "pnc":
        return DetectorGrid(det_cfg["id"], _pnc_runner(det_cfg, doc), grid)

    def runner(series: LabeledSeries, **params):
        p = dict(fixed)
        p.update(params)
        if kind == "cusum":
            dets, _ = classic_cusum_detect(series, threshold=float(p["desInt"]),
                                           allowance=float(p.get("k", 0.5)),
                                           target_window=int(p.get("window", 50)))
        elif kind == "bocpd":
            prior = NigPrior(float(p.get("mu0", 0.0)), float(p.get("kappa0", 1.0)),
                             float(p.get("alpha0", 1.0)), float(p.get("beta0", 1.0)))
            dets, _ = bocpd_detect(series, hazard=float(p["hazard"]), prior=prior,
                                   r_min=int(p.get("r_min", 5)),
                                   threshold=float(p.get("cpthreshold", 0.5)))
        elif kind == "ocd":
            dets, _ = ocd_detect(series, diag=float(p["diag"]),
                                 off_diag=p.get("offDiag"),
                                 h_tail=int(p.get("h_tail", 50)),
                                 baseline_window=int(p.get("baseline_window", 100)))
        elif kind == "mosum":
            dets, _ = mosum_detect(series, min_hist=int(p.get("minHist", 100)),
                                   hist_fact=float(p.get("histFact", 0.5)),
                                   h_band=float(p.get("h", 0.25)),
                                   level=float(p.get("level", 0.05)),
                                   harmonics=int(p.get("harmonics", 0)),
                                   period=float(p.get("period", 0.0)),
                                   monitor_from=p.get("monitor_from"))
        else:
            raise ConfigError(f"unknown detector kind {kind!r}")
        return dets

    return DetectorGrid(det_cfg["id"], runner, grid)


def _fixed_params(det_cfg: dict, overrides: list[str] | None = None) -> dict:
    """Single parameter point for `detect`.

    Grid lists must be singletons unless pinned with --set key=value.
    """
    import yaml as _yaml
    pinned = {}
    for item in overrides or []:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        pinned[key] = _yaml.safe_load(raw)
    params = dict(det_cfg.get("params", {}))
    for key, vals in det_cfg.get("grid", {}).items():
        if key in pinned:
            continue
        if len(vals) != 1:
            raise ConfigError(f"detector {det_cfg['id']!r}: `detect` needs a single value "
                              f"for {key}, got {len(vals)}; pin it with --set {key}=...")
        params[key] = vals[0]
    params.update(pinned)
    return params


def _select_cfg(doc: dict, key: str, args_value, default):
    return args_value if args_value is not None else doc.get("evaluation", {}).get(key, default)


def _load_doc(args) -> dict:
    return load_config(args.config)


def _dataset_cfg(doc: dict, dataset_id: str) -> dict:
    for ds in doc.get("datasets", []):
        if ds["id"] == dataset_id:
            return ds
    raise UsageError(f"unknown dataset id {dataset_id!r}")


def _detector_cfg(doc: dict, detector_id: str) -> dict:
    for det in doc.get("detectors", []):
        if det["id"] == detector_id:
            return det
    raise UsageError(f"unknown detector id {detector_id!r}")


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(args) -> int:
    doc = _load_doc(args)
    out = Path(args.out or doc["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": doc["seed"], "datasets": []}
    for ds in doc.get("datasets", []):
        if args.only and ds["id"] != args.only:
            continue
        series = build_dataset(ds, doc["seed"])
        path = out / f"{ds['id']}.csv"
        write_series_csv(path, series)
        manifest["datasets"].append({"id": ds["id"], "rows": len(series),
                                     "labels": [[lab.time + 1, lab.key()] for lab in series.cp_labels],
                                     "source": ds["source"]})
        print(f"wrote {path} ({len(series)} rows)")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return 0


def cmd_standardize(args) -> int:
    series = read_series_csv(args.input)
    res = standardize(series, t0=args.t0, mode=args.mode)
    write_series_csv(args.output, res.scores)
    fit = res.fit
    print(f"wrote {args.output}; flagged {len(res.flagged)} of {len(series)} scores"
          + (f"; nu_hat={fit.nu:.6f} slope={fit.slope:.6f}" if fit else "; trend not estimable"))
    return 0


def cmd_detect(args) -> int:
    doc = _load_doc(args)
    series = prepare_series(doc, build_dataset(_dataset_cfg(doc, args.dataset), doc["seed"]))
    det_cfg = _detector_cfg(doc, args.detector)
    params = _fixed_params(det_cfg, args.set)
    need_trace = bool(args.trace or args.svg)
    if det_cfg["kind"] == "pnc":
        spec = det_cfg["predictor"]
        prefix = series.values[:min(int(doc.get("train_prefix", 600)), len(series))]
        if spec["kind"] == "lstm":
            predictor = lstm_mod.LstmPredictor(lstm_mod.LstmNet.from_dict(load_model(spec["model_path"])))
        else:
            predictor = fit_predictor(spec, prefix)
        cfg = PncConfig(window_len=int(params.get("l", 50)), horizon=int(params.get("b", 25)),
                        threshold=float(params["desInt"]), allowance=float(params.get("k", 0.5)),
                        refit=params.get("refit", "never"))
        detections, stream = run_stream(predictor, cfg, series, name=det_cfg["id"],
                                        keep_trace=need_trace)
        trace = [(r.index, r.value, r.target, r.stat, cfg.threshold, r.alarm)
                 for r in stream.trace]
    else:
        grid = build_detector(det_cfg, doc)
        detections = grid.runner(series, **params)
        trace = []
        if need_trace:
            raise UsageError("--trace/--svg is only available for pnc detectors")
    pid = params_id(params)
    rows = [(series.name, det_cfg["id"], pid, d) for d in detections]
    out = args.out or f"{det_cfg['id']}_{series.name}_detections.csv"
    write_detections_csv(out, rows)
    print(f"{len(detections)} detection(s); wrote {out}")
    for _, _, _, d in rows:
        loc = "" if d.located_time is None else f" located={d.located_time + 1}"
        print(f"  t={d.detect_time + 1}{loc}")
    if args.trace:
        write_trace_csv(args.trace, trace)
        print(f"wrote trace {args.trace}")
    if args.svg:
        write_trace_svg(args.svg, trace)
        print(f"wrote {args.svg}")
    return 0


def cmd_train_lstm(args) -> int:
    doc = _load_doc(args)
    if "lstm" not in doc:
        raise ConfigError("config lacks an lstm section")
    lcfg = doc["lstm"]
    series = prepare_series(doc, build_dataset(_dataset_cfg(doc, args.dataset), doc["seed"]))
    prefix = series.values[:min(int(doc.get("train_prefix", 600)), len(series))]
    X, Y = lstm_mod.training_windows(prefix, int(lcfg["nh"]), int(lcfg["nz"]),
                                     int(lcfg.get("max_windows", 500)))
    cfg = lstm_mod.TrainConfig(hidden=int(lcfg.get("hidden", 32)),
                               epochs=int(lcfg.get("epochs", 200)),
                               batch_size=int(lcfg.get("batch_size", 32)),
                               learning_rate=float(lcfg.get("learning_rate", 1e-3)),
                               clip_norm=float(lcfg.get("clip_norm", 5.0)),
                               validation_fraction=float(lcfg.get("validation_fraction", 0.2)),
                               seed=doc["seed"])
    result = lstm_mod.train_lstm(X, Y, cfg)
    save_model(args.out, result.net.to_dict())
    if args.loss:
        with open(args.loss, "w") as fh:
            fh.write("epoch,train_loss,val_loss\n")
            for e, tl in enumerate(result.train_loss, start=1):
                vl = result.val_loss[e - 1] if e - 1 < len(result.val_loss) else ""
                fh.write(f"{e},{tl!r},{vl!r}\n")
    print(f"trained on {len(X)} windows; final train loss {result.train_loss[-1]:.6g}; "
          f"wrote {args.out}")
    return 0


def _build_all(doc: dict):
    datasets = [prepare_series(doc, build_dataset(ds, doc["seed"]))
                for ds in doc.get("datasets", [])]
    detectors = [build_detector(det, doc) for det in doc.get("detectors", [])]
    return datasets, detectors


def cmd_grid(args) -> int:
    doc = _load_doc(args)
    datasets, detectors = _build_all(doc)
    if not datasets or not detectors:
        raise ConfigError("grid needs at least one dataset and one detector")
    target_key = doc.get("evaluation", {}).get("target", "K>A")
    records = run_grid(datasets, detectors, target_key=target_key)
    out = Path(args.out or doc["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "metrics.csv", records)
    print(f"wrote {out / 'metrics.csv'} ({len(records)} runs)")
    return 0


def _read_metrics(path) -> list[EvalRecord]:
    import csv as _csv
    records = []
    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "dataset":
            raise DataError(f"{path}: not a metrics file")
        for row in reader:
            (ds, det, pid, n_det, fpc, found, arlp_s, dt, loc, valid) = row
            records.append(EvalRecord(
                dataset_id=ds, detector_id=det, params_id=pid, params={},
                n_detections=int(n_det), fpc=int(fpc), target_found=bool(int(found)),
                arlp=float(arlp_s) if arlp_s else None,
                detect_time=int(dt) - 1 if dt else None,
                located_time=int(loc) - 1 if loc else None,
                valid=bool(int(valid))))
    return records


def cmd_eval(args) -> int:
    doc = _load_doc(args)
    records = _read_metrics(args.metrics)
    ev = doc.get("evaluation", {})
    lines = []
    for scope, cap_key, cap_default in (("per_dataset", "fpc_cap", 10),
                                        ("overall", "overall_cap", 150)):
        winners = select_best(records, scope=scope, fpc_cap=ev.get(cap_key, cap_default))
        lines.append(render_report(winners, title=f"{scope} winners"))
    subset = ev.get("subset") or []
    if subset:
        winners = select_best(records, scope="subset", fpc_cap=ev.get("subset_cap", 30),
                              datasets=subset)
        lines.append(render_report(winners, title=f"subset winners ({', '.join(subset)})"))
    base_cfg = ev.get("baseline")
    if base_cfg:
        lines.append(_baseline_section(doc, records, base_cfg))
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _baseline_section(doc: dict, records: list[EvalRecord], base_cfg: dict) -> str:
    target_key = doc.get("evaluation", {}).get("target", "K>A")
    reps = int(base_cfg.get("repetitions", 100))
    budgets = base_cfg.get("n_fp", [0])
    out = ["random baseline", "===============", ""]
    for ds_cfg in doc.get("datasets", []):
        series = prepare_series(doc, build_dataset(ds_cfg, doc["seed"]))
        target = find_target(series, target_key)
        if target is None:
            continue
        for budget in budgets:
            n_fp = int(round(average_max_fpc([r for r in records if r.dataset_id == series.name]))) \
                if budget == "avg_max" else int(budget)
            res = random_baseline(series, target, n_fp, repetitions=reps, seed=doc["seed"])
            label = f"avg_max={n_fp}" if budget == "avg_max" else str(n_fp)
            out.append(f"{series.name:<12} n_fp={label:<12} fpc={res.fpc_mean:>7.2f} "
                       f"arlp={res.arlp_mean:>8.2f}")
    return "\n".join(out) + "\n"


def cmd_report(args) -> int:
    records = _read_metrics(args.metrics)
    scope = args.scope
    kwargs = {}
    if scope == "subset":
        if not args.datasets:
            raise UsageError("report --scope subset needs --datasets")
        kwargs["datasets"] = args.datasets.split(",")
    winners = select_best(records, scope=scope, fpc_cap=args.cap,
                          reversed_rule=args.reversed, **kwargs)
    text = render_report(winners, title=f"{scope} winners"
                         + (" (reversed rule)" if args.reversed else ""))
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    p = _Parser(prog="predcomp",
                description="Streaming change point detection with predictive monitoring.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate the configured datasets as CSV")
    sp.add_argument("-c", "--config", required=True)
    sp.add_argument("--only", help="only this dataset id")
    sp.add_argument("--out", help="output directory (default: config output_dir)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("standardize", help="standardize a series CSV")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--t0", type=int, default=0)
    sp.add_argument("--mode", choices=["offline", "online"], default="offline")
    sp.set_defaults(func=cmd_standardize)

    sp = sub.add_parser("detect", help="run one detector on one dataset")
    sp.add_argument("-c", "--config", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--detector", required=True)
    sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="pin one grid parameter (repeatable)")
    sp.add_argument("--out", help="detections CSV path")
    sp.add_argument("--trace", help="write the chart trajectory CSV here")
    sp.add_argument("--svg", help="write a minimal SVG of the chart here")
    sp.set_defaults(func=cmd_detect)

    sp = sub.add_parser("train-lstm", help="train the LSTM predictor on a dataset prefix")
    sp.add_argument("-c", "--config", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", required=True, help="model JSON path")
    sp.add_argument("--loss", help="loss history CSV path")
    sp.set_defaults(func=cmd_train_lstm)

    sp = sub.add_parser("grid", help="run the full detector x dataset grid")
    sp.add_argument("-c", "--config", required=True)
    sp.add_argument("--out", help="output directory (default: config output_dir)")
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("eval", help="winners and random baseline from metrics.csv")
    sp.add_argument("-c", "--config", required=True)
    sp.add_argument("--metrics", required=True)
    sp.add_argument("--out", help="write the evaluation text here (default: stdout)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("report", help="render a winners table from metrics.csv")
    sp.add_argument("--metrics", required=True)
    sp.add_argument("--scope", choices=["per_dataset", "overall", "subset"],
                    default="per_dataset")
    sp.add_argument("--cap", type=float, default=None, help="Fpc cap override")
    sp.add_argument("--datasets", help="comma-separated ids for subset scope")
    sp.add_argument("--reversed", action="store_true",
                    help="rank by ArlP first, then Fpc")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 0
    except Exception as exc:  # anything else is an internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
