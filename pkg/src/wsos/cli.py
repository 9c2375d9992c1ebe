"""Command-line front end.

Exit codes: 0 success, 1 runtime or configuration error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import csnca, recipes
from .dataset import Dataset, GenSpec, apply_scaler, dataset_to_rows, fit_scaler, generate_synthetic, load_csv, \
    pca_reduce
from .numerics import RandomStream
from .oversample import gss_oversample
from .pipeline import METHODS, TrainedPipeline, evaluate, fit_method, run_experiment
from .report import atomic_write_text, csv_text, emit_report, line_chart_svg, metric_by_dataset_svgs, scatter_svg

log = logging.getLogger("wsos")


def _write_dataset(ds: Dataset, out: Path) -> None:
    header, rows = dataset_to_rows(ds)
    atomic_write_text(out, csv_text(header, rows))


def _echo(out: Path, doc: dict) -> None:
    """Write the resolved settings of a single-file command next to its output."""
    atomic_write_text(out.with_name(out.name + ".resolved.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _run_doc(args) -> dict:
    doc = cfgmod.load(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "set", None) or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise cfgmod.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        cfgmod.set_path(doc, key, _parse_value(val))
    if getattr(args, "seed", None) is not None:
        cfgmod.set_path(doc, "pipeline.seeds", [args.seed])
    return cfgmod.resolve(doc)


def load_dataset_spec(spec: dict, base: Path | None = None) -> Dataset:
    name = spec["name"]
    if "synthetic" in spec:
        s = spec["synthetic"]
        ds = generate_synthetic(GenSpec(s["dims"], s["n_negative"], s["imbalance_ratio"]),
                                RandomStream(s.get("seed", 0)))
    elif "csv" in spec:
        path = Path(spec["csv"])
        if base is not None and not path.is_absolute():
            path = base / path
        ds = load_csv(path, spec.get("label_column", "label"))
    else:
        ds = recipes.prep(spec["recipe"], spec["ir"], spec.get("seed", 0))
    return Dataset(ds.features, ds.labels, name, ds.feature_names)


# ---- subcommands -------------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    ds = generate_synthetic(GenSpec(args.dims, args.n_negative, args.ir), RandomStream(args.seed))
    out = Path(args.out)
    _write_dataset(ds, out)
    _echo(out, {"dims": args.dims, "n_negative": args.n_negative, "ir": args.ir, "seed": args.seed})
    print(f"wrote {out}: {ds.n_neg} negatives, {ds.n_pos} positives, {ds.dim} features")
    return 0


def cmd_fetch(args) -> int:
    for p in recipes.fetch(args.name, manifest=args.manifest, force=args.force):
        print(p)
    return 0


def cmd_prep(args) -> int:
    ds = recipes.prep(args.name, args.ir, args.seed, manifest=args.manifest, n_negative=args.n_negative)
    out = Path(args.out) if args.out else recipes.data_dir() / "prepared" / f"{args.name}_ir{args.ir:g}_s{args.seed}.csv"
    _write_dataset(ds, out)
    _echo(out, {"recipe": args.name, "ir": args.ir, "seed": args.seed, "n_negative": ds.n_neg})
    print(f"wrote {out}: {ds.n_neg} negatives, {ds.n_pos} positives, {ds.dim} features")
    return 0


def cmd_resample(args) -> int:
    doc = _run_doc(args)
    pcfg = cfgmod.pipeline_config(doc)
    ds = load_csv(args.data, args.label_column)
    ds = apply_scaler(fit_scaler(ds), ds)
    stream = RandomStream(pcfg.seeds[0])
    if args.reduce == "csnca":
        res = csnca.fit(ds, replace(pcfg.csnca, d=min(pcfg.csnca.d, ds.dim)), stream.child(3))
        ds = ds.with_features(csnca.project(res.P, ds.features))
    elif args.reduce == "pca":
        ds, _ = pca_reduce(ds, min(pcfg.csnca.d, ds.dim))
    soft = gss_oversample(ds, pcfg.gss, stream.child(5))
    out = Path(args.out)
    header, rows = soft.to_rows()
    atomic_write_text(out, csv_text(header, rows))
    _echo(out, {**doc, "data": str(args.data), "reduce": args.reduce})
    print(f"wrote {out}: {len(soft)} rows ({soft.n_synthetic} synthetic, status {soft.status})")
    return 0


def cmd_train(args) -> int:
    doc = _run_doc(args)
    pcfg = cfgmod.pipeline_config(doc)
    ds = load_csv(args.data, args.label_column)
    pipe = fit_method(args.method, ds, pcfg, RandomStream(pcfg.seeds[0]))
    out = Path(args.out)
    atomic_write_text(out, json.dumps(pipe.to_dict(), sort_keys=True) + "\n")
    _echo(out, {**doc, "data": str(args.data), "method": args.method})
    print(f"wrote {out}")
    return 0


def cmd_eval(args) -> int:
    pipe = TrainedPipeline.from_dict(json.loads(Path(args.model).read_text(encoding="utf-8")))
    ds = load_csv(args.data, args.label_column)
    cm, ms = evaluate(pipe, ds)
    result = {"confusion": cm.to_dict(), "metrics": ms.to_dict()}
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(Path(args.out), text)
    sys.stdout.write(text)
    return 0


def cmd_bench(args) -> int:
    doc = _run_doc(args)
    if args.out_dir:
        doc["output_dir"] = args.out_dir
    if args.methods:
        doc["methods"] = args.methods.split(",")
        cfgmod.validate(doc)
    if not doc["datasets"]:
        raise cfgmod.ConfigError("invalid config at datasets: no datasets given")
    out_dir = Path(doc["output_dir"])
    cfgmod.dump(doc, out_dir / "resolved-config.json")
    base = Path(args.config).parent if args.config else None
    datasets = [load_dataset_spec(s, base) for s in doc["datasets"]]
    pcfg = cfgmod.pipeline_config(doc)

    def progress(cell):
        print(f"{cell.dataset} {cell.method} seed={cell.seed} fold={cell.fold} "
              f"F={cell.metrics.f_measure:.3f} G={cell.metrics.g_mean:.3f}", flush=True)

    report = run_experiment(datasets, doc["methods"], pcfg, n_jobs=doc["n_jobs"],
                            progress=None if args.quiet else progress)
    for p in emit_report(report, out_dir):
        print(f"wrote {p}")
    if doc["plots"]:
        p = out_dir / "g_mean_by_dataset.svg"
        atomic_write_text(p, metric_by_dataset_svgs(report, "g_mean"))
        print(f"wrote {p}")
    for row in report.aggregates():
        print(f"{row['dataset']:>24} {row['method']:>15}  F={row['f_measure_mean']:.3f}  "
              f"G={row['g_mean_mean']:.3f}  F+G={row['f_plus_g_mean']:.3f}")
    return 0


def cmd_plot(args) -> int:
    out = Path(args.out)
    if args.results:
        rep = json.loads(Path(args.results).read_text(encoding="utf-8"))
        info = rep["dataset_info"]
        order = sorted(rep["datasets"], key=lambda d: info[d]["ir"])
        series = {}
        for m in rep["methods"]:
            series[m] = [float(np.mean([c[args.metric] for c in rep["cells"] if c["dataset"] == d and c["method"] == m]))
                         for d in order]
        ticks = [f"{info[d]['ir']:g}" for d in order]
        atomic_write_text(out, line_chart_svg(ticks, series, title=f"{args.metric} vs IR", ylabel=args.metric))
    else:
        if args.soft:
            import csv

            with open(args.data, newline="", encoding="utf-8") as fh:
                rows = list(csv.DictReader(fh))
            fcols = [k for k in rows[0] if k.startswith("f") and k[1:].isdigit()]
            X = np.array([[float(r[c]) for c in fcols] for r in rows])
            lab = np.array([float(r["p_pos"]) for r in rows])
            origin = np.array([1 if r["origin"] == "synthetic" else 0 for r in rows])
        else:
            ds = load_csv(args.data, args.label_column)
            X, lab, origin = ds.features, ds.labels, None
        if X.shape[1] > 2:
            X = pca_reduce(Dataset(X, (lab >= 0.5).astype(int)), 2)[0].features
        elif X.shape[1] < 2:
            raise ValueError("need at least 2 feature columns to plot")
        atomic_write_text(out, scatter_svg(X, lab, origin, title=Path(args.data).name))
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsos", description="Weakly supervised oversampling for imbalanced data")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value, e.g. pipeline.bef.K=3")
        sp.add_argument("--seed", type=int, help="shorthand for pipeline.seeds=[SEED]")

    sp = sub.add_parser("gen-data", help="generate a synthetic imbalanced dataset")
    sp.add_argument("--dims", type=int, required=True)
    sp.add_argument("--n-negative", type=int, required=True)
    sp.add_argument("--ir", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_data)

    sp = sub.add_parser("fetch", help="download a UCI dataset into $IMB_DATA_DIR")
    sp.add_argument("name", choices=recipes.RECIPES)
    sp.add_argument("--manifest", help="alternative manifest file")
    sp.add_argument("--force", action="store_true", help="re-download even if cached")
    sp.set_defaults(func=cmd_fetch)

    sp = sub.add_parser("prep", help="apply a dataset recipe to cached raw files")
    sp.add_argument("name", choices=recipes.RECIPES)
    sp.add_argument("--ir", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-negative", type=int)
    sp.add_argument("--manifest")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_prep)

    sp = sub.add_parser("resample", help="graph semi-supervised SMOTE on a CSV dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--label-column", default="label")
    sp.add_argument("--reduce", choices=["none", "pca", "csnca"], default="csnca")
    sp.add_argument("--out", required=True)
    run_opts(sp)
    sp.set_defaults(func=cmd_resample)

    sp = sub.add_parser("train", help="fit a pipeline on a CSV dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--label-column", default="label")
    sp.add_argument("--method", choices=METHODS, default=METHODS[0])
    sp.add_argument("--out", required=True)
    run_opts(sp)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a trained pipeline on a CSV dataset")
    sp.add_argument("--model", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--label-column", default="label")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("bench", help="cross-validated benchmark over datasets and methods")
    run_opts(sp)
    sp.add_argument("--out-dir")
    sp.add_argument("--methods", help="comma-separated method list")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("plot", help="SVG scatter of a dataset or metric-vs-IR chart of a results file")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--data")
    src.add_argument("--results")
    sp.add_argument("--soft", action="store_true", help="--data is a resample output")
    sp.add_argument("--label-column", default="label")
    sp.add_argument("--metric", default="g_mean", choices=["f_measure", "g_mean", "f_plus_g"])
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors (2) and --help (0) become return codes
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # noqa: BLE001 - top-level diagnostic
        log.debug("failure", exc_info=True)
        print(f"wsos {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
