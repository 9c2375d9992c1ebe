"""Per-dataset metrics and mean ranks on the prepared UCI datasets.

Needs the raw files in $IMB_DATA_DIR (run `wsos fetch <name>` first).
Datasets whose raw files are missing are skipped with a message.

    python scripts/uci_tables.py --datasets covertype --irs 10 --out-dir runs/uci
"""

import argparse
from pathlib import Path

from wsos import recipes
from wsos.pipeline import METHODS, PipelineConfig, run_experiment
from wsos.report import atomic_write_text, emit_report

# reference G-means for the proposed method, used only for a side-by-side column
REFERENCE_G = {("covertype", 10): 0.744}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--datasets", nargs="+", default=list(recipes.RECIPES))
    ap.add_argument("--irs", type=float, nargs="+", default=[10, 50])
    ap.add_argument("--methods", default=",".join(METHODS[:3]))
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--out-dir", default="runs/uci")
    ap.add_argument("--n-jobs", type=int, default=1)
    args = ap.parse_args()

    datasets = []
    for name in args.datasets:
        try:
            recipes.verify_cache(name)
        except recipes.FetchError as exc:
            print(f"skipping {name}: {exc}")
            continue
        for ir in args.irs:
            datasets.append(recipes.prep(name, ir))
    if not datasets:
        print("nothing to run")
        return
    methods = args.methods.split(",")
    report = run_experiment(datasets, methods, PipelineConfig(seeds=args.seeds), n_jobs=args.n_jobs)
    out = Path(args.out_dir)
    emit_report(report, out)

    lines = [f"{'dataset':>22} {'method':>15} {'F':>6} {'G':>6} {'F+G':>6} {'ref G':>6}"]
    for row in report.aggregates():
        name, ir = row["dataset"].split("_ir")
        ref = REFERENCE_G.get((name, float(ir))) if row["method"] == "proposed" else None
        lines.append(f"{row['dataset']:>22} {row['method']:>15} {row['f_measure_mean']:6.3f} "
                     f"{row['g_mean_mean']:6.3f} {row['f_plus_g_mean']:6.3f} {'' if ref is None else f'{ref:6.3f}'}")
    ranks = report.ranks()
    lines.append("")
    for metric, vals in ranks.metrics.items():
        lines.append(f"mean rank {metric}: " + "  ".join(f"{m}={r:.2f}" for m, r in zip(ranks.methods, vals)))
    text = "\n".join(lines) + "\n"
    atomic_write_text(out / "table.txt", text)
    print(text)


if __name__ == "__main__":
    main()
