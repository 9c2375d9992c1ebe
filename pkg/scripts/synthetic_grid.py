"""G-mean of each method across the 8 synthetic configurations (D x n x IR).

Writes results.json / results.csv, a G-mean-vs-IR chart per (D, n) cell and a
plain-text summary with mean ranks.

    python scripts/synthetic_grid.py --out-dir runs/synthetic --seeds 0 1 2
    python scripts/synthetic_grid.py --quick          # n=1000 only, one seed
"""

import argparse
import itertools
import time
from pathlib import Path

from wsos.dataset import GenSpec, generate_synthetic
from wsos.numerics import RandomStream
from wsos.pipeline import PipelineConfig, run_experiment
from wsos.report import atomic_write_text, emit_report, line_chart_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="runs/synthetic")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--methods", default="proposed,smote_nn,rus_nn")
    ap.add_argument("--folds", type=int, default=5)
    ap.add_argument("--n-jobs", type=int, default=1)
    ap.add_argument("--quick", action="store_true", help="only n_negative=1000")
    args = ap.parse_args()

    dims, sizes, irs = (20, 100), ((1000,) if args.quick else (1000, 5000)), (10, 50)
    methods = args.methods.split(",")
    datasets = [generate_synthetic(GenSpec(D, n, ir), RandomStream(0, (D, n, ir)))
                for D, n, ir in itertools.product(dims, sizes, irs)]
    cfg = PipelineConfig(folds=args.folds, seeds=args.seeds)
    t0 = time.perf_counter()
    report = run_experiment(datasets, methods, cfg, n_jobs=args.n_jobs,
                            progress=lambda c: print(f"  {c.dataset} {c.method} s{c.seed} f{c.fold} "
                                                     f"G={c.metrics.g_mean:.3f}", flush=True))
    out = Path(args.out_dir)
    emit_report(report, out)

    lines = [f"{len(report.cells)} cells in {time.perf_counter() - t0:.0f}s", ""]
    for D, n in itertools.product(dims, sizes):
        names = [f"syn_D{D}_n{n}_IR{ir}" for ir in irs]
        series = {m: [float(report.values(d, m, "g_mean").mean()) for d in names] for m in methods}
        atomic_write_text(out / f"g_mean_D{D}_n{n}.svg",
                          line_chart_svg([str(ir) for ir in irs], series, title=f"G-mean, D={D}, n={n}",
                                         ylabel="g_mean"))
        for d in names:
            lines.append(d + "  " + "  ".join(f"{m}={report.values(d, m, 'g_mean').mean():.3f}" for m in methods))
    ranks = report.ranks()
    lines += ["", "mean rank (lower is better)"]
    for metric, vals in ranks.metrics.items():
        lines.append(f"  {metric:>10}: " + "  ".join(f"{m}={r:.2f}" for m, r in zip(ranks.methods, vals)))
    text = "\n".join(lines) + "\n"
    atomic_write_text(out / "summary.txt", text)
    print(text)


if __name__ == "__main__":
    main()
