"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import datasets
from .exceptions import GmsdbError, SingularMatrixError
from .io import CsvFormatError, dataset_csv, format_csv, read_table, write_text
from .metrics import pair_counts, rand_index, run_interval
from .pipeline import GmsdbConfig, fit, load_model, predict_hard, predict_soft, save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _generate(args) -> datasets.LabeledDataset:
    if args.preset:
        try:
            return datasets.make_preset(args.preset, seed=args.seed, noise=args.noise)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    makers = {"blobs": datasets.gen_blobs, "rings": datasets.gen_nested_rings,
              "horseshoes": datasets.gen_horseshoes}
    if args.generator not in makers:
        raise UsageError("give --preset or --generator {blobs,rings,horseshoes}")
    params = json.loads(args.params) if args.params else {}
    if args.noise is not None:
        params["noise_frac"] = args.noise
    try:
        return makers[args.generator](seed=args.seed, **params)
    except TypeError as exc:
        raise UsageError(f"bad generator parameters: {exc}") from None


def cmd_gen(args) -> int:
    ds = _generate(args)
    write_text(args.out, dataset_csv(ds.points, ds.labels, ds.spec))
    return EXIT_OK


def _config(args) -> GmsdbConfig:
    return GmsdbConfig(alpha=args.alpha, n_min=args.n_min, n_max=args.n_max,
                       restarts=args.restarts, pair_cap=args.pair_cap, ridge=args.ridge,
                       seed=args.seed, bic_patience=args.bic_patience,
                       record_full_trace=args.full_trace)


def build_report(dataset_id: str, config: GmsdbConfig, model, labels=None,
                 predicted=None, wall: float | None = None) -> dict:
    trace = model.mc_trace
    first_one = next((k for k, r in enumerate(trace) if r.mc == 1.0), None)
    timings = dict(model.stage_timings)
    if wall is not None:
        timings["wall"] = wall
    report = {
        "dataset": dataset_id,
        "config": {k: getattr(config, k) for k in config.__dataclass_fields__},
        "n_bic": model.mixture.n_components,
        "n_superclusters": model.n_superclusters,
        "chosen_epsilon": model.chosen_epsilon,
        "delta_d": model.delta_d,
        "mc_trace": {
            "iterations": len(trace),
            "first_mc_one": first_one,
            "mc_at_exit": trace[-1].mc,
            "n_superclusters": [r.n_superclusters for r in trace],
            "mc": [r.mc for r in trace],
        },
        "rand_index": None,
        "timings": timings,
    }
    if labels is not None and predicted is not None:
        report["rand_index"] = rand_index(labels, predicted)
    return report


def format_report(report: dict) -> str:
    t = report["timings"]
    lines = [
        f"dataset            {report['dataset']}",
        f"alpha              {report['config']['alpha']}",
        f"N_BIC              {report['n_bic']}",
        f"N_S                {report['n_superclusters']}",
        f"chosen epsilon     {report['chosen_epsilon']:.6g}",
        f"deltaD             {report['delta_d']:.6g}",
        f"MC iterations      {report['mc_trace']['iterations']}"
        f" (MC at exit {report['mc_trace']['mc_at_exit']:.3g})",
        f"RI                 {'n/a' if report['rand_index'] is None else format(report['rand_index'], '.6f')}",
        f"time St.1 / St.2 / St.3,4 / total [s]   "
        f"{t['stage1']:.3f} / {t['stage2']:.3f} / {t['stage34']:.3f} / {t['total']:.3f}",
    ]
    return "\n".join(lines) + "\n"


def _sidecar(path: Path) -> Path:
    # report.txt -> report.txt.json, so it never collides with a model.json next to it
    return path.with_name(path.name + ".json")


def cmd_fit(args) -> int:
    table = read_table(args.input)
    n, d = table.features.shape
    if n < 2:
        raise ValueError(f"{args.input}: need at least 2 data rows, got {n}")
    config = _config(args)
    if n < config.n_min * (d + 1):
        print(f"warning: only {n} points for d={d}; at least {config.n_min * (d + 1)} "
              "are recommended", file=sys.stderr)
    start = time.perf_counter()
    model = fit(table.features, config)
    wall = time.perf_counter() - start
    if args.model:
        save_model(model, args.model)
    predicted = predict_hard(model, table.features) if table.labels is not None else None
    spec = table.spec or {}
    dataset_id = spec.get("preset") or Path(str(args.input)).name
    report = build_report(dataset_id, config, model, table.labels, predicted, wall)
    text = format_report(report)
    sys.stdout.write(text)
    if args.report:
        path = Path(args.report)
        path.write_text(text, encoding="utf-8")
        _sidecar(path).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    table = read_table(args.input)
    if table.features.shape[1] != model.n_features:
        raise ValueError(f"dimension mismatch: model expects d={model.n_features}, "
                         f"{args.input} has d={table.features.shape[1]}")
    passthrough = table.labels is not None
    if args.soft:
        probs = predict_soft(model, table.features)
        columns = [f"p{k}" for k in range(probs.shape[1])]
        rows = [list(p) for p in probs.tolist()]
    else:
        columns = ["label"]
        rows = [[v] for v in predict_hard(model, table.features).tolist()]
    if passthrough:
        columns.append("input_label")
        for row, lab in zip(rows, table.labels.tolist()):
            row.append(lab)
    write_text(args.out, format_csv(columns, rows))
    return EXIT_OK


def cmd_grid(args) -> int:
    model = load_model(args.model)
    if model.n_features != 2:
        raise ValueError(f"decision grids need a 2-D model, this one has d={model.n_features}")
    xmin, xmax, ymin, ymax = args.bounds
    if not (xmin < xmax and ymin < ymax):
        raise ValueError(f"bounds must satisfy xmin < xmax and ymin < ymax, got {args.bounds}")
    nx, ny = (args.resolution * 2)[:2] if len(args.resolution) == 1 else args.resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 per axis")
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, nx), np.linspace(ymin, ymax, ny))
    points = np.column_stack([gx.ravel(), gy.ravel()])
    labels = predict_hard(model, points)
    rows = ([x, y, lab] for (x, y), lab in zip(points.tolist(), labels.tolist()))
    write_text(args.out, format_csv(["x0", "x1", "label"], rows))
    return EXIT_OK


def _labels_of(path, column="label"):
    table = read_table(path)
    if table.labels is None:
        raise ValueError(f"{path}: no {column!r} column")
    return table.labels


def cmd_eval(args) -> int:
    if args.runs:
        return _eval_runs(args)
    if not (args.pred and args.truth):
        raise UsageError("eval needs --pred and --truth, or --runs with --preset")
    pred, truth = _labels_of(args.pred), _labels_of(args.truth)
    c = pair_counts(truth, pred)
    result = {"rand_index": (c.tp + c.tn) / c.total, "pwtp": c.tp / c.total,
              "pwtn": c.tn / c.total, "pairs": c.total}
    print(f"RI    {result['rand_index']:.6f}\nPWTP  {result['pwtp']:.6f}\n"
          f"PWTN  {result['pwtn']:.6f}")
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def _eval_runs(args) -> int:
    if not args.preset:
        raise UsageError("--runs needs --preset")
    ris, counts, stage = [], [], {"stage1": [], "stage2": [], "stage34": [], "total": []}
    for k in range(args.runs):
        seed = args.seed + k
        try:
            ds = datasets.make_preset(args.preset, seed=seed, noise=args.noise)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
        args.seed_run = seed
        config = GmsdbConfig(alpha=args.alpha, n_min=args.n_min, n_max=args.n_max,
                             restarts=args.restarts, pair_cap=args.pair_cap, ridge=args.ridge,
                             seed=seed, bic_patience=args.bic_patience)
        model = fit(ds.points, config)
        ri = rand_index(ds.labels, predict_hard(model, ds.points))
        ris.append(ri)
        counts.append(model.n_superclusters)
        for key in stage:
            stage[key].append(model.stage_timings[key])
        print(f"seed {seed:4d}  N_BIC {model.mixture.n_components:3d}  "
              f"N_S {model.n_superclusters:3d}  RI {ri:.4f}  "
              f"time {model.stage_timings['total']:.2f}s", flush=True)
    low, high = run_interval(ris) if len(ris) > 1 else (ris[0], ris[0])
    interval = f"{low:.3f}" if round(low, 3) == round(high, 3) else f"{low:.3f}..{high:.3f}"
    means = {key: statistics.fmean(v) for key, v in stage.items()}
    print(f"RI interval (0.95)  {interval}")
    print(f"median RI           {statistics.median(ris):.4f}")
    print(f"mean time St.1 / St.2 / St.3,4 / total [s]   {means['stage1']:.3f} / "
          f"{means['stage2']:.3f} / {means['stage34']:.3f} / {means['total']:.3f}")
    if args.json:
        doc = {"preset": args.preset, "seeds": list(range(args.seed, args.seed + args.runs)),
               "rand_index": ris, "n_superclusters": counts, "interval": [low, high],
               "mean_timings": means}
        Path(args.json).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return EXIT_OK


def _add_fit_options(p):
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=50)
    p.add_argument("--restarts", type=int, default=3)
    p.add_argument("--pair-cap", type=int, default=100_000)
    p.add_argument("--ridge", type=float, default=1e-6)
    p.add_argument("--bic-patience", type=int, default=None,
                   help="stop the component sweep after this many counts without BIC improvement")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmsdb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labelled synthetic dataset")
    p.add_argument("--preset", help=f"one of: {', '.join(datasets.preset_names())}")
    p.add_argument("--generator", choices=["blobs", "rings", "horseshoes"])
    p.add_argument("--params", help="generator keyword arguments as JSON")
    p.add_argument("--noise", type=float, default=None, help="noise fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("fit", help="fit a superclusterer to a CSV dataset")
    p.add_argument("--in", dest="input", required=True)
    _add_fit_options(p)
    p.add_argument("--full-trace", action="store_true",
                   help="keep scoring radii after MC first reaches 1")
    p.add_argument("--model", help="model file to write")
    p.add_argument("--report", help="text report path; a JSON sidecar is written next to it")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="assign superclusters to new points")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--soft", action="store_true", help="emit probabilities per supercluster")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("grid", help="export 2-D decision regions")
    p.add_argument("--model", required=True)
    p.add_argument("--bounds", type=float, nargs=4, required=True,
                   metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--resolution", type=int, nargs="+", default=[100], metavar="N")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("eval", help="compare labelings or run repeated experiments")
    p.add_argument("--pred")
    p.add_argument("--truth")
    p.add_argument("--runs", type=int, default=0)
    p.add_argument("--preset")
    p.add_argument("--noise", type=float, default=None)
    _add_fit_options(p)
    p.add_argument("--json", help="write results as JSON")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gmsdb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SingularMatrixError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"gmsdb: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CsvFormatError, GmsdbError, ValueError, OSError) as exc:
        print(f"gmsdb: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
