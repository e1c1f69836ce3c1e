"""Command-line front end: `cvalues compare` and `cvalues simulate`.

File formats
------------
* vector files: single-column CSV with header ``value``
* matrix files: headerless dense CSV, row-major
* covariance: a dense matrix file, a diagonal vector file (``--sigma-diag``),
  or a plain number in the config for isotropic noise

`compare` writes a JSON result
``{c_value, bound_curve, selected_at_alpha, estimator_summaries, warnings}``;
`simulate <name>` writes ``<out>.csv`` (one row per replicate record, columns
documented in `cvalues.simulation`) and ``<out>.json`` (the summary).

Exit codes: 0 success, 2 user error (bad files, config, or names),
3 numerical failure.
"""

import argparse
import json
import sys

import numpy as np

from .errors import NumericalError, ValidationError
from .pipeline import compare
from .simulation import EXPERIMENTS, ExperimentConfig, run_experiment

USER_ERROR, NUMERICAL_ERROR = 2, 3


def read_vector(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != "value":
                raise ValidationError(
                    f"vector file {path} must have the single header 'value', "
                    f"got {header!r}"
                )
            values = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                try:
                    values.append(float(line))
                except ValueError as exc:
                    raise ValidationError(
                        f"vector file {path}, row {lineno}: cannot parse {line!r}"
                    ) from exc
    except OSError as exc:
        raise ValidationError(f"cannot read vector file {path}: {exc}") from exc
    if not values:
        raise ValidationError(f"vector file {path} is empty")
    return np.array(values)


def read_matrix(path):
    try:
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rows.append([float(v) for v in line.split(",")])
                except ValueError as exc:
                    raise ValidationError(
                        f"matrix file {path}, row {lineno}: cannot parse"
                    ) from exc
    except OSError as exc:
        raise ValidationError(f"cannot read matrix file {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"matrix file {path} is empty")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValidationError(f"matrix file {path} has ragged rows")
    return np.array(rows)


def write_vector(path, values):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value\n")
        for v in np.asarray(values, float):
            fh.write("%.17g\n" % v)


def write_matrix(path, matrix):
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(matrix, float):
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc


def _load_compare_data(model, sigma_diag_flag):
    data = {}
    for key in ("y", "z", "y_train", "z_aux", "labels"):
        if key in model:
            data[key] = read_vector(model[key])
    for key in ("X", "coords", "covariates", "x_train", "w_aux", "x_test"):
        if key in model:
            data[key] = read_matrix(model[key])
    if "sigma" in model:
        sigma = model["sigma"]
        if isinstance(sigma, (int, float)):
            data["sigma"] = float(sigma)
        elif sigma_diag_flag:
            data["sigma"] = read_vector(sigma)
            data["sigma_diag"] = data["sigma"]
        else:
            data["sigma"] = read_matrix(sigma)
    if "sigma_diag" in model:
        data["sigma_diag"] = read_vector(model["sigma_diag"])
        data.setdefault("sigma", data["sigma_diag"])
    return data


def cmd_compare(args):
    config = _load_config(args.config)
    model = config.get("model", {})
    if args.alpha is not None:
        config["alpha"] = args.alpha
    if args.out is not None:
        config["output"] = args.out
    if args.seed is not None:
        config["seed"] = args.seed
    for key in ("default", "alternative"):
        if key not in config:
            raise ValidationError(f"compare config needs a {key!r} estimator spec")
    alpha = float(config.get("alpha", 0.95))
    output = config.get("output", "comparison.json")

    data = _load_compare_data(model, args.sigma_diag)
    result = compare(
        data, config["default"], config["alternative"], alpha,
        berry_esseen=args.berry_esseen, bound=config.get("bound", "auto"),
    )
    result["seed"] = config.get("seed")
    with open(output, "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"c_value={result['c_value']:.6f} selected={result['selected_at_alpha']} "
          f"(alpha={alpha:g}) -> {output}")
    return 0


def _parse_grid(text):
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ValidationError(f"cannot parse grid {text!r}") from exc


def cmd_simulate(args):
    config_file = _load_config(args.config)
    extra = dict(config_file.get("extra", {}))
    kwargs = {
        "experiment": args.experiment,
        "seed": args.seed if args.seed is not None else config_file.get("seed", 0),
        "workers": args.workers,
        "extra": extra,
    }
    if args.n is not None:
        kwargs["n"] = args.n
    if args.reps is not None:
        kwargs["reps"] = args.reps
    elif args.experiment == "pitfall":
        kwargs["reps"] = 5000  # the demonstration is defined at this scale
    if args.tau is not None:
        kwargs["tau"] = args.tau
    if args.theta_grid is not None:
        kwargs["theta_grid"] = _parse_grid(args.theta_grid)
    if args.alpha_grid is not None:
        kwargs["alpha_grid"] = _parse_grid(args.alpha_grid)
    config = ExperimentConfig(**kwargs)

    report = run_experiment(config)
    out = args.out or f"{args.experiment}_report"
    report.to_csv(out + ".csv")
    report.to_json(out + ".json")
    print(f"{args.experiment}: {len(report.records)} records -> {out}.csv, {out}.json")
    _print_headline(report)
    return 0


def _print_headline(report):
    s = report.summary
    if "coverage" in s:
        worst = min(
            v["coverage"] - float(k.split("alpha=")[1])
            for k, v in s["coverage"].items()
        )
        print(f"  worst coverage margin over nominal: {worst:+.4f}")
    if "pitfall" in s:
        p = s["pitfall"]
        print(f"  MLE smaller loss fraction: {p['mle_smaller_loss_fraction']:.4f}"
              f" (se {p['mle_smaller_loss_se']:.4f})")
        print(f"  risk default {p['risk_default']:.4f} vs alternative "
              f"{p['risk_alternative']:.4f}")
    if "logistic" in s:
        ls = s["logistic"]
        if "slope_approx_vs_exact_map" in ls:
            print(f"  approx-vs-exact MAP slope: {ls['slope_approx_vs_exact_map']:.3f}")
            print(f"  MLE-vs-truth slope: {ls['slope_mle_vs_truth']:.3f}")
    if "gp" in s:
        g = s["gp"]
        print(f"  median c (multi-scale data): {g['median_c_under_multi_scale_data']:.4f}")
        print(f"  baseline mis-selection rate: {g['baseline_mis_selection_rate']:.4f}")
        print(f"  sequential mis-selection rate: {g['sequential_mis_selection_rate']:.4f}"
              f" (budget {g['sequential_budget']:.2f})")
    if "selection" in s:
        for point, entry in s["selection"].items():
            sure = entry["sure"]
            print(f"  {point}: SURE wrong {sure['wrong_pct']:.1f}%, "
                  f"alternative reported {sure['alternative_reported_pct']:.1f}%")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cvalues",
        description="Confidence measures for replacing a default estimate "
                    "with an alternative",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cmp = sub.add_parser("compare", help="compute a c-value from data files")
    p_cmp.add_argument("--config", required=True, help="JSON run configuration")
    p_cmp.add_argument("--alpha", type=float, default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--out", default=None)
    p_cmp.add_argument("--sigma-diag", action="store_true",
                       help="interpret the sigma file as a diagonal vector")
    p_cmp.add_argument("--berry-esseen", action="store_true",
                       help="spend the coverage correction before bounding")
    p_cmp.set_defaults(fn=cmd_compare)

    p_sim = sub.add_parser("simulate", help="run a named simulation experiment")
    p_sim.add_argument("experiment", choices=EXPERIMENTS,
                       metavar="experiment",
                       help="one of: " + ", ".join(EXPERIMENTS))
    p_sim.add_argument("--config", default=None)
    p_sim.add_argument("--n", type=int, default=None)
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--tau", type=float, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--theta-grid", default=None)
    p_sim.add_argument("--alpha-grid", default=None)
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(fn=cmd_simulate)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USER_ERROR
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
