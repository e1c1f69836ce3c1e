"""Render simulation CSVs into the standard figure layouts.

Four figure kinds, all reading the harness CSV schema (base columns
grid_value, alpha, replicate, win, bound, c_value, selected, loss_default,
loss_alt, plus experiment extras):

* ``fig1``        -- 2x2 panel from a selection-study CSV: bound coverage,
                     mistake probability, selection probability, and the
                     Monte Carlo risk profile of the two-stage rule
* ``calibration`` -- coverage against the nominal level, one series per
                     parameter grid value
* ``convergence`` -- log-log distances against sample size from the logistic
                     study, with fitted slopes printed and annotated
* ``histogram``   -- per-replicate c-values from a study that records them

Rendering is display-only: input files are never modified.
"""

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("fig1", "calibration", "convergence", "histogram")

REQUIRED_COLUMNS = {
    "fig1": ("grid_value", "alpha", "replicate", "win", "bound", "selected",
             "loss_default", "loss_alt"),
    "calibration": ("grid_value", "alpha", "win", "bound"),
    "convergence": ("grid_value", "replicate", "dist_approx_exact",
                    "dist_mle_truth"),
    "histogram": ("replicate", "c_value"),
}


class RenderError(Exception):
    pass


@dataclass(frozen=True)
class PlotJob:
    input_csv: str
    kind: str
    output_image: str

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise RenderError(
                f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}"
            )


def read_records(path, required):
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in required if c not in header]
            if missing:
                raise RenderError(
                    f"{path} is missing required column {missing[0]!r} "
                    f"for this figure kind"
                )
            rows = list(reader)
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise RenderError(f"{path} has no data rows")
    return rows


def _num(row, key):
    value = row.get(key, "")
    if value in ("", None):
        return math.nan
    try:
        return float(value)
    except ValueError:
        return math.nan


def fitted_slope(sizes, distances):
    """OLS slope of the mean log10 distance per size against log10 size.

    This is the same definition the simulation harness reports, so the
    printed slopes are directly comparable.
    """
    sizes = np.asarray(sizes, float)
    distances = np.asarray(distances, float)
    pts = []
    for m in sorted(set(sizes.tolist())):
        vals = distances[(sizes == m) & np.isfinite(distances)]
        if vals.size:
            pts.append((np.log10(m), float(np.mean(np.log10(vals)))))
    if len(pts) < 2:
        raise RenderError("need at least two sizes to fit a slope")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    xc = x - x.mean()
    return float((xc @ y) / (xc @ xc)), x, y


def _group(rows, keys):
    out = {}
    for row in rows:
        out.setdefault(tuple(_num(row, k) for k in keys), []).append(row)
    return out


def _coverage_series(rows):
    """coverage[grid_value][alpha] = P[win >= bound]"""
    series = {}
    for (g, a), cell in sorted(_group(rows, ("grid_value", "alpha")).items()):
        hits = np.mean([_num(r, "win") >= _num(r, "bound") for r in cell])
        series.setdefault(g, []).append((a, float(hits)))
    return series


def _render_calibration_axis(ax, rows):
    for g, pts in _coverage_series(rows).items():
        pts = sorted(pts)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"r={g:g}")
    lo = min(a for pts in _coverage_series(rows).values() for a, _ in pts)
    ax.plot([lo, 1.0], [lo, 1.0], ls="--", color="grey", lw=1)
    ax.set_xlabel("nominal level")
    ax.set_ylabel("empirical coverage")
    ax.legend(fontsize=7)


def render_calibration(job, rows):
    fig, ax = plt.subplots(figsize=(5, 4))
    _render_calibration_axis(ax, rows)
    ax.set_title("bound calibration")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=150)
    plt.close(fig)


def render_fig1(job, rows):
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))
    _render_calibration_axis(axes[0, 0], rows)
    axes[0, 0].set_title("(a) bound coverage")

    by_alpha = {}
    for (g, a), cell in sorted(_group(rows, ("grid_value", "alpha")).items()):
        sel = [r["selected"] == "alternative" for r in cell]
        mistake = np.mean([
            s and _num(r, "win") < 0 for s, r in zip(sel, cell)
        ])
        by_alpha.setdefault(a, {"g": [], "mistake": [], "select": [], "risk": []})
        entry = by_alpha[a]
        entry["g"].append(g)
        entry["mistake"].append(float(mistake))
        entry["select"].append(float(np.mean(sel)))
        entry["risk"].append(float(np.mean([
            _num(r, "loss_alt") if s else _num(r, "loss_default")
            for s, r in zip(sel, cell)
        ])))

    for a, entry in by_alpha.items():
        axes[0, 1].plot(entry["g"], entry["mistake"], marker="o", label=f"alpha={a:g}")
        axes[0, 1].axhline(1 - a, ls="--", lw=0.8, color="grey")
        axes[1, 0].plot(entry["g"], entry["select"], marker="o", label=f"alpha={a:g}")
        axes[1, 1].plot(entry["g"], entry["risk"], marker="o",
                        label=f"two-stage alpha={a:g}")

    any_alpha = next(iter(by_alpha))
    cells = _group(rows, ("grid_value", "alpha"))
    gs = sorted({g for g, a in cells if a == any_alpha})
    risk_default = [
        np.mean([_num(r, "loss_default") for r in cells[(g, any_alpha)]]) for g in gs
    ]
    risk_alt = [
        np.mean([_num(r, "loss_alt") for r in cells[(g, any_alpha)]]) for g in gs
    ]
    axes[1, 1].plot(gs, risk_default, ls=":", color="black", label="default")
    axes[1, 1].plot(gs, risk_alt, ls="--", color="tab:red", label="alternative")

    axes[0, 1].set_title("(b) P[default better but alternative selected]")
    axes[1, 0].set_title("(c) P[alternative selected]")
    axes[1, 1].set_title("(d) Monte Carlo risk")
    for ax in (axes[0, 1], axes[1, 0], axes[1, 1]):
        ax.set_xlabel("parameter grid value")
        ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=150)
    plt.close(fig)


def render_convergence(job, rows):
    rows = [r for r in rows if r.get("part", "convergence") == "convergence"]
    if not rows:
        raise RenderError("no convergence rows in the input")
    sizes = [_num(r, "grid_value") for r in rows]
    labels = [
        ("dist_approx_exact", "approx MAP vs exact MAP"),
        ("dist_mle_truth", "MLE vs truth"),
    ]
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    printed = {}
    for col, label in labels:
        dists = [_num(r, col) for r in rows]
        slope, x, y = fitted_slope(sizes, dists)
        printed[col] = slope
        ax.plot(10 ** x, 10 ** y, marker="o", label=f"{label} (slope {slope:.3f})")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size")
    ax.set_ylabel("mean distance")
    ax.legend(fontsize=8)
    ax.set_title("convergence rates")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=150)
    plt.close(fig)
    print(f"slope_approx_vs_exact_map={printed['dist_approx_exact']:.12g}")
    print(f"slope_mle_vs_truth={printed['dist_mle_truth']:.12g}")


def render_histogram(job, rows):
    per_rep = {}
    for r in rows:
        c = _num(r, "c_value")
        if math.isfinite(c):
            per_rep[(r.get("part", ""), _num(r, "replicate"))] = c
    values = sorted(per_rep.values())
    if not values:
        raise RenderError("no finite c_value entries in the input")
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.hist(values, bins=20, range=(0.0, 1.0), color="tab:blue", alpha=0.8)
    ax.set_xlabel("c-value")
    ax.set_ylabel("replicates")
    ax.set_title("c-value distribution")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=150)
    plt.close(fig)
    print(f"median_c={float(np.median(values)):.12g}")


RENDERERS = {
    "fig1": render_fig1,
    "calibration": render_calibration,
    "convergence": render_convergence,
    "histogram": render_histogram,
}


def render(job: PlotJob):
    rows = read_records(job.input_csv, REQUIRED_COLUMNS[job.kind])
    RENDERERS[job.kind](job, rows)
    return job.output_image


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="render", description="Render simulation report CSVs to images"
    )
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True)
    args = parser.parse_args(argv)
    try:
        render(PlotJob(args.input_csv, args.kind, args.output_image))
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.output_image}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
