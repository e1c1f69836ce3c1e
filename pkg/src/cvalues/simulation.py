"""Seeded Monte Carlo harness for the calibration and selection studies.

Every replicate draws its randomness from a counter-based generator keyed by
(master seed, grid index, replicate index), so results are independent of
evaluation order and of the worker count; reports are byte-identical across
reruns at a fixed seed.

Reports serialize to a CSV of per-replicate records and a JSON summary.  The
CSV always starts with the columns

    grid_value, alpha, replicate, win, bound, c_value, selected,
    loss_default, loss_alt

followed by experiment-specific extras; fields that do not apply to an
experiment hold "nan" (or an empty string for labels).  Aggregates in the
summary are recomputed from the records, never accumulated on the side.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .affine import AffineComparison, affine_win_bound
from .core import (
    ALTERNATIVE_LABEL,
    DEFAULT_LABEL,
    LowerBoundEvaluator,
    c_value,
    contingency_table,
)
from .errors import NumericalError, ValidationError
from .estimators import GPPosteriorMean, JamesStein, sure_selector
from .logistic import logistic_laplace_affine, logistic_map, logistic_mle
from .normal_means import SubspaceShrinkageSpec, subspace_bound

BASE_COLUMNS = [
    "grid_value", "alpha", "replicate", "win", "bound", "c_value",
    "selected", "loss_default", "loss_alt",
]

EXPERIMENTS = ("calibration", "eb", "selection", "risk", "pitfall", "logistic", "gp")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 50
    reps: int = 500
    tau: float = 1.0
    theta_grid: tuple = (0.0, 0.5, 1.0, 1.5, 2.0)
    alpha_grid: tuple = (0.5, 0.8, 0.9, 0.95)
    seed: int = 0
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(
                f"unknown experiment {self.experiment!r}; valid names: "
                + ", ".join(EXPERIMENTS)
            )
        if self.reps < 1:
            raise ValidationError("replicate count must be at least 1")
        if self.n < 2:
            raise ValidationError("need dimension n >= 2")
        if len(self.theta_grid) == 0 or len(self.alpha_grid) == 0:
            raise ValidationError("grids must be non-empty")
        if any(not 0.0 <= a < 1.0 for a in self.alpha_grid):
            raise ValidationError("alpha grid entries must lie in [0, 1)")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")


@dataclass(frozen=True)
class SimulationReport:
    config: ExperimentConfig
    columns: list
    records: list
    summary: dict

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(self.columns) + "\n")
            for rec in self.records:
                fh.write(",".join(_csv_cell(rec.get(c)) for c in self.columns) + "\n")

    def to_json(self, path):
        echo = asdict(self.config)
        del echo["workers"]  # runtime knob; results are worker-independent
        payload = {
            "experiment": self.config.experiment,
            "config": _jsonable(echo),
            "summary": _jsonable(self.summary),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.17g" % float(value)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def replicate_rng(seed, *path):
    """Philox generator keyed by (seed, *path); order-independent streams."""
    key = np.random.SeedSequence([int(seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(key=key.generate_state(2, np.uint64)))


def _unit_orthogonal_to_ones(n):
    v = np.arange(n, dtype=float) - (n - 1) / 2.0
    return v / np.linalg.norm(v)


def _unit_direction(n):
    v = np.arange(1, n + 1, dtype=float)
    return v / np.linalg.norm(v)


def binomial_se(p, n):
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


def _run_tasks(config, task_fn, tasks):
    """Run (task_fn, task) pairs serially or in a process pool; stable order."""
    if config.workers == 1:
        chunks = [task_fn((config, t)) for t in tasks]
    else:
        args = [(config, t) for t in tasks]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(task_fn, args))
    records = [rec for chunk in chunks for rec in chunk]
    records.sort(key=lambda r: r["_key"])
    for rec in records:
        del rec["_key"]
    return records


# ---------------------------------------------------------------------------
# calibration (exact bound and its empirical-Bayes variant)


def _calibration_replicate(config, gi, rep):
    n, tau = config.n, config.tau
    r = config.theta_grid[gi]
    eb = config.experiment == "eb"
    v = _unit_direction(n) if eb else _unit_orthogonal_to_ones(n)
    theta = r * np.sqrt(n) * v
    rng = replicate_rng(config.seed, gi, rep)
    eps = rng.standard_normal(n)
    y = theta + eps

    if eb:
        est = JamesStein().fit(y)
        alt = est.predict(y)
        spec = SubspaceShrinkageSpec(y, None, float(np.sqrt(est.tau2_)))
    else:
        alt = (y + tau ** -2 * y.mean()) / (1.0 + tau ** -2)
        spec = SubspaceShrinkageSpec(y, np.ones((n, 1)), tau)

    loss_default = float(eps @ eps)
    loss_alt = float((alt - theta) @ (alt - theta))
    w = loss_default - loss_alt
    rows = []
    for ai, alpha in enumerate(config.alpha_grid):
        b = subspace_bound(spec, alpha)
        rows.append({
            "_key": (gi, rep, ai),
            "grid_value": r, "alpha": alpha, "replicate": rep,
            "win": w, "bound": b, "c_value": float("nan"),
            "selected": ALTERNATIVE_LABEL if b > 0 else DEFAULT_LABEL,
            "loss_default": loss_default, "loss_alt": loss_alt,
        })
    return rows


def _calibration_task(args):
    config, (gi, reps) = args
    out = []
    for rep in reps:
        out.extend(_calibration_replicate(config, gi, rep))
    return out


def _chunked_tasks(config):
    chunk = max(1, config.reps // max(1, 2 * config.workers))
    tasks = []
    for gi in range(len(config.theta_grid)):
        for start in range(0, config.reps, chunk):
            tasks.append((gi, range(start, min(start + chunk, config.reps))))
    return tasks


def summarize_calibration(records, config):
    coverage = {}
    for gi, r in enumerate(config.theta_grid):
        for alpha in config.alpha_grid:
            rows = [
                rec for rec in records
                if rec["grid_value"] == r and rec["alpha"] == alpha
            ]
            hits = sum(rec["win"] >= rec["bound"] for rec in rows)
            mistakes = sum(
                rec["selected"] == ALTERNATIVE_LABEL and rec["win"] < 0 for rec in rows
            )
            selected = sum(rec["selected"] == ALTERNATIVE_LABEL for rec in rows)
            p = hits / len(rows)
            coverage[f"r={r:g},alpha={alpha:g}"] = {
                "coverage": p,
                "se": binomial_se(p, len(rows)),
                "mistake_prob": mistakes / len(rows),
                "mistake_se": binomial_se(mistakes / len(rows), len(rows)),
                "selection_prob": selected / len(rows),
                "n": len(rows),
            }
    return {"coverage": coverage}


def run_calibration(config) -> SimulationReport:
    if config.experiment not in ("calibration", "eb"):
        raise ValidationError("config.experiment must be 'calibration' or 'eb'")
    records = _run_tasks(config, _calibration_task, _chunked_tasks(config))
    return SimulationReport(
        config, list(BASE_COLUMNS), records, summarize_calibration(records, config)
    )


# ---------------------------------------------------------------------------
# selection study (two-stage rule, SURE comparator, contingency tables)


def _selection_replicate(config, gi, rep):
    n, tau = config.n, config.tau
    r = config.theta_grid[gi]
    v = _unit_orthogonal_to_ones(n)
    theta = r * np.sqrt(n) * v
    rng = replicate_rng(config.seed, gi, rep)
    eps = rng.standard_normal(n)
    y = theta + eps
    alt = (y + tau ** -2 * y.mean()) / (1.0 + tau ** -2)
    loss_default = float(eps @ eps)
    loss_alt = float((alt - theta) @ (alt - theta))
    w = loss_default - loss_alt

    spec = SubspaceShrinkageSpec(y, np.ones((n, 1)), tau)
    evaluator = LowerBoundEvaluator(lambda a: subspace_bound(spec, a), name="exact")
    result = c_value(evaluator)
    sure_label, sure_value = sure_selector(y, tau)

    rows = []
    for ai, alpha in enumerate(config.alpha_grid):
        b = evaluator(alpha)
        rows.append({
            "_key": (gi, rep, ai),
            "grid_value": r, "alpha": alpha, "replicate": rep,
            "win": w, "bound": b, "c_value": result.c_value,
            "selected": ALTERNATIVE_LABEL if result.c_value > alpha else DEFAULT_LABEL,
            "loss_default": loss_default, "loss_alt": loss_alt,
            "sure_selected": sure_label, "sure_value": sure_value,
        })
    return rows


def _selection_task(args):
    config, (gi, reps) = args
    out = []
    for rep in reps:
        out.extend(_selection_replicate(config, gi, rep))
    return out


def summarize_selection(records, config):
    by_point = {}
    for gi, r in enumerate(config.theta_grid):
        point = {}
        for alpha in config.alpha_grid:
            rows = [
                rec for rec in records
                if rec["grid_value"] == r and rec["alpha"] == alpha
            ]
            n_rows = len(rows)
            sel = sum(rec["selected"] == ALTERNATIVE_LABEL for rec in rows)
            mistakes = sum(
                rec["selected"] == ALTERNATIVE_LABEL and rec["win"] < 0 for rec in rows
            )
            table = contingency_table(
                [(rec["win"], rec["selected"]) for rec in rows]
            )
            point[f"alpha={alpha:g}"] = {
                "selection_prob": sel / n_rows,
                "selection_se": binomial_se(sel / n_rows, n_rows),
                "mistake_prob": mistakes / n_rows,
                "mistake_se": binomial_se(mistakes / n_rows, n_rows),
                "contingency_pct": table.as_dict(),
                "n": n_rows,
            }
        # SURE is threshold-free; tabulate it once per grid point
        alpha0 = config.alpha_grid[0]
        rows = [
            rec for rec in records
            if rec["grid_value"] == r and rec["alpha"] == alpha0
        ]
        sure_table = contingency_table(
            [(rec["win"], rec["sure_selected"]) for rec in rows]
        )
        pct = sure_table.as_dict()
        point["sure"] = {
            "contingency_pct": pct,
            "alternative_reported_pct": pct["DLL_AR"] + pct["ALL_AR"],
            "wrong_pct": pct["DLL_AR"] + pct["ALL_DR"],
            "n": len(rows),
        }
        by_point[f"r={r:g}"] = point
    return {"selection": by_point}


def run_selection_study(config) -> SimulationReport:
    if config.experiment != "selection":
        raise ValidationError("config.experiment must be 'selection'")
    records = _run_tasks(config, _selection_task, _chunked_tasks(config))
    columns = BASE_COLUMNS + ["sure_selected", "sure_value"]
    return SimulationReport(config, columns, records, summarize_selection(records, config))


# ---------------------------------------------------------------------------
# risk profiles of the two-stage estimator


def _risk_replicate(config, gi, rep):
    n, tau = config.n, config.tau
    r = config.theta_grid[gi]
    theta = r * np.sqrt(n) * _unit_orthogonal_to_ones(n)
    rng = replicate_rng(config.seed, gi, rep)
    eps = rng.standard_normal(n)
    y = theta + eps
    alt = (y + tau ** -2 * y.mean()) / (1.0 + tau ** -2)
    loss_default = float(eps @ eps)
    loss_alt = float((alt - theta) @ (alt - theta))
    w = loss_default - loss_alt
    spec = SubspaceShrinkageSpec(y, np.ones((n, 1)), tau)
    rows = []
    for ai, alpha in enumerate(config.alpha_grid):
        b = subspace_bound(spec, alpha)
        selected = ALTERNATIVE_LABEL if b > 0 else DEFAULT_LABEL
        loss_two_stage = loss_alt if selected == ALTERNATIVE_LABEL else loss_default
        rows.append({
            "_key": (gi, rep, ai),
            "grid_value": r, "alpha": alpha, "replicate": rep,
            "win": w, "bound": b, "c_value": float("nan"),
            "selected": selected,
            "loss_default": loss_default, "loss_alt": loss_alt,
            "loss_two_stage": loss_two_stage,
        })
    return rows


def _risk_task(args):
    config, (gi, reps) = args
    out = []
    for rep in reps:
        out.extend(_risk_replicate(config, gi, rep))
    return out


def summarize_risk(records, config):
    risks = {}
    for gi, r in enumerate(config.theta_grid):
        alpha0 = config.alpha_grid[0]
        base_rows = [
            rec for rec in records
            if rec["grid_value"] == r and rec["alpha"] == alpha0
        ]
        loss_d = np.array([rec["loss_default"] for rec in base_rows])
        loss_a = np.array([rec["loss_alt"] for rec in base_rows])
        entry = {
            "risk_default": float(loss_d.mean()),
            "risk_default_se": float(loss_d.std(ddof=1) / np.sqrt(loss_d.size)),
            "risk_alternative": float(loss_a.mean()),
            "risk_alternative_se": float(loss_a.std(ddof=1) / np.sqrt(loss_a.size)),
            "n": int(loss_d.size),
        }
        for alpha in config.alpha_grid:
            rows = [
                rec for rec in records
                if rec["grid_value"] == r and rec["alpha"] == alpha
            ]
            loss_t = np.array([rec["loss_two_stage"] for rec in rows])
            entry[f"risk_two_stage_alpha={alpha:g}"] = float(loss_t.mean())
            entry[f"risk_two_stage_se_alpha={alpha:g}"] = float(
                loss_t.std(ddof=1) / np.sqrt(loss_t.size)
            )
        risks[f"r={r:g}"] = entry
    return {"risk": risks}


def run_risk_profile(config) -> SimulationReport:
    if config.experiment != "risk":
        raise ValidationError("config.experiment must be 'risk'")
    records = _run_tasks(config, _risk_task, _chunked_tasks(config))
    columns = BASE_COLUMNS + ["loss_two_stage"]
    return SimulationReport(config, columns, records, summarize_risk(records, config))


# ---------------------------------------------------------------------------
# the risk-vs-loss pitfall demonstration


def run_risk_pitfall_demo(seed, reps=5000) -> SimulationReport:
    """N=2 grand-mean shrinkage with ||theta - mean(theta) 1||^2 = 2.999.

    The shrinkage estimate has (slightly) smaller risk than the MLE, yet the
    MLE achieves smaller loss on roughly 68 percent of datasets.
    """
    config = ExperimentConfig(
        experiment="pitfall", n=2, reps=reps, tau=1.0,
        theta_grid=(float(np.sqrt(2.999 / 2.0)),), alpha_grid=(0.5,), seed=seed,
    )
    n = 2
    u = np.array([1.0, -1.0]) / np.sqrt(2.0)
    theta = np.sqrt(2.999) * u  # ||P_perp theta||^2 = 2.999, mean exactly 0
    rng = replicate_rng(seed, 0)
    eps = rng.standard_normal((reps, n))
    y = theta + eps
    ybar = y.mean(axis=1, keepdims=True)
    alt = (y + ybar) / 2.0
    loss_default = np.einsum("ij,ij->i", eps, eps)
    diff = alt - theta
    loss_alt = np.einsum("ij,ij->i", diff, diff)
    wins = loss_default - loss_alt
    records = []
    for rep in range(reps):
        records.append({
            "grid_value": 2.999, "alpha": float("nan"), "replicate": rep,
            "win": float(wins[rep]), "bound": float("nan"), "c_value": float("nan"),
            "selected": "", "loss_default": float(loss_default[rep]),
            "loss_alt": float(loss_alt[rep]),
        })
    summary = summarize_pitfall(records)
    return SimulationReport(config, list(BASE_COLUMNS), records, summary)


def summarize_pitfall(records):
    wins = np.array([rec["win"] for rec in records])
    loss_d = np.array([rec["loss_default"] for rec in records])
    loss_a = np.array([rec["loss_alt"] for rec in records])
    frac = float(np.mean(wins < 0))
    return {
        "pitfall": {
            "mle_smaller_loss_fraction": frac,
            "mle_smaller_loss_se": binomial_se(frac, wins.size),
            "risk_default": float(loss_d.mean()),
            "risk_default_se": float(loss_d.std(ddof=1) / np.sqrt(loss_d.size)),
            "risk_alternative": float(loss_a.mean()),
            "risk_alternative_se": float(loss_a.std(ddof=1) / np.sqrt(loss_a.size)),
            "n": int(wins.size),
        }
    }


# ---------------------------------------------------------------------------
# logistic regression experiments


def _logistic_draw(rng, n, m, theta=None, x_scale=None):
    if theta is None:
        theta = rng.normal(scale=np.sqrt(0.5), size=n)
    x = rng.normal(scale=1.0 / n if x_scale is None else x_scale, size=(m, n))
    p = 1.0 / (1.0 + np.exp(-(x @ theta)))
    labels = np.where(rng.uniform(size=m) < p, 1.0, -1.0)
    return theta, x, labels


def _logistic_convergence_task(args):
    config, (mi, reps) = args
    m = config.extra.get("m_grid", (50, 100, 200, 400, 800, 1600))[mi]
    n = config.extra.get("n_convergence", 2)
    # fixed truth and unit-scale covariates keep the rate constant stable
    # across replicates, so the asymptotic slope shows within this M range
    theta0 = np.linspace(0.5, -0.7, n)
    rows = []
    for rep in reps:
        rng = replicate_rng(config.seed, 1, mi, rep)
        theta, x, labels = _logistic_draw(rng, n, m, theta=theta0, x_scale=1.0)
        try:
            theta_hat = logistic_mle(x, labels)
        except NumericalError:
            rows.append({
                "_key": (0, mi, rep), "part": "convergence",
                "grid_value": float(m), "alpha": float("nan"), "replicate": rep,
                "win": float("nan"), "bound": float("nan"), "c_value": float("nan"),
                "selected": "", "loss_default": float("nan"),
                "loss_alt": float("nan"), "dist_approx_exact": float("nan"),
                "dist_mle_truth": float("nan"), "separated": 1,
            })
            continue
        theta_map = logistic_map(x, labels)
        approx = logistic_laplace_affine(x, labels, theta_hat).theta_tilde
        rows.append({
            "_key": (0, mi, rep), "part": "convergence",
            "grid_value": float(m), "alpha": float("nan"), "replicate": rep,
            "win": float("nan"), "bound": float("nan"), "c_value": float("nan"),
            "selected": "",
            "loss_default": float((theta_hat - theta) @ (theta_hat - theta)),
            "loss_alt": float((theta_map - theta) @ (theta_map - theta)),
            "dist_approx_exact": float(np.linalg.norm(approx - theta_map)),
            "dist_mle_truth": float(np.linalg.norm(theta_hat - theta)),
            "separated": 0,
        })
    return rows


def _logistic_coverage_task(args):
    config, (gi, reps) = args
    m = config.extra.get("m_coverage", 1000)
    n = config.extra.get("n_coverage", 25)
    rows = []
    for rep in reps:
        rng = replicate_rng(config.seed, 2, rep)
        theta, x, labels = _logistic_draw(rng, n, m)
        try:
            theta_hat = logistic_mle(x, labels)
        except NumericalError:
            rows.append({
                "_key": (1, 0, rep), "part": "coverage",
                "grid_value": float(m), "alpha": float("nan"), "replicate": rep,
                "win": float("nan"), "bound": float("nan"), "c_value": float("nan"),
                "selected": "", "loss_default": float("nan"),
                "loss_alt": float("nan"), "dist_approx_exact": float("nan"),
                "dist_mle_truth": float("nan"), "separated": 1,
            })
            continue
        theta_map = logistic_map(x, labels)
        la = logistic_laplace_affine(x, labels, theta_hat)
        cmp = la.comparison()
        loss_default = float((theta_hat - theta) @ (theta_hat - theta))
        loss_alt = float((theta_map - theta) @ (theta_map - theta))
        w = loss_default - loss_alt
        evaluator = LowerBoundEvaluator(lambda a: affine_win_bound(cmp, a))
        result = c_value(evaluator)
        for ai, alpha in enumerate(config.alpha_grid):
            rows.append({
                "_key": (1, ai, rep), "part": "coverage",
                "grid_value": float(m), "alpha": alpha, "replicate": rep,
                "win": w, "bound": evaluator(alpha), "c_value": result.c_value,
                "selected": (
                    ALTERNATIVE_LABEL if result.c_value > alpha else DEFAULT_LABEL
                ),
                "loss_default": loss_default, "loss_alt": loss_alt,
                "dist_approx_exact": float(np.linalg.norm(la.theta_tilde - theta_map)),
                "dist_mle_truth": float(np.linalg.norm(theta_hat - theta)),
                "separated": 0,
            })
    return rows


def log_log_slope(sizes, distances):
    """OLS slope of mean log10 distance against log10 size."""
    sizes = np.asarray(sizes, float)
    distances = np.asarray(distances, float)
    xs = sorted(set(sizes.tolist()))
    pts = []
    for m in xs:
        vals = distances[(sizes == m) & np.isfinite(distances)]
        if vals.size:
            pts.append((np.log10(m), float(np.mean(np.log10(vals)))))
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    xbar = x.mean()
    return float(((x - xbar) @ y) / ((x - xbar) @ (x - xbar)))


def summarize_logistic(records, config):
    conv = [rec for rec in records if rec["part"] == "convergence" and not rec["separated"]]
    cov = [rec for rec in records if rec["part"] == "coverage" and not rec["separated"]]
    summary = {"separated_dropped": int(sum(rec["separated"] for rec in records))}
    if conv:
        sizes = [rec["grid_value"] for rec in conv]
        summary["slope_approx_vs_exact_map"] = log_log_slope(
            sizes, [rec["dist_approx_exact"] for rec in conv]
        )
        summary["slope_mle_vs_truth"] = log_log_slope(
            sizes, [rec["dist_mle_truth"] for rec in conv]
        )
    if cov:
        coverage = {}
        for alpha in config.alpha_grid:
            rows = [rec for rec in cov if rec["alpha"] == alpha]
            hits = sum(rec["win"] >= rec["bound"] for rec in rows)
            p = hits / len(rows)
            coverage[f"alpha={alpha:g}"] = {
                "coverage": p, "se": binomial_se(p, len(rows)), "n": len(rows),
            }
        summary["coverage"] = coverage
        c_vals = sorted(
            {rec["replicate"]: rec["c_value"] for rec in cov}.values()
        )
        hist, edges = np.histogram(c_vals, bins=10, range=(0.0, 1.0))
        summary["c_value_histogram"] = {
            "counts": hist.tolist(), "edges": edges.tolist(),
            "median_c": float(np.median(c_vals)),
        }
    return {"logistic": summary}


def run_logistic_experiments(config) -> SimulationReport:
    if config.experiment != "logistic":
        raise ValidationError("config.experiment must be 'logistic'")
    m_grid = config.extra.get("m_grid", (50, 100, 200, 400, 800, 1600))
    conv_reps = config.extra.get("convergence_reps", 25)
    cov_reps = config.reps

    conv_tasks = [(mi, range(conv_reps)) for mi in range(len(m_grid))]
    records = _run_tasks(config, _logistic_convergence_task, conv_tasks)

    chunk = max(1, cov_reps // max(1, 2 * config.workers))
    cov_tasks = [
        (0, range(start, min(start + chunk, cov_reps)))
        for start in range(0, cov_reps, chunk)
    ]
    records.extend(_run_tasks(config, _logistic_coverage_task, cov_tasks))

    columns = BASE_COLUMNS + ["part", "dist_approx_exact", "dist_mle_truth", "separated"]
    return SimulationReport(config, columns, records, summarize_logistic(records, config))


# ---------------------------------------------------------------------------
# Gaussian process model comparison


GP_DEFAULTS = {
    "n_buoys": 16,
    "n_times": 8,
    "var1": 1.0,
    "ls1": (0.45, 0.45, 0.6),
    "var2": 0.8,
    "ls2": (0.07, 0.07, 0.25),
    "var2_third": 1.1,
    "ls2_third": (0.05, 0.05, 0.18),
    "sigma_eps": 0.3,
    "alpha": 0.95,
}

GP_SCENARIOS = ("data_from_multi_scale", "data_from_baseline", "sequential")


def _gp_setup(config):
    p = dict(GP_DEFAULTS)
    p.update(config.extra)
    rng = replicate_rng(config.seed, 99)
    buoys = rng.uniform(0.0, 1.0, size=(p["n_buoys"], 2))
    times = np.linspace(0.0, 1.0, p["n_times"])
    coords = np.array([
        [lat, lon, t] for (lat, lon) in buoys for t in times
    ])
    params = {"var1": p["var1"], "ls1": p["ls1"], "var2": p["var2"], "ls2": p["ls2"]}
    third_params = {
        "var1": p["var1"], "ls1": p["ls1"],
        "var2": p["var2_third"], "ls2": p["ls2_third"],
    }
    return p, coords, params, third_params


def _gp_posterior_matrix(coords, kernel, params, sigma_eps):
    est = GPPosteriorMean(coords, kernel, params, sigma_eps)
    est.fit(np.zeros(coords.shape[0]))
    return est.affine_map().matrix, est.kernel_matrix()


def _gp_chol(k):
    jitter = 1e-8 * float(np.mean(np.diag(k)))
    return np.linalg.cholesky(k + jitter * np.eye(k.shape[0]))


def run_gp_model_comparison(config) -> SimulationReport:
    """Multi-scale vs nugget-baseline posterior means on synthetic currents.

    Scenario 0 draws data from the multi-scale prior (the alternative is the
    better model); scenario 1 draws from the baseline prior and checks the
    two-stage guarantee; scenario 2 adds a third model and performs the
    two-stage sequential selection whose mis-selection probability is at most
    2 (1 - alpha).
    """
    if config.experiment != "gp":
        raise ValidationError("config.experiment must be 'gp'")
    p, coords, params, third_params = _gp_setup(config)
    n = coords.shape[0]
    sigma_eps = p["sigma_eps"]
    alpha = p["alpha"]

    a_base, k_base = _gp_posterior_matrix(coords, "mesoscale_plus_nugget", params, sigma_eps)
    a_multi, k_multi = _gp_posterior_matrix(coords, "multi_scale", params, sigma_eps)
    a_third, k_third = _gp_posterior_matrix(coords, "multi_scale", third_params, sigma_eps)
    chol = {"multi": _gp_chol(k_multi), "base": _gp_chol(k_base)}
    zeros = np.zeros(n)
    noise_cov = sigma_eps ** 2 * np.eye(n)
    cmp_base_multi = AffineComparison(noise_cov, a_base, a_multi, zeros, zeros, zeros)
    cmp_multi_third = AffineComparison(noise_cov, a_multi, a_third, zeros, zeros, zeros)

    records = []
    for si, scenario in enumerate(GP_SCENARIOS):
        truth_chol = chol["base"] if scenario == "data_from_baseline" else chol["multi"]
        for rep in range(config.reps):
            rng = replicate_rng(config.seed, si, rep)
            f_true = truth_chol @ rng.standard_normal(n)
            y = f_true + sigma_eps * rng.standard_normal(n)
            est_default = a_base @ y
            est_multi = a_multi @ y
            loss_default = float((est_default - f_true) @ (est_default - f_true))
            loss_alt = float((est_multi - f_true) @ (est_multi - f_true))
            ev1 = LowerBoundEvaluator(
                lambda a: affine_win_bound(cmp_base_multi.with_y(y), a)
            )
            c1 = c_value(ev1).c_value
            row = {
                "_key": (si, rep),
                "grid_value": float(si), "alpha": alpha, "replicate": rep,
                "win": loss_default - loss_alt, "bound": ev1(alpha), "c_value": c1,
                "selected": ALTERNATIVE_LABEL if c1 > alpha else DEFAULT_LABEL,
                "loss_default": loss_default, "loss_alt": loss_alt,
                "scenario": scenario,
                "c_second": float("nan"), "loss_third": float("nan"),
                "third_chosen": 0,
            }
            if scenario == "sequential":
                est_third = a_third @ y
                row["loss_third"] = float((est_third - f_true) @ (est_third - f_true))
                if c1 > alpha:
                    ev2 = LowerBoundEvaluator(
                        lambda a: affine_win_bound(cmp_multi_third.with_y(y), a)
                    )
                    c2 = c_value(ev2).c_value
                    row["c_second"] = c2
                    row["third_chosen"] = int(c2 > alpha)
            records.append(row)
    records.sort(key=lambda r: r["_key"])
    for rec in records:
        del rec["_key"]
    columns = BASE_COLUMNS + ["scenario", "c_second", "loss_third", "third_chosen"]
    return SimulationReport(
        config, columns, records, summarize_gp(records, config, alpha)
    )


def summarize_gp(records, config, alpha):
    out = {}
    multi = [rec for rec in records if rec["scenario"] == "data_from_multi_scale"]
    out["median_c_under_multi_scale_data"] = float(
        np.median([rec["c_value"] for rec in multi])
    )
    base = [rec for rec in records if rec["scenario"] == "data_from_baseline"]
    mis = [
        rec["selected"] == ALTERNATIVE_LABEL and rec["loss_alt"] > rec["loss_default"]
        for rec in base
    ]
    out["baseline_mis_selection_rate"] = float(np.mean(mis))
    out["baseline_mis_selection_se"] = binomial_se(float(np.mean(mis)), len(mis))
    seq = [rec for rec in records if rec["scenario"] == "sequential"]
    bad = [
        bool(rec["third_chosen"]) and rec["loss_third"] > rec["loss_default"]
        for rec in seq
    ]
    out["sequential_mis_selection_rate"] = float(np.mean(bad))
    out["sequential_mis_selection_se"] = binomial_se(float(np.mean(bad)), len(bad))
    out["sequential_budget"] = 2.0 * (1.0 - alpha)
    out["alpha"] = alpha
    out["seeds_per_scenario"] = len(multi)
    return {"gp": out}


# ---------------------------------------------------------------------------


RUNNERS = {
    "calibration": run_calibration,
    "eb": run_calibration,
    "selection": run_selection_study,
    "risk": run_risk_profile,
    "logistic": run_logistic_experiments,
    "gp": run_gp_model_comparison,
}


def run_experiment(config) -> SimulationReport:
    """Dispatch a named experiment; `pitfall` takes its own defaults."""
    if config.experiment == "pitfall":
        return run_risk_pitfall_demo(config.seed, config.reps)
    return RUNNERS[config.experiment](config)
