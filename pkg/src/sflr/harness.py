"""Monte-Carlo replication of the estimation and prediction study.

Each replication draws covariates and responses from streams keyed by
``(seed, n, replication)`` so results do not depend on execution order, on
which other cells are run, or on how many worker processes are used.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .estimate import (
    center,
    eigen_decay_diagnostic,
    empirical_covariance,
    estimation_error,
    fit_gcv,
    trace_inequality_check,
)
from .krige import DEFAULT_TARGET, krige_curve, predict_pair, separation_diagnostic, solve_kriging
from .simulate import _spline_system, generate_covariates, generate_responses, slope_case
from .spatial import make_grid, stream

log = logging.getLogger(__name__)

CSV_HEADER = ["case", "snr", "n", "metric", "mean", "stderr", "reps"]
FAILURE_BUDGET = 0.05

_COVARIATE_STREAM = 0
_NOISE_STREAM = 1


class ExperimentError(RuntimeError):
    """A cell exceeded its replication failure budget."""


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    n_list: tuple = (10, 15, 20, 25)
    snr_list: tuple = (0.05, 0.10)
    cases: tuple = ("A", "B")
    replications: int = 100
    p: int = 101
    m: int = 2
    rho_min: float = 1e-8
    rho_max: float = 1e2
    rho_count: int = 25
    target: tuple = DEFAULT_TARGET
    seed: int = 0
    lambda_mode: str = "per-point"
    jobs: int = 1
    theta: float = 8.0
    decay_q: float = 1.0

    def __post_init__(self):
        for name in ("n_list", "snr_list", "cases"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "target", tuple(float(c) for c in self.target))
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if any(not 0 < s < 1 for s in self.snr_list):
            raise ValueError("every snr must lie in (0, 1)")
        if len(self.target) != self.d:
            raise ValueError(f"target must have {self.d} coordinates")
        for c in self.cases:
            slope_case(c)

    @property
    def rho_grid(self) -> np.ndarray:
        return np.logspace(math.log10(self.rho_min), math.log10(self.rho_max), self.rho_count)


@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    estimation_error: float
    prediction_error: float
    rho: float
    sigma2_eps: float


@dataclass
class CellSummary:
    case: str
    snr: float
    n: int
    estimation_mean: float
    estimation_stderr: float
    prediction_mean: float
    prediction_stderr: float
    reps: int
    failures: list = field(default_factory=list)
    records: list = field(default_factory=list)


@dataclass
class ExperimentReport:
    config: Optional[ExperimentConfig]
    cells: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def cell(self, case: str, snr: float, n: int) -> CellSummary:
        for c in self.cells:
            if c.case == case and c.n == n and math.isclose(c.snr, snr):
                return c
        raise KeyError((case, snr, n))

    def rate_table(self, metric: str = "estimation") -> dict:
        """Least-squares slope of ``log(mean error)`` against ``log(n^d)``.

        Keys are ``(snr, case)``; cells with fewer than two ``n`` values are
        omitted.
        """
        d = self.config.d if self.config else 2
        groups: dict = {}
        for c in self.cells:
            value = c.estimation_mean if metric == "estimation" else c.prediction_mean
            groups.setdefault((c.snr, c.case), []).append((c.n, value))
        out = {}
        for key, pts in groups.items():
            pts = sorted(pts)
            if len(pts) < 2:
                continue
            x = np.log([n**d for n, _ in pts])
            y = np.log([v for _, v in pts])
            out[key] = float(np.polyfit(x, y, 1)[0])
        return out


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan
    return float(v.mean()), se


@lru_cache(maxsize=32)
def _kriging_weights(n: int, d: int, target: tuple):
    return solve_kriging(make_grid(n, d), target)


def run_replication(config: ExperimentConfig, n: int, snr: float, case: str, index: int) -> ReplicationRecord:
    """One draw of data, GCV fit, estimation error and kriged prediction error."""
    grid = make_grid(n, config.d)
    system = _spline_system(config.p, config.m)
    truth = slope_case(case)
    X = generate_covariates(
        grid, config.p, stream(config.seed, n, index, _COVARIATE_STREAM), lambda_mode=config.lambda_mode
    )
    resp = generate_responses(X, truth, snr, stream(config.seed, n, index, _NOISE_STREAM), m=config.m)
    design = center(X, resp)
    result = fit_gcv(design, system, config.rho_grid)
    est = estimation_error(result, truth, empirical_covariance(design))
    x0 = krige_curve(_kriging_weights(n, config.d, config.target), X)
    pred = predict_pair(result, truth, x0).squared_error
    return ReplicationRecord(index, est, pred, result.rho, resp.sigma2_eps)


def _run_one(args):
    config, n, snr, case, index = args
    try:
        return run_replication(config, n, snr, case, index)
    except np.linalg.LinAlgError as exc:
        return (index, f"{type(exc).__name__}: {exc}")


def _map(config: ExperimentConfig, tasks: list):
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * config.jobs))))
    return [_run_one(t) for t in tasks]


def _summarise(config, n, snr, case, outcomes) -> CellSummary:
    records = sorted((o for o in outcomes if isinstance(o, ReplicationRecord)), key=lambda r: r.index)
    failures = sorted((o for o in outcomes if not isinstance(o, ReplicationRecord)), key=lambda f: f[0])
    if len(failures) > FAILURE_BUDGET * config.replications:
        raise ExperimentError(
            f"cell (case={case}, snr={snr}, n={n}): {len(failures)} of {config.replications} "
            f"replications failed; first: {failures[0][1]}"
        )
    est_mean, est_se = _mean_se([r.estimation_error for r in records])
    pred_mean, pred_se = _mean_se([r.prediction_error for r in records])
    return CellSummary(case, float(snr), int(n), est_mean, est_se, pred_mean, pred_se,
                       len(records), failures, records)


def run_cell(config: ExperimentConfig, n: int, snr: float, case: str) -> CellSummary:
    """Run every replication of one ``(n, snr, case)`` cell and aggregate.

    Replications raising a linear-algebra error are recorded in
    ``failures`` and skipped.  More than 5% failures raises
    :class:`ExperimentError`.
    """
    tasks = [(config, n, snr, case, i) for i in range(config.replications)]
    return _summarise(config, n, snr, case, _map(config, tasks))


def run_experiment(config: ExperimentConfig, diagnostics: bool = False) -> ExperimentReport:
    """Run all cells; replications of all cells share one worker pool.

    A cell over its failure budget is logged into ``report.failures``
    instead of aborting the whole run.
    """
    keys = [(n, snr, case) for snr in config.snr_list for case in config.cases for n in config.n_list]
    tasks = [(config, n, snr, case, i) for n, snr, case in keys for i in range(config.replications)]
    outcomes = _map(config, tasks)
    report = ExperimentReport(config=config)
    R = config.replications
    for k, (n, snr, case) in enumerate(keys):
        try:
            cell = _summarise(config, n, snr, case, outcomes[k * R:(k + 1) * R])
        except ExperimentError as exc:
            log.error("%s", exc)
            report.failures.append(str(exc))
            continue
        report.cells.append(cell)
        for idx, msg in cell.failures:
            report.failures.append(f"case={case} snr={snr} n={n} rep={idx}: {msg}")
    if diagnostics:
        report.diagnostics = run_diagnostics(config)
    return report


def run_diagnostics(config: ExperimentConfig) -> list[dict]:
    """Theory-side checks on the first replication of each ``n``.

    Reports the trace inequality at the GCV-selected ``rho``, the smallest
    constant ``C`` for which the eigenvalue tail condition holds with
    exponent ``config.decay_q``, and the site-separation condition.
    """
    rows = []
    system = _spline_system(config.p, config.m)
    for n in config.n_list:
        grid = make_grid(n, config.d)
        X = generate_covariates(grid, config.p, stream(config.seed, n, 0, _COVARIATE_STREAM),
                                lambda_mode=config.lambda_mode)
        truth = slope_case(config.cases[0])
        resp = generate_responses(X, truth, config.snr_list[0], stream(config.seed, n, 0, _NOISE_STREAM),
                                  m=config.m)
        design = center(X, resp)
        result = fit_gcv(design, system, config.rho_grid)
        tr_m, tr_m2, holds = trace_inequality_check(design, system, result.rho)
        cov = empirical_covariance(design)
        decay = eigen_decay_diagnostic(cov, config.decay_q, 1.0)
        c_min = max(tail * r ** (2 * config.decay_q) for r, tail, _, _ in decay)
        dist, threshold, separated = separation_diagnostic(grid, config.target, config.theta)
        rows.append(dict(n=n, rho=result.rho, tr_M=tr_m, tr_M2=tr_m2, trace_holds=holds,
                         decay_q=config.decay_q, decay_C_min=c_min, target_distance=dist,
                         separation_threshold=threshold, separated=separated))
    return rows


def write_report_csv(report: ExperimentReport, path) -> Path:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for c in report.cells:
                w.writerow([c.case, repr(c.snr), c.n, "estimation", repr(c.estimation_mean),
                            repr(c.estimation_stderr), c.reps])
                w.writerow([c.case, repr(c.snr), c.n, "prediction", repr(c.prediction_mean),
                            repr(c.prediction_stderr), c.reps])
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_report_csv(path) -> ExperimentReport:
    """Parse a CSV written by :func:`write_report_csv` back into a report."""
    cells: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["case"], float(row["snr"]), int(row["n"]))
            cell = cells.setdefault(key, CellSummary(*key, math.nan, math.nan, math.nan, math.nan,
                                                     int(row["reps"])))
            mean, se = float(row["mean"]), float(row["stderr"])
            if row["metric"] == "estimation":
                cell.estimation_mean, cell.estimation_stderr = mean, se
            else:
                cell.prediction_mean, cell.prediction_stderr = mean, se
    return ExperimentReport(config=None, cells=list(cells.values()))


def format_tables(report: ExperimentReport) -> str:
    """Plain-text tables laid out as snr / case rows by ``n^2`` columns."""
    ns = sorted({c.n for c in report.cells})
    snrs = sorted({c.snr for c in report.cells})
    cases = sorted({c.case for c in report.cells})
    d = report.config.d if report.config else 2
    out = []
    for title, attr in (("Estimation errors", "estimation_mean"),
                        ("Prediction errors at the non-visited site", "prediction_mean")):
        header = ["snr(%)", "Case"] + [f"n^{d}={n}^{d}" for n in ns]
        lines = [header]
        for snr in snrs:
            for case in cases:
                row = [f"{100 * snr:g}", case]
                for n in ns:
                    try:
                        row.append(f"{getattr(report.cell(case, snr, n), attr):.4f}")
                    except KeyError:
                        row.append("-")
                lines.append(row)
        widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
        out.append(title)
        out.extend("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in lines)
        out.append("")
    rates = report.rate_table() if report.cells else {}
    if rates:
        out.append("Rate slopes, log(estimation error) vs log(n^d)")
        for (snr, case), slope in sorted(rates.items()):
            out.append(f"  snr={100 * snr:g}% case={case}: {slope:+.3f}")
        out.append("")
    return "\n".join(out)


def emit_report(report: ExperimentReport, out_dir, fmt: str = "csv") -> list[Path]:
    """Write the report (and any diagnostics/failures) under ``out_dir``.

    ``fmt`` is ``"csv"`` (``report.csv``) or ``"table"`` (``report.txt``).
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = []
    if fmt == "csv":
        written.append(write_report_csv(report, out_dir / "report.csv"))
    elif fmt == "table":
        path = out_dir / "report.txt"
        path.write_text(format_tables(report))
        written.append(path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if report.diagnostics:
        path = out_dir / "diagnostics.csv"
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(report.diagnostics[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(report.diagnostics)
        written.append(path)
    if report.failures:
        path = out_dir / "failures.txt"
        path.write_text("\n".join(report.failures) + "\n")
        written.append(path)
    return written
