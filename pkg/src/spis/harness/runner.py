"""Execute every (target, n, N, method) cell of an experiment."""

from __future__ import annotations

import logging
import math
import time
from typing import Optional

from pydantic import BaseModel

from ..baselines import bgl_tail_1d, cmc_density, naive_mc, oet_tail
from ..estimators import EstimateReport, estimate_density, estimate_overshoot, estimate_tail
from ..saddlepoint import (
    exact_asymptotic_density,
    exact_asymptotic_overshoot,
    exact_asymptotic_tail,
    solve_saddle_point,
)
from ..tail_sets import SignedCombination
from .config import ExperimentConfig

__all__ = ["COLUMNS", "ResultRow", "exact_asymptotic", "run_experiment"]

log = logging.getLogger(__name__)

COLUMNS = (
    "scenario",
    "method",
    "n",
    "N",
    "estimate",
    "ci_half_width",
    "weight_variance",
    "cov",
    "exact_asymptotic",
    "variance_reduction",
    "per_sample_time_us",
    "seed",
)

NAN = float("nan")


class ResultRow(BaseModel):
    scenario: str
    method: str
    n: int
    N: int
    estimate: float = NAN
    ci_half_width: float = NAN
    weight_variance: float = NAN
    cov: float = NAN
    exact_asymptotic: float = NAN
    variance_reduction: float = NAN
    per_sample_time_us: float = NAN
    seed: int
    error: Optional[str] = None
    extras: dict = {}


def exact_asymptotic(model, config: ExperimentConfig, target, n: int) -> float:
    """Deterministic leading-order approximation of the target quantity."""
    kind = config.target.type
    if kind == "density":
        return exact_asymptotic_density(solve_saddle_point(model, target), n)
    if kind == "overshoot":
        return exact_asymptotic_overshoot(solve_saddle_point(model, [target]), n)
    if isinstance(target, SignedCombination):
        return sum(term.sign * _tail_asymptotic(term.model or model, term.tail_set, n) for term in target.terms)
    return _tail_asymptotic(model, target, n)


def _tail_asymptotic(model, tail_set, n):
    return exact_asymptotic_tail(solve_saddle_point(model, tail_set.x0), tail_set, n)


def _targets(config: ExperimentConfig, model):
    kind = config.target.type
    if kind == "density":
        points = config.target.points
        if len(points) == 1:
            return [(config.scenario, points[0])]
        return [(f"{config.scenario}@x={','.join(f'{c:g}' for c in p)}", p) for p in points]
    if kind == "overshoot":
        return [(config.scenario, config.target.x0)]
    return [(config.scenario, config.build_target(model))]


def _run_cell(method, model, config, target, n, N, stream, workers) -> EstimateReport:
    kind = config.target.type
    common = {"seed": config.seed, "stream": stream, "workers": workers}
    if method == "SPIS":
        spis = {"antithetic": config.antithetic, "is_options": config.is_.kwargs(), **common}
        if kind == "density":
            return estimate_density(model, target, n, N, **spis)
        if kind == "overshoot":
            return estimate_overshoot(model, target, n, N, **spis)
        return estimate_tail(model, target, n, N, **spis)
    if method == "CMC":
        return cmc_density(model, target, n, N, **common)
    if method == "Naive":
        return naive_mc(model, target, n, N, **common)
    if method == "OET":
        return oet_tail(model, target, n, N, **common)
    if method == "BGL":
        return bgl_tail_1d(model, target, n, N, freeze=config.bgl_freeze, **common)
    raise ValueError(f"unknown method {method}")


def _extras(report: EstimateReport) -> dict:
    out = {
        "std_error": report.std_error,
        "weight_mean": report.weight_mean,
        "imag_residual": report.imag_residual,
    }
    for key, value in report.extras.items():
        if isinstance(value, (int, float)):
            out[key] = float(value)
    if report.notes:
        out["notes"] = "; ".join(report.notes)
    return out


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> list[ResultRow]:
    """Run all cells in a fixed order; a failing cell yields a row with ``error`` set."""
    workers = workers or config.workers
    model = config.build_model()
    rows = []
    for label, target in _targets(config, model):
        for n in config.n:
            try:
                exact = exact_asymptotic(model, config, target, n)
            except Exception as exc:  # the asymptotic is informative only
                log.warning("exact asymptotic failed for %s n=%d: %s", label, n, exc)
                exact = NAN
            for N in config.N:
                cell: dict[str, EstimateReport] = {}
                cell_rows = []
                for method in config.methods:
                    stream = f"{label}|{method}|n={n}|N={N}"
                    base = {"scenario": label, "method": method, "n": n, "N": N, "seed": config.seed}
                    start = time.perf_counter()
                    try:
                        report = _run_cell(method, model, config, target, n, N, stream, workers)
                    except Exception as exc:
                        log.error("cell %s failed: %s", stream, exc)
                        cell_rows.append(ResultRow(**base, exact_asymptotic=exact, error=f"{type(exc).__name__}: {exc}"))
                        continue
                    elapsed = time.perf_counter() - start
                    cell[method] = report
                    cell_rows.append(
                        ResultRow(
                            **base,
                            estimate=report.estimate,
                            ci_half_width=report.ci_half_width,
                            weight_variance=report.variance,
                            cov=report.cov,
                            exact_asymptotic=exact,
                            per_sample_time_us=1e6 * elapsed / N,
                            extras=_extras(report),
                        )
                    )
                ref = cell.get(config.reference) if config.reference else None
                for row in cell_rows:
                    if ref is not None and row.method in cell and cell[row.method].variance > 0:
                        row.variance_reduction = ref.variance / cell[row.method].variance
                rows.extend(cell_rows)
    return rows
