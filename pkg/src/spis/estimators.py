"""Saddle-point importance-sampling estimators and weight aggregation.

Each estimator draws V ~ g_n, forms the complex weight of the saddle-point
integral at V, and averages real parts.  The deterministic prefactor carries
the exponential decay, so per-draw work does not depend on n.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .is_core import ISDensityParams, ParameterError, PsiContext, choose_parameters
from .models import CumulantModel
from .rng import map_blocks
from .saddlepoint import (
    SaddlePoint,
    exact_asymptotic_density,
    exact_asymptotic_overshoot,
    exact_asymptotic_tail,
    solve_saddle_point,
)
from .tail_sets import FullOrthant, SignedCombination, TailSet

__all__ = [
    "EstimateReport",
    "RunningStats",
    "aggregate",
    "combine_signed",
    "estimate_density",
    "estimate_tail",
    "estimate_overshoot",
    "overshoot_rho",
]

Z95 = 1.96


class StatisticsError(ValueError):
    pass


@dataclass
class RunningStats:
    """Mean and centered second moment, merged block by block (Chan et al. update)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float).ravel()
        k = values.size
        if k == 0:
            return
        b_mean = float(values.mean())
        b_m2 = float(np.sum((values - b_mean) ** 2))
        total = self.count + k
        delta = b_mean - self.mean
        self.mean += delta * k / total
        self.m2 += b_m2 + delta * delta * self.count * k / total
        self.count = total

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else float("nan")


@dataclass
class EstimateReport:
    method: str
    estimate: float
    weight_mean: float
    weight_variance: float
    variance: float
    ci_half_width: float
    cov: float
    n_draws: int
    n: int
    prefactor: float
    imag_residual: float = 0.0
    imag_std_error: float = 0.0
    seed: int = 0
    wall_time: float = 0.0
    notes: tuple[str, ...] = ()
    extras: dict = field(default_factory=dict)

    @property
    def std_error(self) -> float:
        return math.sqrt(self.variance / self.n_draws)

    @property
    def weight_second_moment(self) -> float:
        """Estimate of E[w^2] for the normalized weight."""
        return self.weight_variance * (self.n_draws - 1) / self.n_draws + self.weight_mean**2

    @property
    def per_sample_time_us(self) -> float:
        return 1e6 * self.wall_time / self.n_draws

    @property
    def ci(self) -> tuple[float, float]:
        return self.estimate - self.ci_half_width, self.estimate + self.ci_half_width


def _report(method, real: RunningStats, imag: RunningStats | None, prefactor, n, seed, wall, notes=(), extras=None):
    if real.count < 2:
        raise StatisticsError("need at least two draws")
    wvar = real.variance
    var = prefactor * prefactor * wvar
    estimate = prefactor * real.mean
    cov = math.sqrt(wvar) / real.mean if real.mean != 0 else float("inf")
    imag_mean = imag.mean if imag is not None else 0.0
    imag_se = math.sqrt(imag.variance / imag.count) if imag is not None else 0.0
    return EstimateReport(
        method=method,
        estimate=estimate,
        weight_mean=real.mean,
        weight_variance=wvar,
        variance=var,
        ci_half_width=Z95 * math.sqrt(var / real.count),
        cov=cov,
        n_draws=real.count,
        n=n,
        prefactor=prefactor,
        imag_residual=imag_mean,
        imag_std_error=imag_se,
        seed=seed,
        wall_time=wall,
        notes=tuple(notes),
        extras=dict(extras or {}),
    )


def aggregate(weights, prefactor: float = 1.0, *, method: str = "weights", n: int = 0, seed: int = 0) -> EstimateReport:
    """Statistics of complex (or real) per-draw weights; the estimate uses real parts."""
    w = np.asarray(weights)
    if w.size == 0:
        raise StatisticsError("empty weight sequence")
    real, imag = RunningStats(), RunningStats()
    real.update(np.real(w))
    imag.update(np.imag(w))
    return _report(method, real, imag, prefactor, n, seed, 0.0)


class _SaddleIntegrand:
    """log of psi(v) phi_d(v) / g(v), shared by all three estimators."""

    def __init__(self, model: CumulantModel, sp: SaddlePoint, n: int, params: ISDensityParams):
        if params.d != model.dim:
            raise ValueError(f"IS density dimension {params.d} does not match model dimension {model.dim}")
        self.ctx = PsiContext(model, sp, n)
        self.params = params
        self.sp = sp
        self._log_norm = 0.5 * model.dim * math.log(2 * math.pi)

    def log_weight(self, v):
        return self.ctx.log_psi_phi(v) - self._log_norm - self.params.logpdf(v)


def _run(
    method: str,
    weight_fns: dict[str, Callable[[np.ndarray], np.ndarray]],
    params: ISDensityParams,
    N: int,
    seed: int,
    stream: str,
    workers: int,
    antithetic: bool,
):
    """Draw V ~ g in deterministic blocks; return stats per named weight and the raw real parts."""

    def block(rng, size):
        v = params.sample(rng, size)
        out = {}
        for name, fn in weight_fns.items():
            w = fn(v)
            if antithetic:
                w = 0.5 * (w + fn(-v))
            out[name] = w
        return out

    results = map_blocks(block, N, seed, stream, workers)
    stats = {}
    for name in weight_fns:
        real, imag = RunningStats(), RunningStats()
        for r in results:
            real.update(np.real(r[name]))
            imag.update(np.imag(r[name]))
        stats[name] = (real, imag)
    return stats, results


def _notes(params, antithetic):
    notes = list(params.notes)
    if antithetic:
        notes.append("antithetic pairs (v, -v); each draw is a pair average")
    return notes


def estimate_density(
    model: CumulantModel,
    x0,
    n: int,
    N: int,
    params: ISDensityParams | None = None,
    *,
    seed: int = 0,
    stream: str = "density",
    workers: int = 1,
    antithetic: bool = False,
    sp: SaddlePoint | None = None,
    is_options: dict | None = None,
) -> EstimateReport:
    """Unbiased estimate of the density of the sample mean of n draws at x0."""
    start = time.perf_counter()
    sp = sp or solve_saddle_point(model, x0)
    params = params or choose_parameters(n, model.dim, **(is_options or {}))
    if params.d != model.dim:
        raise ParameterError(f"IS density has dimension {params.d}, the integral has dimension {model.dim}")
    integrand = _SaddleIntegrand(model, sp, n, params)
    stats, _ = _run(
        "SPIS", {"w": lambda v: np.exp(integrand.log_weight(v))}, params, N, seed, stream, workers, antithetic
    )
    real, imag = stats["w"]
    notes = _notes(params, antithetic)
    if n < model.gamma:
        notes.append(f"n={n} below the declared integrability exponent gamma={model.gamma:g}")
    return _report(
        "SPIS", real, imag, exact_asymptotic_density(sp, n), n, seed, time.perf_counter() - start, notes
    )


def combine_signed(reports: list[tuple[int, EstimateReport]], method: str) -> EstimateReport:
    """sum_k s_k * estimate_k; independent terms, so estimator variances add."""
    estimate = sum(s * r.estimate for s, r in reports)
    est_var = sum(r.variance / r.n_draws for _, r in reports)
    n_draws = min(r.n_draws for _, r in reports)
    prefactor = sum(s * r.prefactor for s, r in reports)
    per_draw = est_var * n_draws
    return EstimateReport(
        method=method,
        estimate=estimate,
        weight_mean=estimate,
        weight_variance=per_draw,
        variance=per_draw,
        ci_half_width=Z95 * math.sqrt(est_var),
        cov=math.sqrt(per_draw) / estimate if estimate else float("inf"),
        n_draws=n_draws,
        n=reports[0][1].n,
        prefactor=prefactor,
        imag_residual=sum(s * r.imag_residual * r.prefactor for s, r in reports),
        imag_std_error=math.sqrt(sum((r.imag_std_error * r.prefactor) ** 2 for _, r in reports)),
        seed=reports[0][1].seed,
        wall_time=sum(r.wall_time for _, r in reports),
        notes=tuple(n for _, r in reports for n in r.notes),
        extras={"terms": [(s, r.estimate, r.ci_half_width) for s, r in reports]},
    )


def estimate_tail(
    model: CumulantModel,
    tail_set: TailSet,
    n: int,
    N: int,
    params: ISDensityParams | None = None,
    *,
    seed: int = 0,
    stream: str = "tail",
    workers: int = 1,
    antithetic: bool = False,
    is_options: dict | None = None,
) -> EstimateReport:
    """Unbiased estimate of P[Xbar_n in A] for a dominated orthant-like set A."""
    if isinstance(tail_set, SignedCombination):
        parts = []
        for k, term in enumerate(tail_set.terms):
            parts.append(
                (
                    term.sign,
                    estimate_tail(
                        term.model or model, term.tail_set, n, N, params,
                        seed=seed, stream=f"{stream}/term{k}", workers=workers, antithetic=antithetic,
                        is_options=is_options,
                    ),
                )
            )
        return combine_signed(parts, "SPIS")

    start = time.perf_counter()
    full_sp = solve_saddle_point(model, tail_set.x0)
    tail_set.validate(full_sp)
    exact = exact_asymptotic_tail(full_sp, tail_set, n)
    model, tail_set = tail_set.reduce(model)
    sp = full_sp if model.dim == full_sp.dim else solve_saddle_point(model, tail_set.x0)
    params = params or choose_parameters(n, model.dim, **(is_options or {}))
    if params.d != model.dim:
        raise ParameterError(f"IS density has dimension {params.d}, the integral has dimension {model.dim}")
    integrand = _SaddleIntegrand(model, sp, n, params)

    def weight(v):
        return tail_set.rho(sp, n, v @ sp.A) * np.exp(integrand.log_weight(v))

    stats, _ = _run("SPIS", {"w": weight}, params, N, seed, stream, workers, antithetic)
    real, imag = stats["w"]
    return _report("SPIS", real, imag, exact, n, seed, time.perf_counter() - start, _notes(params, antithetic))


def overshoot_rho(sp: SaddlePoint, n: int, t) -> np.ndarray:
    """Conjugate characteristic function of the density y exp(-sqrt(n) theta* y) / c~ on y > 0."""
    rate = math.sqrt(n) * float(sp.theta[0])
    t = np.asarray(t, dtype=float)[..., 0]
    return 1.0 / (1.0 + 1j * t / rate) ** 2


def estimate_overshoot(
    model: CumulantModel,
    x0: float,
    n: int,
    N: int,
    params: ISDensityParams | None = None,
    *,
    seed: int = 0,
    stream: str = "overshoot",
    workers: int = 1,
    antithetic: bool = False,
    is_options: dict | None = None,
) -> EstimateReport:
    """Unbiased estimate of E[(S_n - n x0) ; S_n > n x0] for d = 1.

    The tail probability is estimated from the same draws; ``extras`` holds the
    ratio overshoot / tail, its delta-method standard error and the limit 1/theta*.
    """
    if model.dim != 1:
        raise ValueError("expected overshoot is only supported for d = 1")
    start = time.perf_counter()
    x0 = float(np.asarray(x0, dtype=float).ravel()[0])
    sp = solve_saddle_point(model, [x0])
    theta = float(sp.theta[0])
    if theta <= 0:
        raise ValueError(f"x0={x0} is not above the mean (theta*={theta:.6g}); not a tail event")
    params = params or choose_parameters(n, 1, **(is_options or {}))
    integrand = _SaddleIntegrand(model, sp, n, params)
    orthant = FullOrthant([x0])

    def base(v):
        return np.exp(integrand.log_weight(v))

    fns = {
        "overshoot": lambda v: overshoot_rho(sp, n, v @ sp.A) * base(v),
        "tail": lambda v: orthant.rho(sp, n, v @ sp.A) * base(v),
    }
    stats, raw = _run("SPIS", fns, params, N, seed, stream, workers, antithetic)
    wall = time.perf_counter() - start

    pre_o = exact_asymptotic_overshoot(sp, n)
    pre_t = exact_asymptotic_tail(sp, orthant, n)
    o = np.concatenate([np.real(r["overshoot"]) for r in raw]) * pre_o
    p = np.concatenate([np.real(r["tail"]) for r in raw]) * pre_t
    o_mean, p_mean = o.mean(), p.mean()
    ratio = o_mean / p_mean
    cov_op = np.cov(o, p)
    # delta method for a ratio of correlated means
    ratio_var = (cov_op[0, 0] - 2 * ratio * cov_op[0, 1] + ratio**2 * cov_op[1, 1]) / (p_mean**2 * o.size)
    tail_report = _report("SPIS", *stats["tail"], pre_t, n, seed, wall)
    extras = {
        "tail_estimate": tail_report.estimate,
        "tail_std_error": tail_report.std_error,
        "ratio": float(ratio),
        "ratio_std_error": float(math.sqrt(max(ratio_var, 0.0))),
        "ratio_limit": 1.0 / theta,
    }
    return _report("SPIS", *stats["overshoot"], pre_o, n, seed, wall, _notes(params, antithetic), extras)
