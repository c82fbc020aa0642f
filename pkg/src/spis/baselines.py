"""Reference estimators: naive Monte Carlo, conditional MC densities, and
state-independent (OET) and state-dependent (BGL) exponential twisting.

All of them simulate the n summands explicitly, so per-draw cost is O(n).
"""

from __future__ import annotations

import math
import time

import numpy as np

from .estimators import EstimateReport, RunningStats, _report, combine_signed
from .models import CumulantModel
from .rng import map_blocks
from .saddlepoint import solve_saddle_point
from .tail_sets import FullOrthant, SignedCombination, TailSet

__all__ = ["naive_mc", "cmc_density", "oet_tail", "bgl_tail_1d"]

# draws per block are further chunked so that (chunk, n, d) arrays stay small
_MAX_CHUNK_ELEMENTS = 2_000_000


def _chunks(size, n, d):
    step = max(1, _MAX_CHUNK_ELEMENTS // max(1, n * d))
    for start in range(0, size, step):
        yield min(step, size - start)


def _collect(method, blocks, n, seed, start, notes=()):
    stats = RunningStats()
    for b in blocks:
        stats.update(b)
    return _report(method, stats, None, 1.0, n, seed, time.perf_counter() - start, notes)


def _signed(fn, model, tail_set, n, N, seed, stream, workers, method, **kw):
    parts = [
        (term.sign, fn(term.model or model, term.tail_set, n, N, seed=seed, stream=f"{stream}/term{k}", workers=workers, **kw))
        for k, term in enumerate(tail_set.terms)
    ]
    return combine_signed(parts, method)


def naive_mc(
    model: CumulantModel,
    tail_set: TailSet | None,
    n: int,
    N: int,
    *,
    seed: int = 0,
    stream: str = "naive",
    workers: int = 1,
) -> EstimateReport:
    """Indicator average of {Xbar_n in A} under the original law; ``None`` means all of R^d."""
    if isinstance(tail_set, SignedCombination):
        return _signed(naive_mc, model, tail_set, n, N, seed, stream, workers, "Naive")
    start = time.perf_counter()
    d = model.dim

    def block(rng, size):
        out = []
        for k in _chunks(size, n, d):
            xbar = model.sample(rng, k * n).reshape(k, n, d).mean(axis=1)
            hit = np.ones(k) if tail_set is None else tail_set.contains(xbar).astype(float)
            out.append(hit)
        return np.concatenate(out)

    blocks = map_blocks(block, N, seed, stream, workers)
    hits = sum(float(b.sum()) for b in blocks)
    notes = ("no hits",) if hits == 0 else ()
    return _collect("Naive", blocks, n, seed, start, notes)


def cmc_density(
    model: CumulantModel,
    x0,
    n: int,
    N: int,
    *,
    seed: int = 0,
    stream: str = "cmc",
    workers: int = 1,
) -> EstimateReport:
    """Conditional MC for the density of Xbar_n: average of n f(n x0 - S_{n-1})."""
    if model.dim != 1 or not model.has_pdf:
        raise ValueError("conditional MC needs a one-dimensional model with a density")
    start = time.perf_counter()
    x = float(np.asarray(x0, dtype=float).ravel()[0])

    def block(rng, size):
        if n == 1:
            return np.full(size, float(model.pdf(x)))
        out = []
        for k in _chunks(size, n - 1, 1):
            s = model.sample(rng, k * (n - 1)).reshape(k, n - 1).sum(axis=1)
            out.append(n * model.pdf(n * x - s))
        return np.concatenate(out)

    return _collect("CMC", map_blocks(block, N, seed, stream, workers), n, seed, start)


def oet_tail(
    model: CumulantModel,
    tail_set: TailSet,
    n: int,
    N: int,
    *,
    seed: int = 0,
    stream: str = "oet",
    workers: int = 1,
) -> EstimateReport:
    """Each summand tilted by theta*; weight 1{Xbar_n in A} exp(n Lambda(theta*) - theta*.S_n)."""
    if isinstance(tail_set, SignedCombination):
        return _signed(oet_tail, model, tail_set, n, N, seed, stream, workers, "OET")
    start = time.perf_counter()
    sp = solve_saddle_point(model, tail_set.x0)
    theta = sp.theta
    d = model.dim
    log_m = n * sp.cgf_value

    def block(rng, size):
        out = []
        for k in _chunks(size, n, d):
            s = model.sample_tilted(rng, theta, k * n).reshape(k, n, d).sum(axis=1)
            hit = tail_set.contains(s / n)
            out.append(np.where(hit, np.exp(log_m - s @ theta), 0.0))
        return np.concatenate(out)

    return _collect("OET", map_blocks(block, N, seed, stream, workers), n, seed, start)


def _twist_for_mean(model, m):
    try:
        return model.grad_inverse(m)
    except NotImplementedError:
        return np.array([solve_saddle_point(model, [mi]).theta[0] for mi in np.ravel(m)]).reshape(np.shape(m))


def bgl_tail_1d(
    model: CumulantModel,
    x0,
    n: int,
    N: int,
    *,
    freeze: float = 2.0,
    seed: int = 0,
    stream: str = "bgl",
    workers: int = 1,
) -> EstimateReport:
    """State-dependent twisting for P[S_n >= n x0] in one dimension.

    Summand k+1 is tilted to mean (n x0 - S_k)/(n - k).  Once S_k >= n x0 the
    remaining summands use the original law; once the target mean reaches
    ``freeze * x0`` the twist is held fixed for all remaining summands.
    """
    if model.dim != 1:
        raise ValueError("BGL baseline is implemented for d = 1 only")
    if isinstance(x0, FullOrthant):
        x0 = x0.x0
    x = float(np.asarray(x0, dtype=float).ravel()[0])
    mean = float(model.mean()[0])
    if x <= mean:
        raise ValueError(f"x0={x} must exceed the mean {mean}")
    start = time.perf_counter()
    level = n * x

    def block(rng, size):
        s = np.zeros(size)
        log_lr = np.zeros(size)
        stopped = np.zeros(size, dtype=bool)
        frozen = np.full(size, np.nan)
        for k in range(n):
            stopped |= (s >= level) & np.isnan(frozen)
            target = (level - s) / (n - k)
            newly = ~stopped & np.isnan(frozen) & (target >= freeze * x)
            if newly.any():
                frozen[newly] = _twist_for_mean(model, target[newly])
            theta = np.zeros(size)
            live = ~stopped & np.isnan(frozen) & (target > mean)
            if live.any():
                theta[live] = _twist_for_mean(model, target[live])
            held = ~np.isnan(frozen)
            theta[held] = frozen[held]
            step = model.sample_tilted(rng, theta[:, None], size)[:, 0]
            log_lr += model.cgf(theta[:, None]) - theta * step
            s += step
        return np.where(s >= level, np.exp(log_lr), 0.0)

    return _collect("BGL", map_blocks(block, N, seed, stream, workers), n, seed, start)
