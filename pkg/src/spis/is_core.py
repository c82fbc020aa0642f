"""The saddle-point integrand psi and the normal-core / power-tail IS density g_n."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .models import CumulantModel
from .saddlepoint import SaddlePoint
from .special import regularized_gamma_p, unit_sphere_area

__all__ = [
    "ISDensityParams",
    "ParameterError",
    "PsiContext",
    "PsiOverflowError",
    "choose_parameters",
    "psi",
    "is_pdf",
    "is_sample",
]

log = logging.getLogger(__name__)

OVERFLOW_EXPONENT = 700.0


class ParameterError(ValueError):
    pass


class PsiOverflowError(OverflowError):
    pass


@dataclass(frozen=True)
class ISDensityParams:
    """g(v) = b * phi_d(v) on |v| < a and C / |v|^alpha on |v| >= a."""

    d: int
    alpha: float
    a: float
    b: float
    p: float
    C: float
    notes: tuple[str, ...] = field(default=(), compare=False)

    @classmethod
    def from_core_mass(cls, d: int, alpha: float, a: float, p: float, notes=()) -> "ISDensityParams":
        if d < 1:
            raise ParameterError("dimension must be >= 1")
        if alpha <= d:
            raise ParameterError(f"tail not normalizable: alpha={alpha} must exceed d={d}")
        if a <= 0:
            raise ParameterError("core radius a must be positive")
        if not 0 < p < 1:
            raise ParameterError(f"core mass p={p} must lie in (0, 1)")
        core = regularized_gamma_p(d / 2, a * a / 2)
        b = p / core
        return cls(d=d, alpha=float(alpha), a=float(a), b=b, p=float(p), C=(1 - p) / tail_integral(d, alpha, a), notes=tuple(notes))

    @classmethod
    def from_core_scale(cls, d: int, alpha: float, a: float, b: float, notes=()) -> "ISDensityParams":
        core = regularized_gamma_p(d / 2, a * a / 2)
        if not 0 < b < 1 / core:
            raise ParameterError(f"core scale b={b} must lie in (0, 1/IG(d/2, a^2/2)) = (0, {1 / core:.6g})")
        return cls.from_core_mass(d, alpha, a, b * core, notes)

    @property
    def core_probability(self) -> float:
        """IG(d/2, a^2/2): standard normal mass inside the core ball."""
        return self.p / self.b

    def logpdf(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        r2 = np.sum(v * v, axis=-1)
        core = math.log(self.b) - 0.5 * self.d * math.log(2 * math.pi) - 0.5 * r2
        with np.errstate(divide="ignore"):
            tail = math.log(self.C) - 0.5 * self.alpha * np.log(r2)
        return np.where(r2 < self.a * self.a, core, tail)

    def pdf(self, v) -> np.ndarray:
        return np.exp(self.logpdf(v))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Mixture draw: truncated normal core with prob. p, power-law radial tail otherwise."""
        d = self.d
        in_core = rng.random(size) < self.p
        n_core = int(in_core.sum())
        out = np.empty((size, d))
        out[in_core] = _truncated_normal(rng, n_core, d, self.a, self.core_probability)
        n_tail = size - n_core
        u = rng.random(n_tail)
        radius = self.a * (1.0 - u) ** (-1.0 / (self.alpha - d))
        out[~in_core] = radius[:, None] * _unit_directions(rng, n_tail, d)
        return out


def tail_integral(d: int, alpha: float, a: float) -> float:
    """int_{|v| >= a} |v|^{-alpha} dv over R^d (finite iff alpha > d)."""
    return unit_sphere_area(d) * a ** (d - alpha) / (alpha - d)


def _truncated_normal(rng, k, d, a, acceptance):
    # rejection from the unconditioned standard normal
    out = np.empty((k, d))
    filled = 0
    while filled < k:
        need = k - filled
        batch = rng.standard_normal((int(need / acceptance * 1.1) + 8, d))
        keep = batch[np.sum(batch * batch, axis=1) < a * a][:need]
        out[filled : filled + len(keep)] = keep
        filled += len(keep)
    return out


def _unit_directions(rng, k, d):
    if d == 1:
        return np.where(rng.random(k) < 0.5, -1.0, 1.0)[:, None]
    z = rng.standard_normal((k, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def choose_parameters(
    n: int,
    d: int,
    alpha: float | None = None,
    a: float | None = None,
    p: float | None = None,
    xi: float | None = None,
) -> ISDensityParams:
    """IS parameters from the practical guideline, with overrides.

    Defaults: alpha = d + 1, a = 2, p = 0.9 (d = 1) or 0.95 (d >= 2).  Passing
    ``xi`` switches to the decaying schedule b_n = 1 - n^{-xi} instead of a
    constant core mass.  A requested alpha <= d cannot be normalized; it is
    replaced by d + 1 and the substitution is recorded in ``notes``.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    notes = []
    if alpha is None:
        alpha = d + 1.0
    elif alpha <= d:
        notes.append(f"alpha={alpha:g} <= d={d} is not normalizable; using alpha={d + 1}")
        log.warning(notes[-1])
        alpha = d + 1.0
    a = 2.0 if a is None else float(a)
    if xi is not None:
        if p is not None:
            raise ParameterError("pass either p or xi, not both")
        return ISDensityParams.from_core_scale(d, alpha, a, 1.0 - n ** (-float(xi)), notes)
    if p is None:
        p = 0.9 if d == 1 else 0.95
    return ISDensityParams.from_core_mass(d, alpha, a, float(p), notes)


def is_pdf(params: ISDensityParams, v) -> np.ndarray:
    return params.pdf(v)


def is_sample(params: ISDensityParams, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    out = params.sample(rng, 1 if size is None else size)
    return out[0] if size is None else out


class PsiContext:
    """psi(v) = exp(n * eta(y, theta*)) at y = A v / sqrt(n), for a fixed saddle point and n."""

    def __init__(self, model: CumulantModel, sp: SaddlePoint, n: int):
        self.model = model
        self.sp = sp
        self.n = int(n)
        self.scale = self.sp.A / math.sqrt(self.n)

    def _y(self, v):
        return np.asarray(v, dtype=float) @ self.scale

    def log_psi(self, v) -> np.ndarray:
        """n * eta, complex, batched over the leading axes of ``v``."""
        sp, n = self.sp, self.n
        y = self._y(v)
        quad = 0.5 * np.einsum("...i,ij,...j->...", y, sp.hessian, y)
        incr = self.model.cgf_complex(sp.theta + 1j * y) - sp.cgf_value - 1j * (y @ sp.x0)
        return n * (quad + incr)

    def log_psi_phi(self, v) -> np.ndarray:
        """log(psi(v)) - |v|^2/2, i.e. n log phi_theta*(A v / sqrt(n)); never overflows."""
        sp, n = self.sp, self.n
        y = self._y(v)
        return n * (self.model.cgf_complex(sp.theta + 1j * y) - sp.cgf_value - 1j * (y @ sp.x0))

    def __call__(self, v) -> np.ndarray:
        expo = self.log_psi(v)
        too_big = np.asarray(np.real(expo) > OVERFLOW_EXPONENT)
        if np.any(too_big):
            r = np.linalg.norm(np.asarray(v, dtype=float), axis=-1)[too_big].flat[0]
            raise PsiOverflowError(f"psi overflows at |v| = {r:.6g}")
        return np.exp(expo)

    def alternate(self, v) -> np.ndarray:
        """exp(|v|^2/2) * phi_theta*(A v / sqrt(n))^n, with the power taken as exp(n * log-difference)."""
        v = np.asarray(v, dtype=float)
        return np.exp(0.5 * np.sum(v * v, axis=-1) + self.log_psi_phi(v))


def psi(ctx: PsiContext, v) -> np.ndarray:
    return ctx(v)
