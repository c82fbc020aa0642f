"""Saddle-point solve grad Lambda(theta) = x0 and the exact-asymptotic prefactors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .models import CumulantModel

if TYPE_CHECKING:
    from .tail_sets import TailSet

__all__ = [
    "SaddlePoint",
    "SaddlePointError",
    "DegenerateSaddlePointError",
    "ConvergenceError",
    "solve_saddle_point",
    "inverse_sqrt",
    "exact_asymptotic_density",
    "exact_asymptotic_tail",
    "exact_asymptotic_overshoot",
]

RESIDUAL_TOL = 1e-10
MAX_ITER = 200
MIN_STEP = 2.0**-30
DEGENERACY_RATIO = 1e-12


class SaddlePointError(RuntimeError):
    pass


class DegenerateSaddlePointError(SaddlePointError):
    pass


class ConvergenceError(SaddlePointError):
    pass


@dataclass(frozen=True)
class SaddlePoint:
    theta: np.ndarray
    x0: np.ndarray
    cgf_value: float
    hessian: np.ndarray
    A: np.ndarray
    det_hessian: float
    kappa_min: float
    kappa_max: float
    residual: float

    @property
    def dim(self) -> int:
        return self.theta.size

    def log_decay(self, n: int) -> float:
        """n * (Lambda(theta*) - theta* . x0), the log of the exponential rate factor."""
        return n * (self.cgf_value - float(self.theta @ self.x0))


def inverse_sqrt(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric inverse square root of an SPD matrix and its eigenvalues."""
    H = 0.5 * (H + H.T)
    eigval, Q = np.linalg.eigh(H)
    if eigval[0] <= DEGENERACY_RATIO * max(eigval[-1], 0.0) or eigval[0] <= 0:
        raise DegenerateSaddlePointError(f"degenerate saddle point: Hessian eigenvalues {eigval}")
    A = (Q / np.sqrt(eigval)) @ Q.T
    return 0.5 * (A + A.T), eigval


def solve_saddle_point(model: CumulantModel, x0, init=None, tol: float = RESIDUAL_TOL) -> SaddlePoint:
    """Damped Newton on grad Lambda(theta) - x0 starting from ``init`` (default 0).

    Steps are halved until the iterate is interior and the residual decreases.
    Iteration stops at an absolute residual ``tol``; if rounding prevents
    that, the result is accepted when the residual is within ``tol * (1 + |x0|)``.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != (model.dim,):
        raise ValueError(f"x0 must have shape ({model.dim},), got {x0.shape}")
    theta = np.zeros(model.dim) if init is None else np.array(init, dtype=float).reshape(model.dim)
    model.check_domain(theta)
    fallback = tol * (1.0 + np.linalg.norm(x0))

    res_vec = model.grad(theta) - x0
    res = np.linalg.norm(res_vec)
    for _ in range(MAX_ITER):
        if res <= tol:
            break
        step = np.linalg.solve(model.hess(theta), -res_vec)
        t = 1.0
        while t >= MIN_STEP:
            cand = theta + t * step
            if model.in_domain(cand):
                cand_vec = model.grad(cand) - x0
                cand_res = np.linalg.norm(cand_vec)
                if cand_res < res:
                    break
            t *= 0.5
        else:
            if res <= fallback:
                break
            raise SaddlePointError(f"saddle point not found in domain (residual {res:.3e} at theta={theta})")
        theta, res_vec, res = cand, cand_vec, cand_res
    else:
        if res > fallback:
            raise ConvergenceError(f"Newton did not converge in {MAX_ITER} iterations; residual {res:.3e}")

    H = model.hess(theta)
    A, eigval = inverse_sqrt(H)
    return SaddlePoint(
        theta=theta,
        x0=x0,
        cgf_value=float(model.cgf(theta)),
        hessian=H,
        A=A,
        det_hessian=float(np.prod(eigval)),
        kappa_min=float(eigval[0]),
        kappa_max=float(eigval[-1]),
        residual=float(res),
    )


def exact_asymptotic_density(sp: SaddlePoint, n: int) -> float:
    """(n/2pi)^{d/2} exp(n(Lambda - theta.x0)) / sqrt(det H)."""
    d = sp.dim
    return (n / (2 * math.pi)) ** (d / 2) * math.exp(sp.log_decay(n)) / math.sqrt(sp.det_hessian)


def exact_asymptotic_tail(sp: SaddlePoint, tail_set: "TailSet", n: int) -> float:
    """(2pi)^{-k/2} c(n) exp(n(Lambda - theta.x0)) / sqrt(det H_k) for a dominated set.

    k is the number of constrained coordinates and H_k the leading k x k block
    of the Hessian (the full Hessian unless the set is a partial orthant).
    """
    c = tail_set.c_constant(sp, n)
    k = tail_set.effective_dim(sp.dim)
    det = sp.det_hessian if k == sp.dim else float(np.linalg.det(sp.hessian[:k, :k]))
    return (2 * math.pi) ** (-k / 2) * c * math.exp(sp.log_decay(n)) / math.sqrt(det)


def exact_asymptotic_overshoot(sp: SaddlePoint, n: int) -> float:
    """Asymptotic E[(S_n - n x0) ; S_n > n x0] for d = 1; equals (1/theta*) times the tail asymptotic."""
    if sp.dim != 1:
        raise ValueError("expected overshoot is only supported for d = 1")
    theta = float(sp.theta[0])
    if theta <= 0:
        raise ValueError("overshoot needs theta* > 0 (x0 above the mean)")
    return math.exp(sp.log_decay(n)) / (math.sqrt(2 * math.pi * n * sp.det_hessian) * theta**2)
