"""Orthant-like target sets with closed-form c(n, theta*, x0) and rho_n(t).

For a set A with dominating point x0, ``r`` is the density proportional to
exp(-sqrt(n) theta*.y) on sqrt(n)(A - x0); ``c_constant`` is its normalizer and
``rho`` the complex conjugate of its characteristic function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .models import CumulantModel, Marginal, model_from_spec
from .saddlepoint import SaddlePoint, solve_saddle_point

__all__ = [
    "DominatingPointError",
    "TailSet",
    "FullOrthant",
    "PartialOrthant",
    "AffineOrthant",
    "Rectangle",
    "SignedTerm",
    "SignedCombination",
    "c_constant",
    "rho",
    "tail_set_from_spec",
    "partial_orthant_point",
]

ZERO_TOL = 1e-8
_HINT = (
    "; decompose the set into signed pieces with positive twists "
    "(e.g. P[Z1>=a, Z2>=b] = P[Z1>=a] - P[Z1>=a, -Z2>=-b]) or use a partial orthant"
)


class DominatingPointError(ValueError):
    pass


def _require_positive(values, label):
    for i, v in enumerate(np.atleast_1d(values)):
        if not v > 0:
            raise DominatingPointError(
                f"dominating-point condition failed: {label}[{i}] = {v:.6g} must be > 0{_HINT}"
            )


class TailSet:
    """Base class; ``x0`` is the dominating point."""

    x0: np.ndarray

    def validate(self, sp: SaddlePoint) -> None:
        raise NotImplementedError

    def c_constant(self, sp: SaddlePoint, n: int) -> float:
        raise NotImplementedError

    def rho(self, sp: SaddlePoint, n: int, t) -> np.ndarray:
        raise NotImplementedError

    def contains(self, x) -> np.ndarray:
        raise NotImplementedError

    def to_spec(self) -> dict:
        raise NotImplementedError

    def effective_dim(self, d: int) -> int:
        return d

    def reduce(self, model: CumulantModel) -> tuple[CumulantModel, "TailSet"]:
        """The (model, set) pair the saddle-point integral is actually taken over."""
        return model, self


def _orthant_rho(scaled_t, rates):
    # prod_i 1 / (1 + i t_i / rate_i)
    return np.prod(1.0 / (1.0 + 1j * scaled_t / rates), axis=-1)


@dataclass(frozen=True, eq=False)
class FullOrthant(TailSet):
    """A = x0 + R_+^d."""

    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))

    def validate(self, sp):
        _require_positive(sp.theta, "theta*")

    def c_constant(self, sp, n):
        self.validate(sp)
        return 1.0 / (n ** (sp.dim / 2) * float(np.prod(sp.theta)))

    def rho(self, sp, n, t):
        self.validate(sp)
        return _orthant_rho(np.asarray(t, dtype=float), math.sqrt(n) * sp.theta)

    def contains(self, x):
        return np.all(np.asarray(x) >= self.x0, axis=-1)

    def to_spec(self):
        return {"kind": "full_orthant", "x0": self.x0.tolist()}


@dataclass(frozen=True, eq=False)
class PartialOrthant(TailSet):
    """A = x0 + Q_{d'}^+: only the first d' coordinates are constrained.

    theta*_i must vanish for i > d'; use :func:`partial_orthant_point` to
    complete x0 from the d' thresholds.
    """

    x0: np.ndarray
    d_prime: int

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        if not 1 <= self.d_prime <= self.x0.size:
            raise ValueError(f"d_prime must be in [1, {self.x0.size}]")

    def validate(self, sp):
        k = self.d_prime
        _require_positive(sp.theta[:k], "theta*")
        free = sp.theta[k:]
        if free.size and np.max(np.abs(free)) > ZERO_TOL:
            i = int(np.argmax(np.abs(free)))
            raise DominatingPointError(
                f"dominating-point condition failed: theta*[{k + i}] = {free[i]:.6g} must be 0 for an "
                f"unconstrained coordinate; x0 is not the dominating point (see partial_orthant_point)"
            )

    def c_constant(self, sp, n):
        self.validate(sp)
        k = self.d_prime
        return 1.0 / (n ** (k / 2) * float(np.prod(sp.theta[:k])))

    def rho(self, sp, n, t):
        self.validate(sp)
        k = self.d_prime
        t = np.asarray(t, dtype=float)
        return _orthant_rho(t[..., :k], math.sqrt(n) * sp.theta[:k])

    def contains(self, x):
        k = self.d_prime
        return np.all(np.asarray(x)[..., :k] >= self.x0[:k], axis=-1)

    def to_spec(self):
        return {"kind": "partial_orthant", "x0": self.x0.tolist(), "d_prime": self.d_prime}

    def effective_dim(self, d):
        return self.d_prime

    def reduce(self, model):
        # integrating out the free coordinates leaves the full orthant of the d' marginal
        k = self.d_prime
        return Marginal(model, k), FullOrthant(self.x0[:k])


@dataclass(frozen=True, eq=False)
class AffineOrthant(TailSet):
    """A = x0 + B R_+^d for nonsingular B; reduces to the full orthant in z = B^{-1} y."""

    x0: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if B.shape != (self.x0.size, self.x0.size):
            raise ValueError(f"B must be {self.x0.size}x{self.x0.size}")
        if abs(np.linalg.det(B)) < 1e-14:
            raise ValueError("B must be nonsingular")
        object.__setattr__(self, "B", B)

    def _rates(self, sp):
        return self.B.T @ sp.theta

    def validate(self, sp):
        _require_positive(self._rates(sp), "(B^T theta*)")

    def c_constant(self, sp, n):
        self.validate(sp)
        return abs(float(np.linalg.det(self.B))) / (n ** (sp.dim / 2) * float(np.prod(self._rates(sp))))

    def rho(self, sp, n, t):
        self.validate(sp)
        t = np.asarray(t, dtype=float)
        return _orthant_rho(t @ self.B, math.sqrt(n) * self._rates(sp))

    def contains(self, x):
        z = np.linalg.solve(self.B, (np.asarray(x) - self.x0).T).T
        return np.all(z >= 0, axis=-1)

    def to_spec(self):
        return {"kind": "affine_orthant", "x0": self.x0.tolist(), "B": self.B.tolist()}


@dataclass(frozen=True, eq=False)
class Rectangle(TailSet):
    """A = prod_i [x0_i, x0_i + D_i]; widths may be ``inf``."""

    x0: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))
        w = np.atleast_1d(np.asarray(self.widths, dtype=float))
        if w.shape != self.x0.shape or np.any(w <= 0):
            raise ValueError("widths must be positive, one per coordinate")
        object.__setattr__(self, "widths", w)

    def validate(self, sp):
        _require_positive(sp.theta, "theta*")

    def c_constant(self, sp, n):
        self.validate(sp)
        trunc = -np.expm1(-n * sp.theta * self.widths)
        return float(np.prod(trunc)) / (n ** (sp.dim / 2) * float(np.prod(sp.theta)))

    def rho(self, sp, n, t):
        self.validate(sp)
        t = np.asarray(t, dtype=float)
        rate = math.sqrt(n) * sp.theta
        z = 1.0 + 1j * t / rate
        decay = n * sp.theta * self.widths
        with np.errstate(over="ignore", invalid="ignore"):
            ratio = -np.expm1(-decay * z) / -np.expm1(-decay)
        ratio = np.where(np.isinf(self.widths), 1.0 + 0j, ratio)
        return np.prod(ratio / z, axis=-1)

    def contains(self, x):
        x = np.asarray(x)
        return np.all((x >= self.x0) & (x <= self.x0 + self.widths), axis=-1)

    def to_spec(self):
        return {"kind": "rectangle", "x0": self.x0.tolist(), "widths": self.widths.tolist()}


@dataclass(frozen=True, eq=False)
class SignedTerm:
    sign: int
    tail_set: TailSet
    model: CumulantModel | None = None


@dataclass(frozen=True, eq=False)
class SignedCombination(TailSet):
    """sum_k sign_k * P[Xbar_n in A_k], each term with its own model and saddle point.

    Not a single integrand: each term is estimated separately and combined.
    """

    terms: tuple[SignedTerm, ...] = field(default=())

    def __post_init__(self):
        if not self.terms:
            raise ValueError("signed combination needs at least one term")
        for term in self.terms:
            if term.sign not in (1, -1):
                raise ValueError("term signs must be +1 or -1")
            if isinstance(term.tail_set, SignedCombination):
                raise ValueError("nested signed combinations are not supported")

    @property
    def x0(self):
        return self.terms[0].tail_set.x0

    def c_constant(self, sp, n):
        raise TypeError("a signed combination has no single c(n); estimate each term separately")

    def rho(self, sp, n, t):
        raise TypeError("a signed combination has no single rho; estimate each term separately")

    def to_spec(self):
        out = []
        for term in self.terms:
            entry = {"sign": term.sign, "set": term.tail_set.to_spec()}
            if term.model is not None:
                entry["model"] = term.model.to_spec()
            out.append(entry)
        return {"kind": "signed", "terms": out}


def c_constant(tail_set: TailSet, sp: SaddlePoint, n: int) -> float:
    return tail_set.c_constant(sp, n)


def rho(tail_set: TailSet, sp: SaddlePoint, n: int, t) -> np.ndarray:
    return tail_set.rho(sp, n, t)


def partial_orthant_point(model: CumulantModel, thresholds: Sequence[float], d_prime: int | None = None) -> np.ndarray:
    """Complete the dominating point of x0 + Q_{d'}^+ from the first d' thresholds.

    Solves the saddle point of the leading d' coordinates with theta_i = 0
    beyond d' and returns grad Lambda at the embedded solution.
    """
    lower = np.atleast_1d(np.asarray(thresholds, dtype=float))
    k = lower.size if d_prime is None else int(d_prime)
    marginal = Marginal(model, k)
    sp = solve_saddle_point(marginal, lower[:k])
    return model.grad(marginal.embed(sp.theta))


def tail_set_from_spec(spec: Mapping[str, Any], model: CumulantModel | None = None) -> TailSet:
    """Parse the config grammar for target sets.

    kind = full_orthant | partial_orthant | affine_orthant | rectangle | signed.
    A partial orthant may give ``thresholds`` (length d') instead of a full
    ``x0``; the dominating point is then completed from ``model``.
    """
    kind = str(spec.get("kind", "")).lower()
    if kind == "full_orthant":
        return FullOrthant(spec["x0"])
    if kind == "partial_orthant":
        if "x0" in spec:
            return PartialOrthant(spec["x0"], int(spec["d_prime"]))
        if model is None:
            raise ValueError("partial_orthant with thresholds needs a model to complete x0")
        thresholds = np.atleast_1d(np.asarray(spec["thresholds"], dtype=float))
        d_prime = int(spec.get("d_prime", thresholds.size))
        return PartialOrthant(partial_orthant_point(model, thresholds, d_prime), d_prime)
    if kind == "affine_orthant":
        x0 = np.atleast_1d(np.asarray(spec["x0"], dtype=float))
        B = np.asarray(spec["B"], dtype=float)
        if B.ndim == 1:
            B = B.reshape(x0.size, x0.size)
        return AffineOrthant(x0, B)
    if kind == "rectangle":
        return Rectangle(spec["x0"], spec["widths"])
    if kind == "signed":
        terms = []
        for entry in spec["terms"]:
            term_model = model_from_spec(entry["model"]) if "model" in entry else None
            terms.append(
                SignedTerm(int(entry["sign"]), tail_set_from_spec(entry["set"], term_model or model), term_model)
            )
        return SignedCombination(tuple(terms))
    raise ValueError(f"unknown set kind {kind!r}")
