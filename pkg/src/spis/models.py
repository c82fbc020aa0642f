"""Light-tailed distributions described through their cumulant generating function.

Every model works on batched arguments: ``theta`` has shape ``(..., d)`` and
scalar outputs have shape ``(...)``.  The complex continuation
``cgf_complex(theta + i*u)`` is evaluated with principal logarithms applied
factor by factor; each factor has positive real part whenever the real part of
the argument lies in the interior of the domain, so no branch tracking is
needed.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Any, Mapping, Sequence

import numpy as np

__all__ = [
    "DomainError",
    "CumulantModel",
    "Univariate",
    "Exponential",
    "Gamma",
    "Normal",
    "IidProduct",
    "LinearMap",
    "Marginal",
    "model_from_spec",
    "phi_tilted",
    "tilted_sample",
]

DEFAULT_ALPHA0 = 2.0


class DomainError(ValueError):
    """Raised when a twisting parameter lies outside the interior of the CGF domain."""


def _default_gamma(alpha0: float, decay: float) -> float:
    # smallest integer gamma with gamma * decay > alpha0 + 1
    if math.isinf(decay):
        return 1.0
    return float(max(1, math.floor((alpha0 + 1.0) / decay) + 1))


class CumulantModel(ABC):
    """A d-dimensional distribution exposed through its CGF.

    Subclasses provide the CGF, its gradient and Hessian at real arguments,
    the analytic continuation at complex arguments, and samplers for the
    original and exponentially tilted laws.
    """

    dim: int
    alpha0: float
    gamma: float

    @abstractmethod
    def cgf(self, theta) -> np.ndarray: ...

    @abstractmethod
    def cgf_complex(self, z) -> np.ndarray: ...

    @abstractmethod
    def grad(self, theta) -> np.ndarray: ...

    @abstractmethod
    def hess(self, theta) -> np.ndarray: ...

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` iid vectors from the original law, shape ``(size, d)``."""

    @abstractmethod
    def _sample_tilted(self, rng: np.random.Generator, theta: np.ndarray, size: int) -> np.ndarray: ...

    @abstractmethod
    def domain_margin(self, theta) -> np.ndarray:
        """Per-constraint slack, shape ``(..., k)``; theta is interior iff all entries are > 0."""

    @abstractmethod
    def _constraint_name(self, index: int) -> str: ...

    @abstractmethod
    def to_spec(self) -> dict: ...

    def in_domain(self, theta) -> np.ndarray:
        margin = self.domain_margin(theta)
        return np.all(margin > 0, axis=-1)

    def check_domain(self, theta) -> None:
        theta = np.asarray(theta, dtype=float)
        margin = np.atleast_2d(self.domain_margin(theta))
        bad = np.argwhere(~(margin > 0))
        if bad.size:
            idx = int(bad[0, -1])
            raise DomainError(
                f"theta outside the interior of the CGF domain: {self._constraint_name(idx)} "
                f"(slack {margin[tuple(bad[0])]:.6g})"
            )

    def mean(self) -> np.ndarray:
        return self.grad(np.zeros(self.dim))

    def sample_tilted(self, rng: np.random.Generator, theta, size: int) -> np.ndarray:
        """Draw from F_theta; ``theta`` is ``(d,)`` or one row per draw ``(size, d)``."""
        theta = np.asarray(theta, dtype=float)
        self.check_domain(theta)
        return self._sample_tilted(rng, theta, size)

    @property
    def has_pdf(self) -> bool:
        return False

    def pdf(self, x) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} does not expose a marginal density")

    def grad_inverse(self, m) -> np.ndarray:
        """Solve grad(theta) = m for 1-d models, vectorized over ``m``."""
        raise NotImplementedError(f"{type(self).__name__} has no closed-form twist for a target mean")


class Univariate(CumulantModel):
    """One-dimensional family with an upper domain bound ``theta < upper``."""

    dim = 1
    upper: float = math.inf
    decay: float = math.inf

    def __init__(self, alpha0: float | None = None, gamma: float | None = None):
        self.alpha0 = DEFAULT_ALPHA0 if alpha0 is None else float(alpha0)
        self.gamma = _default_gamma(self.alpha0, self.decay) if gamma is None else float(gamma)

    # scalar kernels on arrays of arbitrary shape
    @abstractmethod
    def k(self, t): ...

    @abstractmethod
    def k_complex(self, z): ...

    @abstractmethod
    def dk(self, t): ...

    @abstractmethod
    def d2k(self, t): ...

    @abstractmethod
    def draw(self, rng, size): ...

    @abstractmethod
    def draw_tilted(self, rng, t, size): ...

    @abstractmethod
    def dk_inverse(self, m): ...

    def cgf(self, theta):
        return self.k(np.asarray(theta, dtype=float)[..., 0])

    def cgf_complex(self, z):
        return self.k_complex(np.asarray(z, dtype=complex)[..., 0])

    def grad(self, theta):
        return self.dk(np.asarray(theta, dtype=float)[..., 0])[..., None]

    def hess(self, theta):
        return self.d2k(np.asarray(theta, dtype=float)[..., 0])[..., None, None]

    def sample(self, rng, size):
        return self.draw(rng, size)[:, None]

    def _sample_tilted(self, rng, theta, size):
        return self.draw_tilted(rng, theta[..., 0], size)[:, None]

    def domain_margin(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.upper - theta

    def _constraint_name(self, index):
        return f"theta[0] must be < {self.upper:g}"

    def grad_inverse(self, m):
        return self.dk_inverse(np.asarray(m, dtype=float))

    def _meta(self) -> dict:
        return {"alpha0": self.alpha0, "gamma": self.gamma}


class Exponential(Univariate):
    """Exponential(rate): CGF -log(1 - theta/rate) on theta < rate."""

    decay = 1.0

    def __init__(self, rate: float = 1.0, **meta):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = float(rate)
        self.upper = self.rate
        super().__init__(**meta)

    def k(self, t):
        return -np.log1p(-t / self.rate)

    def k_complex(self, z):
        return -np.log(1.0 - z / self.rate)

    def dk(self, t):
        return 1.0 / (self.rate - t)

    def d2k(self, t):
        return 1.0 / (self.rate - t) ** 2

    def dk_inverse(self, m):
        return self.rate - 1.0 / m

    def draw(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    def draw_tilted(self, rng, t, size):
        return rng.exponential(1.0 / (self.rate - t), size)

    @property
    def has_pdf(self):
        return True

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)

    def to_spec(self):
        return {"family": "exponential", "rate": self.rate, **self._meta()}


class Gamma(Univariate):
    """Gamma(shape, scale): CGF -shape*log(1 - scale*theta) on theta < 1/scale."""

    def __init__(self, shape: float = 1.0, scale: float = 1.0, **meta):
        if shape <= 0 or scale <= 0:
            raise ValueError("shape and scale must be positive")
        self.shape = float(shape)
        self.scale = float(scale)
        self.upper = 1.0 / self.scale
        self.decay = self.shape
        super().__init__(**meta)

    def k(self, t):
        return -self.shape * np.log1p(-self.scale * t)

    def k_complex(self, z):
        return -self.shape * np.log(1.0 - self.scale * z)

    def dk(self, t):
        return self.shape * self.scale / (1.0 - self.scale * t)

    def d2k(self, t):
        return self.shape * self.scale**2 / (1.0 - self.scale * t) ** 2

    def dk_inverse(self, m):
        return (1.0 - self.shape * self.scale / m) / self.scale

    def draw(self, rng, size):
        return rng.gamma(self.shape, self.scale, size)

    def draw_tilted(self, rng, t, size):
        return rng.gamma(self.shape, self.scale / (1.0 - self.scale * t), size)

    @property
    def has_pdf(self):
        return True

    def pdf(self, x):
        from scipy import stats

        return stats.gamma.pdf(x, self.shape, scale=self.scale)

    def to_spec(self):
        return {"family": "gamma", "shape": self.shape, "scale": self.scale, **self._meta()}


class Normal(Univariate):
    """Normal(mean, variance); the CGF is entire."""

    decay = math.inf

    def __init__(self, mean: float = 0.0, variance: float = 1.0, **meta):
        if variance <= 0:
            raise ValueError("variance must be positive")
        self.mu = float(mean)
        self.var = float(variance)
        super().__init__(**meta)

    def k(self, t):
        return self.mu * t + 0.5 * self.var * t * t

    def k_complex(self, z):
        return self.mu * z + 0.5 * self.var * z * z

    def dk(self, t):
        return self.mu + self.var * t

    def d2k(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.var)

    def dk_inverse(self, m):
        return (m - self.mu) / self.var

    def draw(self, rng, size):
        return rng.normal(self.mu, math.sqrt(self.var), size)

    def draw_tilted(self, rng, t, size):
        return rng.normal(self.mu + self.var * t, math.sqrt(self.var), size)

    def domain_margin(self, theta):
        return np.full(np.shape(theta), np.inf)

    @property
    def has_pdf(self):
        return True

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-0.5 * (x - self.mu) ** 2 / self.var) / math.sqrt(2 * math.pi * self.var)

    def to_spec(self):
        return {"family": "normal", "mean": self.mu, "variance": self.var, **self._meta()}


class IidProduct(CumulantModel):
    """Vector of independent one-dimensional components."""

    def __init__(self, components: Sequence[Univariate], alpha0: float | None = None, gamma: float | None = None):
        if not components:
            raise ValueError("IidProduct needs at least one component")
        self.components = list(components)
        self.dim = len(self.components)
        self.alpha0 = float(self.dim + 1) if alpha0 is None else float(alpha0)
        self.gamma = (
            max(_default_gamma(self.alpha0, c.decay) for c in self.components) if gamma is None else float(gamma)
        )

    def cgf(self, theta):
        theta = np.asarray(theta, dtype=float)
        return sum(c.k(theta[..., i]) for i, c in enumerate(self.components))

    def cgf_complex(self, z):
        z = np.asarray(z, dtype=complex)
        return sum(c.k_complex(z[..., i]) for i, c in enumerate(self.components))

    def grad(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([c.dk(theta[..., i]) for i, c in enumerate(self.components)], axis=-1)

    def hess(self, theta):
        theta = np.asarray(theta, dtype=float)
        diag = np.stack([c.d2k(theta[..., i]) for i, c in enumerate(self.components)], axis=-1)
        out = np.zeros(diag.shape + (self.dim,))
        idx = np.arange(self.dim)
        out[..., idx, idx] = diag
        return out

    def sample(self, rng, size):
        return np.column_stack([c.draw(rng, size) for c in self.components])

    def _sample_tilted(self, rng, theta, size):
        return np.column_stack([c.draw_tilted(rng, theta[..., i], size) for i, c in enumerate(self.components)])

    def domain_margin(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([c.upper - theta[..., i] for i, c in enumerate(self.components)], axis=-1)

    def _constraint_name(self, index):
        return f"theta[{index}] must be < {self.components[index].upper:g}"

    def to_spec(self):
        return {
            "family": "iid",
            "components": [c.to_spec() for c in self.components],
            "alpha0": self.alpha0,
            "gamma": self.gamma,
        }


class LinearMap(CumulantModel):
    """X = B E for a base model E and a nonsingular square matrix B.

    The CGF is Lambda_E(B^T theta); gradient B grad_E, Hessian B H_E B^T.
    """

    def __init__(self, base: CumulantModel, matrix, alpha0: float | None = None, gamma: float | None = None):
        B = np.asarray(matrix, dtype=float)
        if B.ndim != 2 or B.shape != (base.dim, base.dim):
            raise ValueError(f"matrix must be {base.dim}x{base.dim}, got shape {B.shape}")
        if abs(np.linalg.det(B)) < 1e-14:
            raise ValueError("matrix must be nonsingular")
        self.base = base
        self.matrix = B
        self.dim = base.dim
        self.alpha0 = base.alpha0 if alpha0 is None else float(alpha0)
        self.gamma = base.gamma if gamma is None else float(gamma)

    def _pull(self, theta):
        # B^T theta for row-vector batches
        return np.asarray(theta) @ self.matrix

    def cgf(self, theta):
        return self.base.cgf(self._pull(np.asarray(theta, dtype=float)))

    def cgf_complex(self, z):
        return self.base.cgf_complex(self._pull(np.asarray(z, dtype=complex)))

    def grad(self, theta):
        return self.base.grad(self._pull(np.asarray(theta, dtype=float))) @ self.matrix.T

    def hess(self, theta):
        inner = self.base.hess(self._pull(np.asarray(theta, dtype=float)))
        return self.matrix @ inner @ self.matrix.T

    def sample(self, rng, size):
        return self.base.sample(rng, size) @ self.matrix.T

    def _sample_tilted(self, rng, theta, size):
        return self.base._sample_tilted(rng, self._pull(theta), size) @ self.matrix.T

    def domain_margin(self, theta):
        return self.base.domain_margin(self._pull(np.asarray(theta, dtype=float)))

    def _constraint_name(self, index):
        return f"(B^T theta): {self.base._constraint_name(index)}"

    def to_spec(self):
        return {
            "family": "linear_map",
            "base": self.base.to_spec(),
            "matrix": self.matrix.tolist(),
            "alpha0": self.alpha0,
            "gamma": self.gamma,
        }


class Marginal(CumulantModel):
    """The first ``k`` coordinates of a model; CGF Lambda((theta, 0))."""

    def __init__(self, base: CumulantModel, k: int):
        if not 1 <= k <= base.dim:
            raise ValueError(f"marginal size must be in [1, {base.dim}]")
        self.base = base
        self.dim = int(k)
        self.alpha0 = base.alpha0
        self.gamma = base.gamma

    def embed(self, theta):
        theta = np.asarray(theta)
        pad = np.zeros(theta.shape[:-1] + (self.base.dim - self.dim,), dtype=theta.dtype)
        return np.concatenate([theta, pad], axis=-1)

    def cgf(self, theta):
        return self.base.cgf(self.embed(np.asarray(theta, dtype=float)))

    def cgf_complex(self, z):
        return self.base.cgf_complex(self.embed(np.asarray(z, dtype=complex)))

    def grad(self, theta):
        return self.base.grad(self.embed(np.asarray(theta, dtype=float)))[..., : self.dim]

    def hess(self, theta):
        return self.base.hess(self.embed(np.asarray(theta, dtype=float)))[..., : self.dim, : self.dim]

    def sample(self, rng, size):
        return self.base.sample(rng, size)[:, : self.dim]

    def _sample_tilted(self, rng, theta, size):
        return self.base._sample_tilted(rng, self.embed(theta), size)[:, : self.dim]

    def domain_margin(self, theta):
        return self.base.domain_margin(self.embed(np.asarray(theta, dtype=float)))

    def _constraint_name(self, index):
        return self.base._constraint_name(index)

    def to_spec(self):
        return {"family": "marginal", "base": self.base.to_spec(), "k": self.dim}


_UNIVARIATE = {
    "exponential": (Exponential, ("rate",)),
    "gamma": (Gamma, ("shape", "scale")),
    "normal": (Normal, ("mean", "variance")),
}


def model_from_spec(spec: Mapping[str, Any]) -> CumulantModel:
    """Build a model from a config mapping.

    Grammar: ``family`` is one of exponential(rate), gamma(shape, scale),
    normal(mean, variance), iid(components | component + count) or
    linear_map(base, matrix).  ``matrix`` is nested rows or a flat row-major
    list.  ``alpha0`` and ``gamma`` optionally override the declared
    integrability constants.
    """
    spec = dict(spec)
    family = str(spec.pop("family", "")).lower()
    meta = {k: spec.pop(k) for k in ("alpha0", "gamma") if k in spec}
    if family in _UNIVARIATE:
        cls, allowed = _UNIVARIATE[family]
        unknown = set(spec) - set(allowed)
        if unknown:
            raise ValueError(f"unknown parameters for {family}: {sorted(unknown)}")
        return cls(**spec, **meta)
    if family == "iid":
        if "components" in spec:
            comps = [model_from_spec(c) for c in spec["components"]]
        elif "component" in spec:
            comps = [model_from_spec(spec["component"]) for _ in range(int(spec.get("count", 1)))]
        else:
            raise ValueError("iid model needs 'components' or 'component'")
        if not all(isinstance(c, Univariate) for c in comps):
            raise ValueError("iid components must be one-dimensional families")
        return IidProduct(comps, **meta)
    if family == "linear_map":
        if "base" not in spec or "matrix" not in spec:
            raise ValueError("linear_map needs 'base' and 'matrix'")
        base = model_from_spec(spec["base"])
        B = np.asarray(spec["matrix"], dtype=float)
        if B.ndim == 1:
            if B.size != base.dim * base.dim:
                raise ValueError(f"flat matrix must have {base.dim * base.dim} entries")
            B = B.reshape(base.dim, base.dim)
        return LinearMap(base, B, **meta)
    if family == "marginal":
        return Marginal(model_from_spec(spec["base"]), int(spec["k"]))
    raise ValueError(f"unknown model family {family!r}")


def tilted_sample(model: CumulantModel, theta, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """One draw (or ``size`` draws) from the exponentially tilted law F_theta."""
    out = model.sample_tilted(rng, np.asarray(theta, dtype=float), 1 if size is None else size)
    return out[0] if size is None else out


def phi_tilted(model: CumulantModel, theta, u, x0) -> np.ndarray:
    """Characteristic function of X - x0 under F_theta, evaluated at ``u`` (batched)."""
    theta = np.asarray(theta, dtype=float)
    model.check_domain(theta)
    u = np.asarray(u, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    expo = model.cgf_complex(theta + 1j * u) - model.cgf(theta) - 1j * (u @ x0)
    return np.exp(expo)
