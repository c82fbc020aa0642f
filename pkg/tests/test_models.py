import math
import re

import numpy as np
import pytest
from scipy import integrate, stats

from spis import (
    DomainError,
    Exponential,
    Gamma,
    IidProduct,
    LinearMap,
    Marginal,
    Normal,
    model_from_spec,
    phi_tilted,
    tilted_sample,
)

from .conftest import TRIVARIATE_B, correlated_normal, trivariate_model

CASES = [
    (Exponential(1.0), [0.3]),
    (Exponential(2.5), [-1.0]),
    (Gamma(2.0, 0.5), [1.2]),
    (Normal(0.3, 2.0), [0.7]),
    (IidProduct([Exponential(1.0), Gamma(3.0, 1.0)]), [0.2, -0.4]),
    (trivariate_model(), [0.2, 0.4, 0.1]),
    (correlated_normal(), [0.5, -0.2]),
    (Marginal(trivariate_model(), 2), [0.3, 0.1]),
]


def _fd_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.size)
    for i in range(x.size):
        e = np.zeros(x.size)
        e[i] = h
        out[i] = (f(x + e) - f(x - e)) / (2 * h)
    return out


@pytest.mark.parametrize("model, theta", CASES)
def test_gradient_and_hessian_by_finite_differences(model, theta):
    theta = np.array(theta)
    np.testing.assert_allclose(model.grad(theta), _fd_grad(model.cgf, theta), rtol=1e-6, atol=1e-8)
    fd_h = np.array([_fd_grad(lambda t: model.grad(t)[i], theta) for i in range(model.dim)])
    np.testing.assert_allclose(model.hess(theta), fd_h, rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("model, theta", CASES)
def test_complex_continuation(model, theta):
    theta = np.array(theta)
    u = np.linspace(-3, 3, 7)[:, None] * np.linspace(0.5, 1.0, model.dim)
    z = theta + 1j * u
    assert model.cgf_complex(theta) == pytest.approx(model.cgf(theta), abs=1e-14)
    np.testing.assert_allclose(model.cgf_complex(np.conj(z)), np.conj(model.cgf_complex(z)), atol=1e-13)


@pytest.mark.parametrize("model, theta", CASES)
def test_batched_shapes(model, theta):
    th = np.tile(theta, (5, 1))
    assert model.cgf(th).shape == (5,)
    assert model.grad(th).shape == (5, model.dim)
    assert model.hess(th).shape == (5, model.dim, model.dim)


@pytest.mark.parametrize("model, theta", CASES)
def test_tilted_sample_mean_is_gradient(model, theta, rng):
    x = tilted_sample(model, theta, rng, size=200_000)
    se = x.std(axis=0) / math.sqrt(x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - model.grad(np.array(theta))) < 5 * se)


@pytest.mark.parametrize("model, theta", CASES[:5])
def test_phi_tilted_matches_empirical_cf(model, theta, rng):
    x0 = model.grad(np.array(theta))
    x = tilted_sample(model, theta, rng, size=200_000)
    u = np.full(model.dim, 0.7)
    emp = np.mean(np.exp(1j * (x - x0) @ u))
    assert abs(phi_tilted(model, theta, u, x0) - emp) < 0.01
    assert phi_tilted(model, theta, np.zeros(model.dim), x0) == pytest.approx(1.0)


def test_exponential_closed_forms():
    m = Exponential(1.0)
    t = np.array([0.4])
    assert m.cgf(t) == pytest.approx(-math.log(0.6))
    assert m.grad(t)[0] == pytest.approx(1 / 0.6)
    assert m.hess(t)[0, 0] == pytest.approx(1 / 0.36)
    u = 1.3
    expected = 0.6 / (0.6 - 1j * u)
    assert phi_tilted(m, t, np.array([u]), np.array([0.0])) == pytest.approx(expected)


def test_linear_map_identities(rng):
    base = IidProduct([Exponential(1.0)] * 3)
    m = LinearMap(base, TRIVARIATE_B)
    theta = np.array([0.1, 0.2, 0.3])
    assert m.cgf(theta) == pytest.approx(base.cgf(TRIVARIATE_B.T @ theta))
    np.testing.assert_allclose(m.grad(theta), TRIVARIATE_B @ base.grad(TRIVARIATE_B.T @ theta))
    np.testing.assert_allclose(m.hess(theta), TRIVARIATE_B @ base.hess(TRIVARIATE_B.T @ theta) @ TRIVARIATE_B.T)
    np.testing.assert_allclose(m.mean(), [1.0, 1.0, 1.0])


def test_marginal_embeds_zeros():
    m = trivariate_model()
    mg = Marginal(m, 2)
    theta = np.array([0.2, 0.1])
    assert mg.cgf(theta) == pytest.approx(m.cgf(np.array([0.2, 0.1, 0.0])))
    np.testing.assert_allclose(mg.hess(theta), m.hess(np.array([0.2, 0.1, 0.0]))[:2, :2])


@pytest.mark.parametrize(
    "model, theta, fragment",
    [
        (Exponential(1.0), [1.0], "theta[0] must be < 1"),
        (IidProduct([Exponential(1.0), Exponential(2.0)]), [0.1, 2.5], "theta[1]"),
        (trivariate_model(), [2.5, 0.0, 0.0], "(B^T theta): theta[0]"),
    ],
)
def test_domain_errors_name_the_constraint(model, theta, fragment):
    assert not model.in_domain(np.array(theta))
    with pytest.raises(DomainError, match=re.escape(fragment)):
        model.check_domain(np.array(theta))


def test_normal_has_no_domain_bound():
    m = Normal()
    assert m.in_domain(np.array([1e6]))


@pytest.mark.parametrize("model", [c[0] for c in CASES[:7]])
def test_spec_round_trip(model):
    again = model_from_spec(model.to_spec())
    theta = np.full(model.dim, 0.05)
    assert again.cgf(theta) == pytest.approx(model.cgf(theta))
    assert again.gamma == model.gamma


def test_spec_grammar():
    m = model_from_spec(
        {
            "family": "linear_map",
            "matrix": TRIVARIATE_B.ravel().tolist(),
            "base": {"family": "iid", "count": 3, "component": {"family": "exponential"}},
        }
    )
    np.testing.assert_allclose(m.matrix, TRIVARIATE_B)
    with pytest.raises(ValueError, match="unknown model family"):
        model_from_spec({"family": "cauchy"})
    with pytest.raises(ValueError, match="unknown parameters"):
        model_from_spec({"family": "exponential", "scale": 2})
    with pytest.raises(ValueError):
        model_from_spec({"family": "exponential", "rate": -1})


def test_integrability_defaults():
    # smallest integer gamma with gamma * k > alpha0 + 1 for |phi| ~ |u|^{-k}
    assert Exponential().gamma == 4
    assert Gamma(2.0, 1.0).gamma == 2
    assert Gamma(0.5, 1.0).gamma == 7
    assert Normal().gamma == 1
    assert Exponential(alpha0=1.5, gamma=3).gamma == 3


@pytest.mark.parametrize("model", [Exponential(2.0), Gamma(2.5, 0.7)])
def test_pdf_integrates_to_one(model):
    total, _ = integrate.quad(lambda x: float(model.pdf(x)), 0, np.inf)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_gamma_pdf_matches_scipy():
    m = Gamma(2.5, 0.7)
    x = np.linspace(0.1, 5, 9)
    np.testing.assert_allclose(m.pdf(x), stats.gamma(2.5, scale=0.7).pdf(x))
