"""Saddle-point importance sampling for densities and tail probabilities of sample means."""

from .baselines import bgl_tail_1d, cmc_density, naive_mc, oet_tail
from .estimators import EstimateReport, aggregate, estimate_density, estimate_overshoot, estimate_tail
from .is_core import ISDensityParams, PsiContext, choose_parameters, is_pdf, is_sample, psi
from .models import (
    CumulantModel,
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
from .saddlepoint import (
    SaddlePoint,
    exact_asymptotic_density,
    exact_asymptotic_overshoot,
    exact_asymptotic_tail,
    solve_saddle_point,
)
from .tail_sets import (
    AffineOrthant,
    FullOrthant,
    PartialOrthant,
    Rectangle,
    SignedCombination,
    SignedTerm,
    c_constant,
    rho,
    tail_set_from_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AffineOrthant",
    "CumulantModel",
    "DomainError",
    "EstimateReport",
    "Exponential",
    "FullOrthant",
    "Gamma",
    "ISDensityParams",
    "IidProduct",
    "LinearMap",
    "Marginal",
    "Normal",
    "PartialOrthant",
    "PsiContext",
    "Rectangle",
    "SaddlePoint",
    "SignedCombination",
    "SignedTerm",
    "aggregate",
    "bgl_tail_1d",
    "c_constant",
    "choose_parameters",
    "cmc_density",
    "estimate_density",
    "estimate_overshoot",
    "estimate_tail",
    "exact_asymptotic_density",
    "exact_asymptotic_overshoot",
    "exact_asymptotic_tail",
    "is_pdf",
    "is_sample",
    "model_from_spec",
    "naive_mc",
    "oet_tail",
    "phi_tilted",
    "psi",
    "rho",
    "solve_saddle_point",
    "tail_set_from_spec",
    "tilted_sample",
]
