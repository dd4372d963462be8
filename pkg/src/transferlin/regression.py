"""Asymptotic generalization error of the SGD interpolator in linear regression.

SGD on the square loss started from a pretrained ``w0`` converges to the
interpolator closest to ``w0``.  With ``d / n -> kappa > 1``, a white
perturbation ``w0 - w*`` of a-priori error ``e_a`` and label noise variance
``sigma2``, the limiting error depends on the spectrum ``p`` of ``R_x`` only
through a scalar ``t`` built from the fixed point ``theta`` of

    integral 2 p(r) / (2 + theta r) dr = (kappa - 1) / kappa,
    t = integral 4 p(r) / (2 + theta r)^2 dr.

In this normalization a single-atom spectrum gives ``t = ((kappa-1)/kappa)^2``
exactly, which is the case where the lower bound is attained.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from ._roots import solve_decreasing
from .errors import DegenerateError, DomainError
from .spectral import SpectralDensity

DEGENERACY_GUARD = 1e-14


@dataclass(frozen=True, eq=False)
class RegressionEnsemble:
    kappa: float
    sigma2: float
    e_a: float
    p: SpectralDensity

    def __post_init__(self):
        if not self.kappa > 1:
            raise DomainError(f"kappa must exceed 1, got {self.kappa}")
        if self.sigma2 < 0:
            raise DomainError("sigma2 must be nonnegative")
        if self.e_a < 0:
            raise DomainError("e_a must be nonnegative")


@dataclass(frozen=True)
class RegressionPrediction:
    theta: float
    t: float
    e_p: float
    lower_bound: float


@dataclass(frozen=True)
class TransferDecision:
    helps: bool
    best_error: float
    argmin_kappa: Optional[float]


def solve_theta_regression(p: SpectralDensity, kappa: float) -> float:
    if not kappa > 1:
        raise DomainError(f"kappa must exceed 1, got {kappa}")
    r = p.nodes
    w = p.node_weights
    target = (kappa - 1.0) / kappa

    def residual(theta):
        return float(np.dot(w, 2.0 / (2.0 + theta * r))) - target

    def derivative(theta):
        return -float(np.dot(w, 2.0 * r / (2.0 + theta * r) ** 2))

    # theta * r is the natural variable; start near the single-atom root.
    mean_r = float(np.dot(w, r))
    start = 2.0 / (mean_r * (kappa - 1.0))
    return solve_decreasing(residual, derivative, start=start)


def compute_t(p: SpectralDensity, theta: float) -> float:
    if not theta > 0:
        raise DomainError("theta must be positive")
    return float(np.dot(p.node_weights, 4.0 / (2.0 + p.nodes * theta) ** 2))


def regression_lower_bound(kappa, sigma2, e_a):
    """``sigma2 / (kappa - 1) + (kappa - 1) / kappa * e_a``."""
    if not kappa > 1:
        raise DomainError(f"kappa must exceed 1, got {kappa}")
    return sigma2 / (kappa - 1.0) + (kappa - 1.0) / kappa * e_a


def predict_ep(ens: RegressionEnsemble) -> RegressionPrediction:
    """Limiting generalization error ``e_p`` of the fine-tuned interpolator."""
    kappa = ens.kappa
    theta = solve_theta_regression(ens.p, kappa)
    t = compute_t(ens.p, theta)
    denom = kappa * (1.0 - t) - 1.0
    if denom <= DEGENERACY_GUARD:
        raise DegenerateError(
            f"kappa*(1-t)-1 = {denom:.3e} is not positive", guard="kappa*(1-t)-1 > 0"
        )
    e_p = (2.0 - kappa * (1.0 - t)) / denom * ens.sigma2 + t / denom * ens.e_a
    return RegressionPrediction(
        theta=theta, t=t, e_p=e_p, lower_bound=regression_lower_bound(kappa, ens.sigma2, ens.e_a)
    )


def transfer_benefit(sigma: float, e_a: float) -> TransferDecision:
    """Whether fine-tuning can beat ``w0`` at the best overparametrization.

    The lower bound is minimized over ``kappa`` numerically (Brent on
    ``log(kappa - 1)``).  ``argmin_kappa`` is ``None`` whenever the infimum
    is not attained inside ``(1, inf)``: at ``sigma == 0`` it is approached
    as ``kappa -> 1`` and for ``e_a <= sigma**2`` as ``kappa -> inf``.
    """
    sigma = abs(float(sigma))
    e_a = float(e_a)
    if e_a < sigma * sigma:
        return TransferDecision(helps=False, best_error=e_a, argmin_kappa=None)
    best = sigma * (2.0 * math.sqrt(e_a) - sigma)
    if sigma == 0.0 or e_a == sigma * sigma:
        return TransferDecision(helps=True, best_error=best, argmin_kappa=None)

    def bound(s):
        x = math.exp(s)
        return sigma * sigma / x + x / (1.0 + x) * e_a

    # bracket the log(kappa-1) minimizer generously around the noise/error scale
    centre = math.log(sigma / math.sqrt(e_a))
    res = minimize_scalar(
        bound, bounds=(centre - 40.0, centre + 40.0), method="bounded",
        options={"xatol": 1e-12, "maxiter": 2000},
    )
    return TransferDecision(helps=True, best_error=best, argmin_kappa=1.0 + math.exp(res.x))
