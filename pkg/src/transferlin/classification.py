"""Asymptotic classification error of the fine-tuned interpolator.

Two Gaussian-equivalent classes with means ``mu1, mu2`` (cross-correlation
``r``) and simultaneously diagonal covariances ``Sigma1, Sigma2``.  The
pretrained direction ``w0 = t_star * w_opt + t_eta * eta`` is rescaled by the
least-squares factor ``alpha`` and then fine-tuned by SGD to the nearest
interpolator.  The limiting error is ``Q((1 - gamma/2) / sqrt(tau2 - gamma^2/4))``
where ``gamma`` and ``tau2`` are deterministic functionals of the joint
spectrum.

All traces enter through spectral integrals, i.e. normalized traces
``Tr(.) / d``; the atoms of :class:`JointSpectralDensity` are eigenvalues of
``Sigma1, Sigma2`` themselves (``sigma2 / d`` in the scalar model).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._roots import solve_decreasing
from .errors import DegenerateError, DomainError
from .spectral import JointSpectralDensity, q_tail, q_tail_inverse

REGIME_HIGH = 100.0
REGIME_LOW = 0.01


@dataclass(frozen=True, eq=False)
class ClassificationEnsemble:
    n: int
    d: int
    r: float
    t_star: float
    t_eta: float
    spectra: JointSpectralDensity
    t_eta2: Optional[float] = None

    def __post_init__(self):
        if not self.d > self.n > 0:
            raise DomainError(f"need d > n > 0, got n={self.n}, d={self.d}")
        if not 0.0 <= self.r < 1.0:
            raise DomainError(f"r must lie in [0, 1), got {self.r}")
        if self.t_eta < 0:
            raise DomainError("t_eta must be nonnegative")
        if self.t_star == 0:
            raise DomainError("t_star must be nonzero")
        if self.t_eta2 is None:
            object.__setattr__(self, "t_eta2", float(self.t_eta) ** 2)

    @property
    def physical(self):
        """False for analytically continued ensembles (``t_eta2 < 0``)."""
        return self.t_eta2 >= 0

    @classmethod
    def scalar(cls, n, d, r, sigma2, t_star=1.0, t_eta=0.0):
        return cls(n, d, r, t_star, t_eta, JointSpectralDensity.scalar(sigma2, d))

    @classmethod
    def from_rho(cls, kappa, rho, e_a, d=1000, r=0.9, continue_below_floor=False):
        """Scalar-covariance ensemble with ``rho = n (1 - r) / sigma2`` and
        initialization error ``e_a``.

        ``n = d / kappa`` need not be an integer; it only enters the formulas
        as a real parameter.  Targets below the oracle error need a negative
        ``t_eta2``; they are rejected unless ``continue_below_floor`` is set,
        in which case the (unphysical) analytic continuation is returned so
        that algebraic identities can be checked on any ``e_a`` in (0, 1/2).
        """
        n = d / kappa
        sigma2 = n * (1.0 - r) / rho
        spectra = JointSpectralDensity.scalar(sigma2, d)
        ratio2 = noise_ratio2_for_error(e_a, spectra, r)
        if ratio2 < 0 and not continue_below_floor:
            raise DomainError(
                f"target e_a = {e_a} is below the oracle error {oracle_class_error(spectra, r):.6g}"
            )
        t_eta = math.sqrt(max(ratio2, 0.0))
        return cls(n, d, r, 1.0, t_eta, spectra, t_eta2=ratio2)


@dataclass(frozen=True)
class ClassificationPrediction:
    theta: float
    alpha: float
    gamma: float
    tau2: float
    error: float


def _real_nd(ens):
    return float(ens.n), float(ens.d)


def solve_theta_classification(ens: ClassificationEnsemble) -> float:
    """Fixed point ``theta`` of ``E[2sqrt2 / (2sqrt2 + theta sqrt(n) (s1+s2))] = (d-n)/d``."""
    n, d = _real_nd(ens)
    S = ens.spectra.total
    w = ens.spectra.weights
    c = math.sqrt(n) / (2.0 * math.sqrt(2.0))
    target = (d - n) / d

    def residual(theta):
        return float(np.dot(w, 1.0 / (1.0 + c * theta * S))) - target

    def derivative(theta):
        return -float(np.dot(w, c * S / (1.0 + c * theta * S) ** 2))

    start = n / ((d - n) * c * float(np.dot(w, S)))
    return solve_decreasing(residual, derivative, start=start)


def _phi(ens, s1, s2):
    """Eigenvalue profile of ``R0 = E[w0 w0^T]`` (unnormalized, order 1/d)."""
    S = s1 + s2
    return (ens.t_eta2 * (1.0 - ens.r) + 2.0 * ens.t_star ** 2 * (1.0 - ens.r) / S ** 2) / ens.d


def compute_alpha(ens: ClassificationEnsemble, theta: Optional[float] = None) -> float:
    """Deterministic limit of ``alpha = y^T X w0 / ||X w0||^2``.

    ``y^T X w0 -> n t_star (1-r) m`` and
    ``||X w0||^2 -> (n/2) Tr(R0 (Sigma1+Sigma2)) + n (t_star (1-r) m)^2`` with
    ``m = Tr((Sigma1+Sigma2)^-1) / d``.  ``theta`` is accepted for a uniform
    call signature; the limit does not depend on it.
    """
    sp = ens.spectra
    w = sp.weights
    S = sp.total
    one_r = 1.0 - ens.r
    m = float(np.dot(w, 1.0 / S))
    signal = ens.t_star * one_r * m
    tr_r0_a = ens.d * float(np.dot(w, _phi(ens, sp.s1, sp.s2) * S))
    denom = 0.5 * tr_r0_a + signal ** 2
    if denom <= 1e-300:
        raise DegenerateError("||X w0||^2 limit vanishes", guard="||X w0||^2 > 0")
    return signal / denom


def _gamma_prefactor(n, d, r, theta):
    return 0.5 + math.sqrt(2.0 * n) * theta * (1.0 - r) * (d - n) / (8.0 * d)


def compute_gamma(ens: ClassificationEnsemble, theta: float, alpha: float) -> float:
    n, d = _real_nd(ens)
    sp = ens.spectra
    S = sp.total
    u = 0.5 * theta * math.sqrt(n / 2.0) * S
    overlap = float(np.dot(sp.weights, ens.t_star * (1.0 - ens.r) / S / (1.0 + u)))
    return (1.0 - alpha * overlap) / _gamma_prefactor(n, d, ens.r, theta)


def compute_tau2(ens: ClassificationEnsemble, theta: float, alpha: float, gamma: float) -> float:
    """Second-moment functional ``tau2`` (the six-term expression after the
    leading denominator).  Raises :class:`DegenerateError` when the leading
    denominator is not positive."""
    n, d = _real_nd(ens)
    sp = ens.spectra
    w = sp.weights
    S = sp.total
    one_r = 1.0 - ens.r
    sq = math.sqrt(n / 2.0)
    u = 0.5 * theta * sq * S
    inv1 = 1.0 / (1.0 + u)
    inv2 = inv1 * inv1
    phi = _phi(ens, sp.s1, sp.s2)

    lead = sq - d * theta ** 2 / 8.0 * sq * float(np.dot(w, S ** 2 * inv2))
    if not lead > 0:
        raise DegenerateError(
            f"leading tau2 denominator {lead:.3e} is not positive", guard="tau2 denominator > 0"
        )
    ast = alpha * ens.t_star * one_r
    bracket = (
        sq * (gamma - gamma ** 2 / 4.0)
        + d * alpha ** 2 / 2.0 * sq * float(np.dot(w, phi * S * inv2))
        - n * theta * gamma ** 2 * one_r / 8.0 * float(np.dot(w, inv1))
        + n * theta ** 2 * gamma ** 2 * one_r / 32.0 * sq * float(np.dot(w, S * inv2))
        - ast * gamma * sq * float(np.dot(w, inv1 / S))
        + ast * theta * gamma * n / 4.0 * float(np.dot(w, inv2))
    )
    return bracket / lead


def error_from_gamma_tau(gamma, tau2):
    """``Q((2 - gamma) / (2 sqrt(tau2 - gamma^2/4)))``, same as
    ``Q((1 - gamma/2) / sqrt(tau2 - (gamma/2)^2))``."""
    spread = tau2 - gamma * gamma / 4.0
    if not spread > 0:
        raise DegenerateError(
            f"tau2 - gamma^2/4 = {spread:.3e} is not positive", guard="tau2 - gamma^2/4 > 0"
        )
    return q_tail((2.0 - gamma) / (2.0 * math.sqrt(spread)))


def predict_class_error(ens: ClassificationEnsemble) -> ClassificationPrediction:
    theta = solve_theta_classification(ens)
    alpha = compute_alpha(ens, theta)
    gamma = compute_gamma(ens, theta, alpha)
    tau2 = compute_tau2(ens, theta, alpha, gamma)
    return ClassificationPrediction(theta, alpha, gamma, tau2, error_from_gamma_tau(gamma, tau2))


def predict_class_error_scalar(kappa, rho, e_a, n=None, d=None, r=None):
    """Closed form for ``Sigma1 = Sigma2 = sigma2 I / d``.

    With ``q = Qinv(e_a)``, ``a = 1/2 + rho/4``::

        gamma = (1/kappa + (kappa-1)/kappa / (q^2 + 1)) / a
        tau2  = kappa/(kappa-1) * [ -(rho/4 + 1/(2 kappa)) (1 + rho/4) gamma^2
                                    + (1/kappa + (1+kappa)/kappa * a) gamma - 1/kappa ]

    ``theta`` and ``alpha`` additionally need ``n``, ``d`` and ``r``; without
    them those two fields are ``nan``.
    """
    if not kappa > 1:
        raise DomainError(f"kappa must exceed 1, got {kappa}")
    if not rho > 0:
        raise DomainError("rho must be positive")
    if not 0.0 < e_a < 0.5:
        raise DomainError(f"e_a must lie in (0, 0.5), got {e_a}")
    q = q_tail_inverse(e_a)
    a = 0.5 + rho / 4.0
    gamma = (1.0 / kappa + (kappa - 1.0) / kappa / (q * q + 1.0)) / a
    tau2 = kappa / (kappa - 1.0) * (
        -(rho / 4.0 + 1.0 / (2.0 * kappa)) * (1.0 + rho / 4.0) * gamma ** 2
        + (1.0 / kappa + (1.0 + kappa) / kappa * a) * gamma
        - 1.0 / kappa
    )
    theta = alpha = math.nan
    if n is not None and d is not None and r is not None:
        sigma2 = n * (1.0 - r) / rho
        theta = d * math.sqrt(2.0 * n) / ((d - n) * sigma2)
        big_gamma = q * q / (q * q + 1.0)
        # Gamma = alpha * t_star (1-r) d / (2 sigma2), t_star = 1
        alpha = big_gamma * 2.0 * sigma2 / ((1.0 - r) * d)
    return ClassificationPrediction(theta, alpha, gamma, tau2, error_from_gamma_tau(gamma, tau2))


def gamma_identity(e_a):
    """``Gamma = Qinv(e_a)^2 / (Qinv(e_a)^2 + 1)`` in the scalar model."""
    q = q_tail_inverse(e_a)
    return q * q / (q * q + 1.0)


# Oracle and initialization errors ------------------------------------------

def _class_terms(spectra, r, ratio2):
    w = spectra.weights
    S = spectra.total
    num = math.sqrt(1.0 - r) * float(np.dot(w, 1.0 / S))
    out = []
    for s in (spectra.s1, spectra.s2):
        den = 2.0 * float(np.dot(w, s / S ** 2)) + ratio2 * float(np.dot(w, s))
        out.append(q_tail(num / math.sqrt(den)))
    return out


def oracle_class_error(spectra: JointSpectralDensity, r: float) -> float:
    """Error of ``w_opt = (Sigma1 + Sigma2)^-1 (mu1 - mu2)``, the best linear rule."""
    e1, e2 = _class_terms(spectra, r, 0.0)
    return 0.5 * e1 + 0.5 * e2


def w0_class_error(ens: ClassificationEnsemble) -> float:
    """Limiting classification error of the initialization ``w0``."""
    ratio2 = ens.t_eta2 / ens.t_star ** 2
    e1, e2 = _class_terms(ens.spectra, ens.r, ratio2)
    return 0.5 * e1 + 0.5 * e2


def invert_w0_error(e_a, spectra, r, t_star=1.0):
    """``t_eta >= 0`` for which the initialization error equals ``e_a``.

    The error is strictly increasing in ``t_eta / t_star``, so a bracketed
    solve on the ratio suffices.  Targets below the ``t_eta = 0`` (oracle)
    error or at/above 1/2 are unreachable.
    """
    floor = oracle_class_error(spectra, r)
    if not floor <= e_a < 0.5:
        raise DomainError(
            f"target e_a = {e_a} unreachable: must lie in [{floor:.6g}, 0.5)"
        )
    if e_a == floor:
        return 0.0

    def residual(ratio):
        e1, e2 = _class_terms(spectra, r, ratio * ratio)
        return e_a - (0.5 * e1 + 0.5 * e2)

    def derivative(ratio, h=1e-7):
        step = h * max(ratio, 1e-300)
        return (residual(ratio + step) - residual(ratio - step)) / (2 * step)

    # natural scale of the ratio: ||w_opt|| / ||eta|| in the population limit
    ratio = solve_decreasing(residual, derivative, start=w_opt_norm_ratio(spectra), ftol=1e-11)
    return abs(t_star) * ratio


def noise_ratio2_for_error(e_a, spectra, r):
    """Closed-form ``(t_eta / t_star)^2`` giving initialization error ``e_a``.

    Valid when both class terms coincide (exchangeable spectra); negative
    when ``e_a`` is below the oracle error.
    """
    if not spectra.exchangeable:
        raise DomainError("closed-form inversion needs exchangeable spectra")
    if not 0.0 < e_a < 0.5:
        raise DomainError(f"e_a must lie in (0, 0.5), got {e_a}")
    w = spectra.weights
    S = spectra.total
    num2 = (1.0 - r) * float(np.dot(w, 1.0 / S)) ** 2
    q = q_tail_inverse(e_a)
    return (num2 / (q * q) - 2.0 * float(np.dot(w, spectra.s1 / S ** 2))) / float(np.dot(w, spectra.s1))


def w_opt_norm_ratio(spectra):
    """``||w_opt|| / ||eta||`` in the population limit, ``sqrt(2 E[(s1+s2)^-2])``."""
    return math.sqrt(2.0 * float(np.dot(spectra.weights, 1.0 / spectra.total ** 2)))


def t_eta_from_noise_ratio(c, spectra, t_star=1.0):
    """``t_eta`` making ``||t_eta eta|| = c ||t_star w_opt||``."""
    return abs(t_star) * c * w_opt_norm_ratio(spectra)


def regime(rho, high=REGIME_HIGH, low=REGIME_LOW):
    """Advisory label for the signal-to-noise ratio ``rho``."""
    if rho >= high:
        return "no_transfer_needed"
    if rho <= low:
        return "learning_impossible"
    return "transfer_regime"
