"""Seeded problem instances for the Monte Carlo trials.

Designs are ``X = X' R^{1/2}`` (regression) or class means plus
``Sigma_k^{1/2} g`` (classification), where the entries of ``X'`` and ``g``
are i.i.d. from one of three unit-variance laws.  Everything that is not the
design (noise, pretraining perturbations, means) is Gaussian so the entry law
is the only thing that changes between universality runs.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import DegenerateError, DomainError
from .spectral import JointSpectralDensity, SpectralDensity

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


class EntryDistribution(enum.Enum):
    GAUSSIAN = "gauss"
    BERNOULLI = "ber"
    CHI2 = "chi"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower()
        aliases = {
            "gauss": cls.GAUSSIAN, "gaussian": cls.GAUSSIAN, "normal": cls.GAUSSIAN,
            "ber": cls.BERNOULLI, "bernoulli": cls.BERNOULLI,
            "chi": cls.CHI2, "chi2": cls.CHI2, "chisquare": cls.CHI2,
        }
        if key not in aliases:
            raise DomainError(f"unknown entry distribution '{text}'")
        return aliases[key]

    @property
    def column_tag(self):
        """Suffix used in data file column names (``genGauss``, ``epBer`` ...)."""
        return {"gauss": "Gauss", "ber": "Ber", "chi": "Chi"}[self.value]

    @property
    def fourth_moment(self):
        # chi: E[(z^2-1)^4]/4 = (105 - 60 + 18 - 4 + 1)/4
        return {"gauss": 3.0, "ber": 1.0, "chi": 15.0}[self.value]

    def sample(self, rng, size):
        if self is EntryDistribution.GAUSSIAN:
            return rng.standard_normal(size)
        if self is EntryDistribution.BERNOULLI:
            return 2.0 * rng.integers(0, 2, size=size).astype(float) - 1.0
        z = rng.standard_normal(size)
        return (z * z - 1.0) / math.sqrt(2.0)


def _splitmix64(x):
    x = (x + GOLDEN64) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def _tag_hash(tag):
    return int.from_bytes(hashlib.blake2b(tag.encode("utf-8"), digest_size=8).digest(), "little")


def derive_trial_seed(master_seed, trial_index, stream_tag=""):
    """Stateless 64-bit seed for one trial stream.

    The same ``(master_seed, trial_index, stream_tag)`` always gives the same
    seed on every platform.
    """
    if trial_index < 0:
        raise DomainError("trial_index must be nonnegative")
    x = _splitmix64(int(master_seed) & MASK64)
    x = _splitmix64(x ^ (int(trial_index) & MASK64))
    return _splitmix64(x ^ _tag_hash(stream_tag))


def _check_dims(n, d):
    if not (isinstance(n, (int, np.integer)) and isinstance(d, (int, np.integer))):
        raise DomainError("n and d must be integers")
    if n < 1 or d <= n:
        raise DomainError(f"need 1 <= n < d, got n={n}, d={d}")


@dataclass(frozen=True, eq=False)
class RegressionInstanceSpec:
    n: int
    d: int
    p: SpectralDensity
    sigma2: float
    e_a: float
    entry: EntryDistribution = EntryDistribution.GAUSSIAN
    seed: int = 0
    noise: str = "gauss"

    def __post_init__(self):
        _check_dims(self.n, self.d)
        if self.e_a < 0 or self.sigma2 < 0:
            raise DomainError("sigma2 and e_a must be nonnegative")
        if self.noise not in ("gauss", "entry"):
            raise DomainError("noise must be 'gauss' or 'entry'")

    @property
    def kappa(self):
        return self.d / self.n


@dataclass(frozen=True, eq=False)
class ClassificationInstanceSpec:
    n: int
    d: int
    r: float
    sigma2: Optional[float] = None
    spectra: Optional[JointSpectralDensity] = None
    t_star: float = 1.0
    t_eta: float = 0.0
    entry: EntryDistribution = EntryDistribution.GAUSSIAN
    seed: int = 0

    def __post_init__(self):
        _check_dims(self.n, self.d)
        if self.n % 2:
            raise DomainError("n must be even (half the rows per class)")
        if self.r >= 1.0:
            raise DegenerateError("r = 1 makes mu1 = mu2 and w* = 0", guard="r < 1")
        if not 0.0 <= self.r:
            raise DomainError("r must lie in [0, 1)")
        if (self.sigma2 is None) == (self.spectra is None):
            raise DomainError("give exactly one of sigma2 or spectra")
        if self.sigma2 is not None and not self.sigma2 > 0:
            raise DomainError("sigma2 must be positive")
        if self.t_eta < 0:
            raise DomainError("t_eta must be nonnegative")

    def joint_spectra(self):
        if self.spectra is not None:
            return self.spectra
        return JointSpectralDensity.scalar(self.sigma2, self.d)

    def covariance_diagonals(self):
        if self.sigma2 is not None:
            v = np.full(self.d, self.sigma2 / self.d)
            return v, v.copy()
        return self.spectra.quantiles(self.d)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    X: np.ndarray
    y: np.ndarray
    w0: np.ndarray
    w_star: Optional[np.ndarray] = None
    rx_diag: Optional[np.ndarray] = None
    mu1: Optional[np.ndarray] = None
    mu2: Optional[np.ndarray] = None
    sigma_diags: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None)

    @property
    def is_classification(self):
        return self.mu1 is not None


def _fixed_unit_vector(d, rng):
    base = np.linspace(1.0, 2.0, d)
    base /= np.linalg.norm(base)
    return rng.permutation(base) * rng.choice([-1.0, 1.0], size=d)


def sample_regression_instance(spec: RegressionInstanceSpec) -> ProblemInstance:
    n, d = spec.n, spec.d
    rng = np.random.default_rng(spec.seed)
    rx = spec.p.quantiles(d).astype(float)
    root = np.sqrt(rx)
    X = spec.entry.sample(rng, (n, d)) * root
    w_star = _fixed_unit_vector(d, rng)
    sigma = math.sqrt(spec.sigma2)
    if spec.noise == "gauss":
        z = sigma * rng.standard_normal(n)
    else:
        z = sigma * spec.entry.sample(rng, n)
    y = X @ w_star + z
    xi = math.sqrt(spec.e_a / d) * rng.standard_normal(d)
    w0 = w_star + xi / root
    return ProblemInstance(X=X, y=y, w0=w0, w_star=w_star, rx_diag=rx)


def sample_classification_instance(spec: ClassificationInstanceSpec) -> ProblemInstance:
    n, d, r = spec.n, spec.d, spec.r
    rng = np.random.default_rng(spec.seed)
    s1, s2 = spec.covariance_diagonals()
    m = rng.standard_normal((3, d)) / math.sqrt(d)
    mu1 = math.sqrt(r) * m[0] + math.sqrt(1.0 - r) * m[1]
    mu2 = math.sqrt(r) * m[0] + math.sqrt(1.0 - r) * m[2]
    half = n // 2
    G = spec.entry.sample(rng, (n, d))
    X = np.empty((n, d))
    X[:half] = mu1 + G[:half] * np.sqrt(s1)
    X[half:] = mu2 + G[half:] * np.sqrt(s2)
    y = np.concatenate([np.ones(half), -np.ones(n - half)])
    w_star = (mu1 - mu2) / (s1 + s2)
    eta = rng.standard_normal(d)
    ws2 = float(np.dot(w_star, w_star))
    if ws2 > 0:
        eta -= w_star * (float(np.dot(eta, w_star)) / ws2)
    eta *= math.sqrt(1.0 - r) / np.linalg.norm(eta)
    w0 = spec.t_star * w_star + spec.t_eta * eta
    return ProblemInstance(
        X=X, y=y, w0=w0, w_star=w_star, mu1=mu1, mu2=mu2, sigma_diags=(s1, s2)
    )
