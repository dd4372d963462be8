"""Spectral densities, Stieltjes transforms and Gaussian tail functions.

Every asymptotic predictor in the package reduces to integrals of smooth
rational functions against the limiting eigenvalue distribution of a
covariance matrix.  Densities are kept either discrete (atoms, explicit
quadrature rules) or as a uniform law on an interval, which is integrated with
a fixed-order Gauss-Legendre rule.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, EvaluationError

WEIGHT_TOL = 1e-12
DEFAULT_GL_ORDER = 64

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=16)
def _legendre_rule(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _check_weights(weights):
    if np.any(weights < 0):
        raise DomainError("density weights must be nonnegative")
    total = float(np.sum(weights))
    if abs(total - 1.0) > WEIGHT_TOL:
        raise DomainError(f"density weights sum to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Eigenvalue distribution ``p(r)`` of a positive definite covariance.

    Build instances through :meth:`atoms`, :meth:`uniform` or
    :meth:`quadrature` rather than the constructor.

    Attributes
    ----------
    kind : {"atoms", "uniform", "quadrature"}
    locations, weights : ndarray
        Support points and probabilities.  For ``"uniform"`` these hold the
        interval endpoints and are unused by the integration routines.
    order : int
        Gauss-Legendre order used for ``"uniform"``.
    """

    kind: str
    locations: np.ndarray
    weights: np.ndarray
    order: int = DEFAULT_GL_ORDER
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _node_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).copy()
        wts = np.asarray(self.weights, dtype=float).copy()
        if self.kind not in ("atoms", "uniform", "quadrature"):
            raise DomainError(f"unknown density kind {self.kind!r}")
        if not np.all(np.isfinite(loc)) or np.any(loc <= 0):
            raise DomainError("support points must be finite and strictly positive")
        if self.kind == "uniform":
            if loc.shape != (2,) or not loc[0] < loc[1]:
                raise DomainError("uniform density requires lower < upper")
            x, w = _legendre_rule(int(self.order))
            a, b = loc
            nodes = 0.5 * (b - a) * x + 0.5 * (a + b)
            node_w = 0.5 * w
        else:
            if loc.ndim != 1 or loc.shape != wts.shape or loc.size == 0:
                raise DomainError("locations and weights must be matching 1-d arrays")
            _check_weights(wts)
            nodes, node_w = loc, wts
        for arr in (loc, wts, nodes, node_w):
            arr.setflags(write=False)
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "_nodes", np.asarray(nodes))
        object.__setattr__(self, "_node_weights", np.asarray(node_w))

    # construction -----------------------------------------------------------
    @classmethod
    def atoms(cls, pairs):
        """Discrete density from ``[(location, weight), ...]``."""
        arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls("atoms", arr[:, 0], arr[:, 1])

    @classmethod
    def single(cls, r0=1.0):
        return cls.atoms([(r0, 1.0)])

    @classmethod
    def uniform(cls, lower, upper, order=DEFAULT_GL_ORDER):
        return cls("uniform", np.array([lower, upper], dtype=float), np.array([0.5, 0.5]), order)

    @classmethod
    def quadrature(cls, nodes, weights):
        return cls("quadrature", nodes, weights)

    # queries ----------------------------------------------------------------
    @property
    def support_min(self):
        return float(self.locations.min())

    @property
    def support_max(self):
        return float(self.locations.max())

    @property
    def nodes(self):
        """Evaluation nodes (atoms, quadrature nodes or Gauss-Legendre nodes)."""
        return self._nodes

    @property
    def node_weights(self):
        return self._node_weights

    def scaled(self, c):
        """Density of ``c * r`` for ``r ~ p``."""
        if self.kind == "uniform":
            lo, hi = self.locations
            return SpectralDensity.uniform(c * lo, c * hi, self.order)
        return SpectralDensity(self.kind, c * self.locations, self.weights, self.order)

    def quantiles(self, d):
        """Deterministic ``d`` eigenvalues whose empirical law approximates ``p``.

        Discrete densities allocate ``round(w * d)`` copies per atom (largest
        remainder); the uniform law uses midpoint quantiles.
        """
        if self.kind == "uniform":
            lo, hi = self.locations
            return lo + (hi - lo) * (np.arange(d) + 0.5) / d
        counts = _allocate_counts(self.weights, d)
        return np.repeat(self.locations, counts)

    def to_literal(self):
        if self.kind == "uniform":
            return "uniform = " + json.dumps([float(v) for v in self.locations])
        pairs = [[float(a), float(b)] for a, b in zip(self.locations, self.weights)]
        return f"{self.kind} = " + json.dumps(pairs)


def _allocate_counts(weights, d):
    raw = np.asarray(weights) * d
    counts = np.floor(raw).astype(int)
    short = d - counts.sum()
    if short > 0:
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


@dataclass(frozen=True, eq=False)
class JointSpectralDensity:
    """Joint eigenvalue law ``p(s1, s2)`` for a simultaneously diagonal pair.

    ``exchangeable`` asserts ``p(s1, s2) = p(s2, s1)``; the constructor checks
    that the atom multiset really is symmetric in that case.
    """

    s1: np.ndarray
    s2: np.ndarray
    weights: np.ndarray
    exchangeable: bool = True

    def __post_init__(self):
        s1 = np.asarray(self.s1, dtype=float).copy()
        s2 = np.asarray(self.s2, dtype=float).copy()
        w = np.asarray(self.weights, dtype=float).copy()
        if not (s1.shape == s2.shape == w.shape) or s1.ndim != 1 or s1.size == 0:
            raise DomainError("joint density arrays must be matching 1-d arrays")
        if np.any(s1 <= 0) or np.any(s2 <= 0) or not np.all(np.isfinite(s1 + s2)):
            raise DomainError("joint support points must be finite and strictly positive")
        _check_weights(w)
        if self.exchangeable and not _is_symmetric(s1, s2, w):
            raise DomainError("atoms are not invariant under (s1, s2) -> (s2, s1)")
        for arr in (s1, s2, w):
            arr.setflags(write=False)
        object.__setattr__(self, "s1", s1)
        object.__setattr__(self, "s2", s2)
        object.__setattr__(self, "weights", w)

    @classmethod
    def atoms(cls, triples, exchangeable=True):
        arr = np.asarray(triples, dtype=float).reshape(-1, 3)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], exchangeable)

    @classmethod
    def scalar(cls, sigma2, d):
        """``Sigma1 = Sigma2 = sigma2 * I / d``."""
        s = sigma2 / d
        return cls.atoms([(s, s, 1.0)])

    @property
    def total(self):
        """Eigenvalues of ``Sigma1 + Sigma2`` at each atom."""
        return self.s1 + self.s2

    def quantiles(self, d):
        counts = _allocate_counts(self.weights, d)
        return np.repeat(self.s1, counts), np.repeat(self.s2, counts)


def _is_symmetric(s1, s2, w, tol=1e-12):
    fwd = sorted(zip(s1.tolist(), s2.tolist(), w.tolist()))
    rev = sorted(zip(s2.tolist(), s1.tolist(), w.tolist()))
    return all(
        abs(a[0] - b[0]) <= tol * max(1.0, abs(a[0]))
        and abs(a[1] - b[1]) <= tol * max(1.0, abs(a[1]))
        and abs(a[2] - b[2]) <= tol
        for a, b in zip(fwd, rev)
    )


def stieltjes(p, z):
    """Stieltjes transform ``S_p(z) = E[1 / (r - z)]`` for real ``z`` below the support."""
    z = float(z)
    if not z < p.support_min:
        raise DomainError(f"z = {z} is not strictly below the support (min {p.support_min})")
    if p.kind == "uniform":
        a, b = p.locations
        return math.log((b - z) / (a - z)) / (b - a)
    return float(np.dot(p.weights, 1.0 / (p.locations - z)))


def integrate(p, f):
    """Integrate ``f`` against a density.

    ``f`` receives the support points as an array (``f(r)`` for a
    :class:`SpectralDensity`, ``f(s1, s2)`` for a :class:`JointSpectralDensity`)
    and must broadcast.
    """
    if isinstance(p, JointSpectralDensity):
        vals = np.asarray(f(p.s1, p.s2), dtype=float)
        w = p.weights
    else:
        vals = np.asarray(f(p.nodes), dtype=float)
        w = p.node_weights
    vals = np.broadcast_to(vals, w.shape)
    if not np.all(np.isfinite(vals)):
        raise EvaluationError("integrand is not finite on the support")
    return float(np.dot(w, vals))


# Gaussian tail --------------------------------------------------------------

def q_tail(x):
    """``Q(x) = P(Z > x)`` for standard normal ``Z``."""
    return 0.5 * math.erfc(x / _SQRT2)


def _phi(x):
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def q_tail_inverse(e):
    """Inverse of :func:`q_tail` on ``(0, 1)``.

    Newton iterations on ``log Q(x) - log e`` kept inside a shrinking bracket;
    a step that would leave the bracket is replaced by bisection.
    """
    e = float(e)
    if not 0.0 < e < 1.0:
        raise DomainError(f"q_tail_inverse requires 0 < e < 1, got {e}")
    if e > 0.5:
        return -q_tail_inverse(1.0 - e)
    if e == 0.5:
        return 0.0
    lo, hi = 0.0, 40.0
    target = math.log(e)
    x = math.sqrt(-2.0 * target) if e < 0.1 else 1.0
    x = min(max(x, lo), hi)
    for _ in range(200):
        q = q_tail(x)
        g = math.log(q) - target if q > 0 else -math.inf
        if g > 0:
            lo = x
        else:
            hi = x
        if q > 0:
            step = g / (-_phi(x) / q)
            x_new = x - step
        else:
            x_new = math.nan
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


# Literals -------------------------------------------------------------------

NAMED_DENSITIES = {
    "single": lambda: SpectralDensity.single(1.0),
    "bilevel": lambda: SpectralDensity.atoms([(1.0, 0.3), (5.0, 0.7)]),
    "uniform": lambda: SpectralDensity.uniform(1.0, 5.0),
}


def parse_density(text):
    """Parse a density literal.

    Accepted forms::

        atoms = [[1.0, 0.3], [5.0, 0.7]]
        uniform = [1.0, 5.0]
        quadrature = [[node, weight], ...]
        single | bilevel | uniform            (named presets)
    """
    text = text.strip()
    if text in NAMED_DENSITIES:
        return NAMED_DENSITIES[text]()
    if "=" not in text:
        raise DomainError(f"cannot parse density literal {text!r}")
    kind, _, value = text.partition("=")
    kind = kind.strip()
    try:
        data = json.loads(value)
    except json.JSONDecodeError as exc:
        raise DomainError(f"bad density literal {text!r}: {exc}") from None
    if kind == "atoms":
        return SpectralDensity.atoms(data)
    if kind == "uniform":
        if len(data) != 2:
            raise DomainError("uniform literal takes [lower, upper]")
        return SpectralDensity.uniform(*data)
    if kind == "quadrature":
        arr = np.asarray(data, dtype=float).reshape(-1, 2)
        return SpectralDensity.quadrature(arr[:, 0], arr[:, 1])
    raise DomainError(f"unknown density kind {kind!r}")


def parse_joint_density(text):
    """Parse ``joint = [[s1, s2, w], ...]`` into an exchangeable joint density."""
    kind, _, value = text.partition("=")
    if kind.strip() != "joint":
        raise DomainError(f"cannot parse joint density literal {text!r}")
    try:
        data = json.loads(value)
    except json.JSONDecodeError as exc:
        raise DomainError(f"bad joint density literal {text!r}: {exc}") from None
    return JointSpectralDensity.atoms(data)
