"""Finite-dimensional solvers for the interpolation problem

    minimize ||w - w0||^2  subject to  X w = y,

its ridge relaxation, and an iterative SGD / SMD path used to check that
stochastic updates started at ``w0`` land on the same point.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from . import _kernels
from .errors import DegenerateError, DomainError, RankDeficiencyError

PIVOT_TOL = 1e-12
FEASIBILITY_TOL = 1e-8
SGD_TOL = 1e-6
DIVERGENCE_FACTOR = 1e6


def _as_problem(X, y, w0):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    w0 = np.ascontiguousarray(w0, dtype=float)
    if X.ndim != 2:
        raise DomainError("X must be a 2-d array")
    n, d = X.shape
    if y.shape != (n,) or w0.shape != (d,):
        raise DomainError(f"shape mismatch: X {X.shape}, y {y.shape}, w0 {w0.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all() and np.isfinite(w0).all()):
        raise DomainError("non-finite entries in X, y or w0")
    return X, y, w0


def gram_cholesky(X):
    """Lower Cholesky factor of ``X X^T`` with an explicit pivot check."""
    G = X @ X.T
    scale = float(np.trace(G))
    try:
        L = linalg.cholesky(G, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"X X^T is not positive definite: {exc}") from None
    pivots = np.diag(L) ** 2
    if pivots.min() <= PIVOT_TOL * scale:
        raise RankDeficiencyError(
            f"Cholesky pivot {pivots.min():.3e} below {PIVOT_TOL:g} * trace(XX^T)"
        )
    return L


def min_norm_interpolate(X, y, w0):
    """Interpolator closest to ``w0``: ``w0 + X^T (X X^T)^{-1} (y - X w0)``."""
    X, y, w0 = _as_problem(X, y, w0)
    if X.shape[0] >= X.shape[1]:
        raise DomainError(f"need n < d, got X of shape {X.shape}")
    L = gram_cholesky(X)
    resid = y - X @ w0
    u = linalg.cho_solve((L, True), resid, check_finite=False)
    w = w0 + X.T @ u
    # one refinement step; cheap and buys a couple of digits when XX^T is stiff
    r2 = y - X @ w
    w += X.T @ linalg.cho_solve((L, True), r2, check_finite=False)
    return w


def feasibility_residual(X, y, w):
    return float(np.linalg.norm(X @ w - y)) / max(1.0, float(np.linalg.norm(y)))


def row_space_residual(X, delta):
    """``||(I - P_row) delta|| / ||delta||``; zero when ``delta`` is in the row space."""
    nrm = float(np.linalg.norm(delta))
    if nrm == 0.0:
        return 0.0
    Q, _ = np.linalg.qr(X.T)
    return float(np.linalg.norm(delta - Q @ (Q.T @ delta))) / nrm


def ridge_offset_solve(X, y, w0, lam):
    """Minimizer of ``(lam/2) ||X w - y||^2 + ||w - w0||^2``.

    Stationarity gives ``w = w0 + X^T u`` with ``(2/lam I + X X^T) u = y - X w0``,
    an ``n x n`` positive definite system for any ``lam > 0``.
    """
    X, y, w0 = _as_problem(X, y, w0)
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    n = X.shape[0]
    A = X @ X.T + (2.0 / lam) * np.eye(n)
    c = linalg.cho_factor(A, lower=True, check_finite=False)
    u = linalg.cho_solve(c, y - X @ w0, check_finite=False)
    return w0 + X.T @ u


def ridge_stationarity_residual(X, y, w0, w, lam):
    """Backward-error-normalised ``||lam X^T (X w - y) + 2 (w - w0)||``.

    At large ``lam`` the two terms nearly cancel and ``X w - y`` is itself a
    cancellation, so the scale is built from the magnitudes of the inputs
    rather than from the (tiny) terms.
    """
    Xw = X @ w
    r = lam * (X.T @ (Xw - y)) + 2.0 * (w - w0)
    xnorm = float(np.linalg.norm(X, 2))
    scale = lam * xnorm * (float(np.linalg.norm(Xw)) + float(np.linalg.norm(y)))
    scale += 2.0 * (float(np.linalg.norm(w)) + float(np.linalg.norm(w0)))
    return float(np.linalg.norm(r)) / max(scale, 1e-300)


def renormalize_alpha(X, y, w0):
    """``alpha = y^T X w0 / ||X w0||^2`` and the rescaled start ``alpha * w0``."""
    X, y, w0 = _as_problem(X, y, w0)
    v = X @ w0
    vv = float(np.dot(v, v))
    if vv <= 1e-300:
        raise DegenerateError("X w0 is numerically zero", guard="||X w0||^2 > 0")
    alpha = float(np.dot(y, v)) / vv
    return alpha, alpha * w0


# -- mirrors -----------------------------------------------------------------


@dataclass(frozen=True)
class Mirror:
    """Separable mirror potential given by its gradient and inverse gradient.

    ``code`` selects a compiled kernel (0 quadratic, 1 hyperbolic entropy);
    ``None`` routes through the generic Python hooks.
    """

    name: str
    grad: Callable[[np.ndarray], np.ndarray]
    inv_grad: Callable[[np.ndarray], np.ndarray]
    code: Optional[int] = None
    beta: float = 1.0


def quadratic_mirror():
    return Mirror("quadratic", lambda w: np.array(w, dtype=float), lambda z: np.array(z, dtype=float),
                  code=_kernels.QUADRATIC)


def hyperbolic_mirror(beta=1.0):
    """``g(w) = sum w asinh(w/beta) - sqrt(w^2 + beta^2)``, so ``grad g = asinh(w/beta)``."""
    if not beta > 0:
        raise DomainError("beta must be positive")
    return Mirror(
        "hyperbolic", lambda w: np.arcsinh(np.asarray(w) / beta),
        lambda z: beta * np.sinh(z), code=_kernels.HYPERBOLIC, beta=float(beta),
    )


def custom_mirror(name, grad, inv_grad):
    return Mirror(name, grad, inv_grad, code=None)


# -- iterative verification path ----------------------------------------------


@dataclass(frozen=True)
class IterativeReport:
    converged: bool
    diverged: bool
    epochs: int
    residual: float
    step: float
    warning: Optional[str] = None


def max_stable_step(X):
    """``1 / lambda_max(X X^T)``, the recommended step bound."""
    return 1.0 / float(linalg.eigvalsh(X @ X.T, subset_by_index=[X.shape[0] - 1, X.shape[0] - 1])[0])


def _step_warning(X, step):
    bound = max_stable_step(X)
    if step > bound * (1.0 + 1e-12):
        msg = f"step {step:.3e} exceeds 1/lambda_max(XX^T) = {bound:.3e}"
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
        return msg
    return None


def _iterate(X, y, w0, step, max_epochs, tol, seed, mirror, shuffle):
    X, y, w0 = _as_problem(X, y, w0)
    if not step > 0:
        raise DomainError("step must be positive")
    if max_epochs < 1:
        raise DomainError("max_epochs must be a positive integer")
    step = float(step)
    warn = _step_warning(X, step)
    ynorm = max(1.0, float(np.linalg.norm(y)))
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    order = np.arange(n, dtype=np.int64)

    w = w0.copy()
    z = None if mirror is None else np.ascontiguousarray(mirror.grad(w0), dtype=float)
    res0 = res = float(np.linalg.norm(X @ w - y)) / ynorm
    epochs = 0
    diverged = False
    while res > tol and epochs < max_epochs:
        if shuffle:
            order = rng.permutation(n).astype(np.int64)
        if mirror is None:
            _kernels.sgd_epoch(X, y, w, order, step)
        elif mirror.code is not None:
            _kernels.smd_epoch(X, y, z, w, order, step, mirror.code, mirror.beta)
        else:
            for i in order:
                g = step * (float(np.dot(X[i], w)) - y[i])
                z -= g * X[i]
                w = np.asarray(mirror.inv_grad(z), dtype=float)
        epochs += 1
        res = float(np.linalg.norm(X @ w - y)) / ynorm
        if not math.isfinite(res) or res > DIVERGENCE_FACTOR * max(res0, 1.0):
            diverged = True
            break
    report = IterativeReport(
        converged=bool(res <= tol), diverged=diverged, epochs=epochs, residual=res,
        step=step, warning=warn,
    )
    return w, report


def sgd_run(X, y, w0, step=None, max_epochs=20000, tol=SGD_TOL, seed=0, shuffle=True):
    """Single-sample SGD on ``sum_i (x_i^T w - y_i)^2 / 2`` started from ``w0``.

    Rows are visited in a fresh seeded permutation each epoch.  Returns the
    final iterate and an :class:`IterativeReport`; running out of epochs or
    blowing up is reported, never raised.
    """
    X = np.ascontiguousarray(X, dtype=float)
    if step is None:
        step = max_stable_step(X)
    return _iterate(X, y, w0, step, max_epochs, tol, seed, None, shuffle)


def smd_run(X, y, w0, mirror=None, step=None, max_epochs=20000, tol=SGD_TOL, seed=0, shuffle=True):
    """Stochastic mirror descent ``grad g(w_t) = grad g(w_{t-1}) - step * grad L_i``."""
    X = np.ascontiguousarray(X, dtype=float)
    if mirror is None:
        mirror = quadratic_mirror()
    if step is None:
        step = max_stable_step(X)
    return _iterate(X, y, w0, step, max_epochs, tol, seed, mirror, shuffle)
