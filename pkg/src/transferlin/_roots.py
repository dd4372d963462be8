"""Bracketed root finding for monotone scalar fixed-point residuals."""
import math

from .errors import ConvergenceError

THETA_MAX = 1e12
THETA_MIN = 1e-300


def solve_decreasing(residual, derivative, start=1.0, xtol=1e-13, ftol=1e-12):
    """Root of a strictly decreasing ``residual`` on ``(0, inf)``.

    The bracket is grown geometrically from ``start``; bisection (geometric
    midpoint while the bracket spans more than a factor of two) runs until the
    relative bracket width is below ``xtol``, followed by two Newton polish
    steps that are kept only if they reduce ``|residual|``.

    Raises
    ------
    ConvergenceError
        If no sign change is found before ``x`` reaches ``THETA_MAX``.
    """
    lo = hi = float(start)
    f_lo = f_hi = residual(lo)
    if f_lo > 0:
        while f_hi > 0:
            lo, f_lo = hi, f_hi
            hi *= 4.0
            if hi > THETA_MAX:
                raise ConvergenceError(f"no sign change below theta = {THETA_MAX:g}")
            f_hi = residual(hi)
    else:
        while f_lo <= 0:
            if f_lo == 0:
                return lo
            hi, f_hi = lo, f_lo
            lo /= 4.0
            if lo < THETA_MIN:
                raise ConvergenceError("no sign change above theta = 0")
            f_lo = residual(lo)

    for _ in range(400):
        if hi - lo <= xtol * hi:
            break
        mid = math.sqrt(lo * hi) if hi > 2.0 * lo else 0.5 * (lo + hi)
        f_mid = residual(mid)
        if f_mid == 0:
            lo = hi = mid
            break
        if f_mid > 0:
            lo = mid
        else:
            hi = mid

    x = 0.5 * (lo + hi)
    fx = residual(x)
    for _ in range(2):
        dfx = derivative(x)
        if dfx == 0 or not math.isfinite(dfx):
            break
        x_new = x - fx / dfx
        if x_new <= 0:
            break
        f_new = residual(x_new)
        if abs(f_new) < abs(fx):
            x, fx = x_new, f_new
    if not abs(fx) <= ftol:
        raise ConvergenceError(f"residual {fx:.3e} above tolerance {ftol:g} at theta = {x!r}")
    return x
