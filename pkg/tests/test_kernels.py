import os
import subprocess
import sys

import numpy as np
import pytest

from transferlin import KERNEL_BACKEND, _kernels
from transferlin._kernels import _pykernels

try:
    from transferlin import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def _problem(seed=0, n=20, d=50):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d)) / np.sqrt(d)
    y = rng.standard_normal(n)
    order = rng.permutation(n).astype(np.int64)
    return X, y, rng.standard_normal(d), order


@needs_ext
def test_sgd_epoch_parity():
    X, y, w, order = _problem()
    a, b = w.copy(), w.copy()
    for _ in range(5):
        _ckernels.sgd_epoch(X, y, a, order, 0.3)
        _pykernels.sgd_epoch(X, y, b, order, 0.3)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_ext
@pytest.mark.parametrize("mirror,beta", [(0, 1.0), (1, 0.5), (1, 2.0)])
def test_smd_epoch_parity(mirror, beta):
    X, y, w, order = _problem(1)
    if mirror == 1:
        z0 = np.arcsinh(w / beta)
        w = beta * np.sinh(z0)
    else:
        z0 = w.copy()
    za, wa, zb, wb = z0.copy(), w.copy(), z0.copy(), w.copy()
    for _ in range(5):
        _ckernels.smd_epoch(X, y, za, wa, order, 0.2, mirror, beta)
        _pykernels.smd_epoch(X, y, zb, wb, order, 0.2, mirror, beta)
    np.testing.assert_allclose(wa, wb, rtol=1e-11, atol=1e-13)
    np.testing.assert_allclose(za, zb, rtol=1e-11, atol=1e-13)


def test_backend_reported():
    assert KERNEL_BACKEND == _kernels.BACKEND
    assert KERNEL_BACKEND in ("cython", "python")
    if _ckernels is not None and os.environ.get("TRANSFERLIN_PURE_PYTHON", "") in ("", "0"):
        assert KERNEL_BACKEND == "cython"


def _backend_with(value):
    env = dict(os.environ, TRANSFERLIN_PURE_PYTHON=value)
    out = subprocess.run([sys.executable, "-c", "import transferlin; print(transferlin.KERNEL_BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    return out.stdout.strip()


def test_forced_fallback():
    assert _backend_with("1") == "python"


@needs_ext
def test_zero_does_not_force_fallback():
    assert _backend_with("0") == "cython"


def test_fallback_solver_matches_direct_solution():
    code = (
        "import numpy as np, transferlin as t;"
        "from transferlin.solvers import sgd_run, min_norm_interpolate;"
        "r=np.random.default_rng(3);X=r.standard_normal((10,30));y=r.standard_normal(10);w0=r.standard_normal(30);"
        "w,rep=sgd_run(X,y,w0,tol=1e-10);"
        "print(t.KERNEL_BACKEND, rep.converged, np.abs(w-min_norm_interpolate(X,y,w0)).max()<1e-8)"
    )
    env = dict(os.environ, TRANSFERLIN_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "True", "True"]
