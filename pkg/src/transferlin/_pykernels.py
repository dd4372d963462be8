"""Pure numpy fallback with the same signatures as the compiled kernels."""
import numpy as np

QUADRATIC = 0
HYPERBOLIC = 1


def sgd_epoch(X, y, w, order, step):
    for i in order:
        x = X[i]
        g = step * (float(np.dot(x, w)) - y[i])
        w -= g * x


def smd_epoch(X, y, z, w, order, step, mirror, beta):
    for i in order:
        x = X[i]
        g = step * (float(np.dot(x, w)) - y[i])
        z -= g * x
        if mirror == QUADRATIC:
            w[:] = z
        else:
            w[:] = beta * np.sinh(z)
