import numpy as np

from sqgauss.gaussian import AffineMap


def random_spd(rng, n, jitter=1.0):
    m = rng.normal(size=(n, n))
    cov = m @ m.T + jitter * np.eye(n)
    return 0.5 * (cov + cov.T)


def random_affine(rng, n):
    return AffineMap(rng.normal(size=(n, n)) + 3.0 * np.eye(n),
                     rng.normal(size=n))
