"""Shared random-instance generators for the test suite."""

import numpy as np
import pytest


def rand_orthogonal(n, rng):
    return np.linalg.qr(rng.standard_normal((n, n)))[0]


def rand_psd(n, rng, rank=None, scale=1.0):
    r = rank or n
    B = rng.standard_normal((n, r))
    return scale * (B @ B.T) / r


def rand_stable_symmetric(n, rng, lo=-5.0, hi=-0.3):
    Q = rand_orthogonal(n, rng)
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def rand_stable(n, rng, margin=0.3):
    """Generic (non-normal) matrix shifted to spectral abscissa <= -margin."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real)
    return A - (shift + margin + rng.uniform(0.0, 1.0)) * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
