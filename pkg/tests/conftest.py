import numpy as np
import pytest

from pagkit import NonlinearSystem, StateSpace


@pytest.fixture
def lag():
    """First-order lag: A=-1, B=C=1 (transfer 1/(s+1))."""
    return StateSpace(A=[[-1.0]], B=[[1.0]], C=[[1.0]])


@pytest.fixture
def lag_nsys(lag):
    return NonlinearSystem(lag)


def random_stable_siso(rng, n_max=5, osc_ratio=6.0):
    """Random stable SISO system with controlled eigenvalue geometry.

    Real parts in [-2, -0.2]; imaginary parts at most ``osc_ratio`` times the
    real part, keeping the impulse-response grids well resolved.
    """
    n = int(rng.integers(1, n_max + 1))
    blocks = []
    count = 0
    while count < n:
        re = -float(rng.uniform(0.2, 2.0))
        if count + 2 <= n and rng.uniform() < 0.6:
            im = float(rng.uniform(0.3, osc_ratio)) * abs(re)
            blocks.append(np.array([[re, im], [-im, re]]))
            count += 2
        else:
            blocks.append(np.array([[re]]))
            count += 1
    A = np.zeros((n, n))
    at = 0
    for blk in blocks:
        k = blk.shape[0]
        A[at:at + k, at:at + k] = blk
        at += k
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    S = Q * rng.uniform(0.5, 2.0, n)
    A = S @ A @ np.linalg.inv(S)
    B = rng.standard_normal((n, 1))
    C = rng.standard_normal((1, n))
    return StateSpace(A=A, B=B, C=C)
