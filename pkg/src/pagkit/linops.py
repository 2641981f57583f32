"""Linear-system primitives: e^{At}, stability, impulse responses, G(s).

Impulse grids reuse a single e^{A dt} propagator instead of per-point
exponentials; one n x n multiply per grid point keeps long grids cheap and
the quadrature error smooth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import EigenSolverError, ExpOverflowError, NotHurwitzError, PeriodSingularError
from .model import StateSpace

#: reciprocal-condition floor below which I - e^{AT} counts as singular
_PERIOD_RCOND = 1e-13


@dataclass(frozen=True)
class ImpulseGrid:
    """Uniform samples of an impulse-response matrix.

    ``H[k]`` has shape (p, m) and is taken at time ``t0 + k*dt``.  For
    periodic grids ``T`` is the period and the N samples cover [0, T); for
    plain impulse grids ``T`` is the last sample time.
    """

    T: float
    N: int
    H: np.ndarray
    t0: float = 0.0
    dt: float = 0.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("grid needs at least 2 samples")
        if not np.all(np.isfinite(self.H)):
            raise ValueError("impulse samples must be finite")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.N) * self.dt


def matrix_exponential(M: np.ndarray) -> np.ndarray:
    """e^M by scaling-and-squaring with a diagonal Pade approximant.

    Delegates to scipy's expm, which implements exactly that scheme with
    near machine-precision accuracy for moderate norms.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ExpOverflowError("matrix has non-finite entries")
    E = scipy.linalg.expm(M)
    if not np.all(np.isfinite(E)):
        raise ExpOverflowError("matrix exponential overflowed")
    return E


def is_hurwitz(A: np.ndarray):
    """Return ``(stable, spectral_abscissa)`` for a square matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    sigma = float(np.max(eigs.real))
    return sigma < 0.0, sigma


def require_hurwitz(A: np.ndarray) -> float:
    """Gate used by every gain computation; returns the spectral abscissa."""
    ok, sigma = is_hurwitz(A)
    if not ok:
        raise NotHurwitzError(f"spectral abscissa {sigma:.6g} >= 0")
    return sigma


def dc_transfer(sys: StateSpace, input_map: str = "B") -> np.ndarray:
    """Zero-frequency transfer matrix G(0) = -C A^{-1} (B or F)."""
    require_hurwitz(sys.A)
    M = sys.input_matrix(input_map)
    return -sys.C @ np.linalg.solve(sys.A, M)


def frequency_response(sys: StateSpace, input_map: str, omega: float):
    """Evaluate C (jwI - A)^{-1} (B or F); returns the matrix and its spectral norm."""
    require_hurwitz(sys.A)
    M = sys.input_matrix(input_map)
    if omega == 0.0:
        # keep the zero-frequency value identical to dc_transfer
        G = (-sys.C @ np.linalg.solve(sys.A, M)).astype(complex)
    else:
        G = sys.C @ np.linalg.solve(1j * omega * np.eye(sys.n) - sys.A, M)
    return G, float(np.linalg.norm(G, ord=2))


def spectral_norms(H: np.ndarray) -> np.ndarray:
    """Largest singular value of each (p, m) slice of an (N, p, m) stack."""
    if H.shape[1] == 1 or H.shape[2] == 1:
        return np.linalg.norm(H.reshape(H.shape[0], -1), axis=1)
    return np.linalg.norm(H, ord=2, axis=(1, 2))


def _propagated_samples(A, left, right, t0, dt, count):
    """Rows left @ e^{A t} @ right at t = t0 + k dt via one e^{A dt} propagator.

    Works in blocks: a cache of the first J propagator powers turns the
    sequential recursion into two batched multiplies per J samples.
    """
    n = A.shape[0]
    step = matrix_exponential(A * dt)
    base = matrix_exponential(A * t0) @ right if t0 != 0.0 else right.copy()
    J = min(count, 64)
    powers = np.empty((J, n, n))
    powers[0] = np.eye(n)
    for j in range(1, J):
        powers[j] = step @ powers[j - 1]
    step_block = step @ powers[J - 1]
    out = np.empty((count, left.shape[0], right.shape[1]))
    for s in range(0, count, J):
        cnt = min(J, count - s)
        out[s:s + cnt] = left @ (powers[:cnt] @ base)
        base = step_block @ base
    return out


def impulse_response(sys: StateSpace, input_map: str, t_grid: np.ndarray) -> ImpulseGrid:
    """Sample H(t) = C e^{At} (B or F) on a uniform time grid."""
    require_hurwitz(sys.A)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 2:
        raise ValueError("t_grid must be a 1-D array with >= 2 points")
    steps = np.diff(t_grid)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise ValueError("t_grid must be uniform")
    M = sys.input_matrix(input_map)
    H = _propagated_samples(sys.A, sys.C, M, float(t_grid[0]), dt, t_grid.size)
    return ImpulseGrid(T=float(t_grid[-1]), N=t_grid.size, H=H, t0=float(t_grid[0]), dt=dt)


def _periodic_weight(sys: StateSpace, input_map: str, T: float) -> np.ndarray:
    """(I - e^{AT})^{-1} (B or F), guarding against a non-Hurwitz leak."""
    EAT = matrix_exponential(sys.A * T)
    W = np.eye(sys.n) - EAT
    if 1.0 / np.linalg.cond(W) < _PERIOD_RCOND:
        raise PeriodSingularError(f"I - e^(A T) ill conditioned at T={T:g}")
    return np.linalg.solve(W, sys.input_matrix(input_map))


def periodic_impulse_response(sys: StateSpace, input_map: str, T: float, N: int) -> ImpulseGrid:
    """Sample the wrapped impulse response C e^{At}(I - e^{AT})^{-1}(B or F) on [0, T)."""
    require_hurwitz(sys.A)
    if not T > 0:
        raise ValueError("T must be positive")
    R = _periodic_weight(sys, input_map, T)
    H = _propagated_samples(sys.A, sys.C, R, 0.0, T / N, N)
    return ImpulseGrid(T=float(T), N=int(N), H=H, dt=T / N)


def periodic_impulse_closed(sys: StateSpace, input_map: str, T: float, N: int) -> np.ndarray:
    """N+1 samples of the wrapped impulse response on the closed interval [0, T].

    Quadrature helper: the extra endpoint makes composite trapezoid rules
    second order on the (non-periodic) wrapped response.
    """
    require_hurwitz(sys.A)
    R = _periodic_weight(sys, input_map, T)
    return _propagated_samples(sys.A, sys.C, R, 0.0, T / N, N + 1)
