"""Synchronous-reference-frame PLL error dynamics and its bound constants.

The loop tracks grid phase; states are the phase and frequency estimation
errors, the input is the 2-D voltage perturbation, the output is the phase
error.  Default tuning: damping 1/sqrt(2), bandwidth 2*pi*10 rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import NonlinearSystem, StateSpace, Structure

#: sup-norm envelope within which the artifact is configured to operate;
#: the contraction/invariant-set machinery is exercised up to 10% input
DEFAULT_U_MAX = 0.15

#: margin applied on top of the grid maximum of the remainder ratio
_MF_MARGIN = 1.05


@dataclass(frozen=True)
class PllParams:
    zeta: float = 1.0 / math.sqrt(2.0)
    omega_c: float = 2.0 * math.pi * 10.0

    def __post_init__(self):
        if self.zeta <= 0 or self.omega_c <= 0:
            raise ValueError("zeta and omega_c must be positive")

    @property
    def k_p(self) -> float:
        return 2.0 * self.zeta * self.omega_c

    @property
    def k_i(self) -> float:
        return self.omega_c ** 2


def pll_system(params: PllParams, M_f: float = 0.0,
               u_max: float = DEFAULT_U_MAX) -> NonlinearSystem:
    """Output-Lurie model of the PLL error dynamics.

    f(y, u) = y - sin y + u . (cos y - 1, sin y) vanishes at the origin
    together with both Jacobians, so M_f alone controls the remainder.
    M_f is region dependent; estimate it per input level with estimate_Mf.
    """
    k_p, k_i = params.k_p, params.k_i
    linear = StateSpace(
        A=[[-k_p, 1.0], [-k_i, 0.0]],
        B=[[k_p, 0.0], [k_i, 0.0]],
        C=[[1.0, 0.0]],
        F=[[k_p], [k_i]],
    )
    return NonlinearSystem(linear=linear, nonlinearity="pll", M_f=M_f,
                           M_g=0.0, structure=Structure.OUTPUT_LURIE, u_max=u_max)


def _a(y):
    return y - np.sin(y)


def _da(y):
    return 1.0 - np.cos(y)


def _bvec(y):
    return np.stack([np.cos(y) - 1.0, np.sin(y)], axis=-1)


def _dbvec(y):
    return np.stack([-np.sin(y), np.cos(y)], axis=-1)


def estimate_Mf(params: PllParams, y_max: float, u_max: float,
                n_grid: int = 33) -> float:
    """Quadratic-remainder constant of the PLL nonlinearity on a box region.

    Scans |y|, |ybar| <= y_max and |u|, |ubar| <= u_max (disc) on a grid with
    ``n_grid`` points per scalar dimension, maximizing the exact Taylor
    remainder divided by |y - ybar|^2 + |u - ubar|^2, and returns 1.05 times
    the grid maximum as a sampling margin.

    The remainder is affine in (u, ubar), which collapses the scan to
    r_a(y, ybar) + u . (b(y) - b(ybar)) - ubar . b'(ybar) (y - ybar).
    The coincident-argument limit of the ratio (where the supremum typically
    lives) is added in closed form: with alpha = (a'' + ubar . b'')/2 and
    beta = b', the limit over perturbation directions is
    (|alpha| + sqrt(alpha^2 + |beta|^2)) / 2, or |alpha| when inputs are
    pinned to zero.
    """
    if y_max <= 0:
        raise ValueError("y_max must be positive")
    if n_grid < 3:
        raise ValueError("n_grid too coarse")
    ys = np.linspace(-y_max, y_max, n_grid)

    if u_max > 0:
        ax = np.linspace(-u_max, u_max, n_grid)
        gx, gy = np.meshgrid(ax, ax, indexing="ij")
        upts = np.column_stack([gx.ravel(), gy.ravel()])
        upts = upts[np.linalg.norm(upts, axis=1) <= u_max]
    else:
        upts = np.zeros((1, 2))
    # pairwise squared input distances, fixed across the (y, ybar) loop
    du2 = ((upts[:, None, :] - upts[None, :, :]) ** 2).sum(axis=2)

    best = 0.0
    for yb in ys:
        a_yb, da_yb = _a(yb), _da(yb)
        b_yb, db_yb = _bvec(yb), _dbvec(yb)
        for y in ys:
            dy = y - yb
            r_a = _a(y) - a_yb - da_yb * dy
            s = upts @ (_bvec(y) - b_yb)          # u-part per u point
            t = upts @ (db_yb * dy)               # ubar-part per ubar point
            num = np.abs(r_a + s[:, None] - t[None, :])
            den = dy * dy + du2
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(den > 0.0, num / den, 0.0)
            best = max(best, float(ratio.max()))

    # coincident-argument curvature limit over the (ybar, ubar) grid
    dda = np.sin(ys)                                  # a''(y)
    ddb = -np.stack([np.cos(ys), np.sin(ys)], axis=-1)  # b''(y)
    alpha = 0.5 * np.abs(dda[:, None] + ddb @ upts.T)   # (ny, nu)
    if u_max > 0:
        beta = 1.0  # |b'(y)| = |(-sin y, cos y)| is identically one
        limit = 0.5 * (alpha + np.sqrt(alpha * alpha + beta * beta))
    else:
        limit = alpha
    best = max(best, float(limit.max()))
    return _MF_MARGIN * best
