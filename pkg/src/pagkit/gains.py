"""Gain computations: classical slope, exact and conservative periodic gains,
and the conservative nonlinear bounds built from the four subsystem channels.

The exact AC gain is T times the largest mean absolute deviation of the
direction-projected wrapped impulse response; the projection direction is
searched over the output unit sphere (closed form for p = 1, golden section
for p = 2, seeded multistarts for p >= 3, the last flagged uncertified).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linops, median
from .errors import InvalidBoundError, StructureMismatchError, SupSearchError
from .model import (
    DEFAULT_GRID_SIZE,
    NonlinearSystem,
    RhoVector,
    StateSpace,
    Structure,
    Composition,
    composition_rho,
)

#: quadratic coefficients below this are treated as the linear (a -> 0) limit
_LINEAR_EPS = 1e-14


class Branch(enum.Enum):
    ROOT = "root"
    SATURATED = "saturated"


class Sharpness(enum.Enum):
    PAG_SHARPER = "pag_sharper"
    AG_SHARPER = "ag_sharper"
    TIE = "tie"


@dataclass(frozen=True)
class LinearPag:
    """Diagonal periodic gain pair of one linear channel at period T."""

    gamma_dc: float
    gamma_ac: float
    T: float
    certified: bool = True  # False when the sphere search is only a lower estimate

    def apply(self, rho: RhoVector) -> np.ndarray:
        return np.array([self.gamma_dc * rho.dc, self.gamma_ac * rho.ac])


@dataclass(frozen=True)
class SubsystemPags:
    """The four channel gains used by the nonlinear bounds, all at one T."""

    u_to_x: LinearPag
    f_to_x: LinearPag
    u_to_y: LinearPag
    f_to_y: LinearPag


@dataclass(frozen=True)
class NonlinearPagResult:
    """Conservative output bound (eta) plus, for the general structure, the
    intermediate state-level bounds (xi) and the quadratic branch taken."""

    eta_dc: float
    eta_ac: float
    branch_dc: Branch
    branch_ac: Branch
    b: float
    xi_dc: Optional[float] = None
    xi_ac: Optional[float] = None

    def __post_init__(self):
        if self.xi_dc is not None and self.xi_dc > self.b * (1 + 1e-12):
            raise ValueError("xi_dc exceeds the invariant-set bound b")
        if self.xi_ac is not None and self.xi_ac > 2 * self.b * (1 + 1e-12):
            raise ValueError("xi_ac exceeds 2b")

    def as_array(self) -> np.ndarray:
        return np.array([self.eta_dc, self.eta_ac])


def classical_ag_slope(sys: StateSpace, input_map: str = "B",
                       rel_tail: float = 1e-9, window_points: int = 16384,
                       max_windows: int = 40) -> float:
    """Integral of the spectral norm of the impulse response over [0, inf).

    Composite trapezoid on successive windows of the propagated impulse grid;
    integration stops once the envelope tail bound c e^{sigma t}/|sigma|
    drops below ``rel_tail`` of the accumulated value.
    """
    sigma = linops.require_hurwitz(sys.A)
    Tw = 6.0 / abs(sigma)
    dt = Tw / window_points
    total = 0.0
    log_c = -np.inf
    t_end = 0.0
    for _ in range(max_windows):
        grid = t_end + dt * np.arange(window_points + 1)
        H = linops.impulse_response(sys, input_map, grid).H
        norms = linops.spectral_norms(H)
        total += float(np.trapezoid(norms, dx=dt))
        with np.errstate(divide="ignore"):
            log_c = max(log_c, float(np.max(np.log(norms) - sigma * grid)))
        t_end += Tw
        if total > 0.0:
            log_tail = log_c + sigma * t_end - math.log(abs(sigma))
            if log_tail < math.log(rel_tail * total):
                break
    return total


def _direction_mad(Hc: np.ndarray, v: np.ndarray, T: float) -> float:
    """Mean absolute deviation of the m-vector signal v . H_T about its median.

    ``Hc`` holds N+1 closed-grid samples of the wrapped impulse response; the
    median comes from the N period samples, while the deviation integral uses
    the closed-grid trapezoid rule (the wrapped response jumps at the period
    boundary, so a plain sample mean would carry an O(T/N) bias).
    """
    points = np.einsum("p,kpm->km", v, Hc)
    if points.shape[1] == 1:
        # SISO projection: the geometric median is the standard median
        mu = np.array([median.scalar_median(points[:-1, 0])])
    else:
        mu = median.geometric_median(points[:-1]).mu
    g = np.linalg.norm(points - mu, axis=1)
    return float(np.trapezoid(g, dx=T / (Hc.shape[0] - 1))) / T


def _golden_max(f, lo: float, hi: float, iters: int = 40):
    """Golden-section maximization on [lo, hi]; returns (x, f(x))."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def _sup_directional_mad(Hc: np.ndarray, T: float, seed: int):
    """sup over unit output directions of the projected MAD; returns
    (sup value, certified flag)."""
    p = Hc.shape[1]
    if p == 1:
        # sign symmetry: median(-f) = -median(f) leaves the MAD unchanged
        return _direction_mad(Hc, np.ones(1), T), True

    if p == 2:
        def phi(theta):
            return _direction_mad(Hc, np.array([math.cos(theta), math.sin(theta)]), T)

        thetas = np.linspace(0.0, math.pi, 64, endpoint=False)
        vals = np.array([phi(t) for t in thetas])
        if not np.all(np.isfinite(vals)):
            raise SupSearchError("non-finite projected MAD",
                                 best=float(np.nanmax(vals)))
        k = int(np.argmax(vals))
        span = math.pi / 64
        _, best = _golden_max(phi, thetas[k] - span, thetas[k] + span)
        return max(float(best), float(vals[k])), True

    # p >= 3: seeded multistart projected gradient ascent (lower estimate)
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, int(np.float64(T).view(np.uint64))]))

    def phi_v(v):
        return _direction_mad(Hc, v, T)

    best = -np.inf
    n_starts, fd_eps = 128, 1e-6
    for _ in range(n_starts):
        v = rng.standard_normal(p)
        v /= np.linalg.norm(v)
        val = phi_v(v)
        for _ in range(200):
            grad = np.empty(p)
            for i in range(p):
                e = np.zeros(p)
                e[i] = fd_eps
                w = v + e
                grad[i] = (phi_v(w / np.linalg.norm(w)) - val) / fd_eps
            grad -= (grad @ v) * v
            gn = np.linalg.norm(grad)
            if gn < 1e-12:
                break
            step, improved = 0.5, False
            for _ in range(25):
                w = v + step * grad / gn
                w /= np.linalg.norm(w)
                cand = phi_v(w)
                if cand > val:
                    v, val, improved = w, cand, True
                    break
                step /= 2.0
            if not improved or (cand - val) <= 1e-6 * max(abs(val), 1e-30):
                break
        best = max(best, val)
    if not np.isfinite(best):
        raise SupSearchError("all multistarts failed", best=best)
    return float(best), False


def linear_pag(sys: StateSpace, input_map: str, T: float,
               N: int = DEFAULT_GRID_SIZE, seed: int = 0) -> LinearPag:
    """Exact periodic gain pair of a stable linear channel.

    gamma_dc is the spectral norm of the zero-frequency transfer matrix;
    gamma_ac is T times the sup over unit output directions of the mean
    absolute deviation of the projected wrapped impulse response.
    """
    gamma_dc = float(np.linalg.norm(linops.dc_transfer(sys, input_map), ord=2))
    Hc = linops.periodic_impulse_closed(sys, input_map, T, N)
    sup_mad, certified = _sup_directional_mad(Hc, T, seed)
    return LinearPag(gamma_dc=gamma_dc, gamma_ac=T * sup_mad, T=T, certified=certified)


def linear_pag_conservative(sys: StateSpace, input_map: str, T: float,
                            N: int = DEFAULT_GRID_SIZE) -> float:
    """Conservative AC gain: integral of the wrapped impulse-response norm."""
    H = linops.periodic_impulse_closed(sys, input_map, T, N)
    return float(np.trapezoid(linops.spectral_norms(H), dx=T / N))


def subsystem_pags(sys: StateSpace, T: float, N: int = DEFAULT_GRID_SIZE,
                   seed: int = 0) -> SubsystemPags:
    """The four channel gains (input/nonlinearity into state/output)."""
    full_state = StateSpace(sys.A, sys.B, np.eye(sys.n), sys.F)
    return SubsystemPags(
        u_to_x=linear_pag(full_state, "B", T, N, seed),
        f_to_x=linear_pag(full_state, "F", T, N, seed),
        u_to_y=linear_pag(sys, "B", T, N, seed),
        f_to_y=linear_pag(sys, "F", T, N, seed),
    )


def quad_resolve(a: float, c: float, cap: float):
    """Largest xi in [0, cap] with a xi^2 - xi + c >= 0.

    Root branch returns the lower root (1 - sqrt(1 - 4ac))/(2a) when the
    quadratic is negative at the cap, otherwise the cap itself (saturated).
    The discriminant is clamped at zero to guard rounding only.
    """
    if a < 0 or c < 0:
        raise ValueError("a and c must be nonnegative")
    if not cap > 0:
        raise ValueError("cap must be positive")
    if a < _LINEAR_EPS:
        return (c, Branch.ROOT) if c <= cap else (cap, Branch.SATURATED)
    if not np.isfinite(cap):
        # unbounded feasible set for any a > 0
        return float(cap), Branch.SATURATED
    if a * cap * cap + c <= cap:
        disc = max(0.0, 1.0 - 4.0 * a * c)
        return (1.0 - math.sqrt(disc)) / (2.0 * a), Branch.ROOT
    return float(cap), Branch.SATURATED


def _check_nonlinear_inputs(nsys: NonlinearSystem, b: float, rho_u: RhoVector):
    if rho_u.one_norm >= nsys.u_max:
        raise ValueError(
            f"input magnitude {rho_u.one_norm:g} is not below u_max {nsys.u_max:g}")
    if b <= 0 and rho_u.one_norm > 0:
        raise InvalidBoundError("invariant-set bound b must be positive for nonzero input")


def _zero_result(b: float) -> NonlinearPagResult:
    return NonlinearPagResult(0.0, 0.0, Branch.ROOT, Branch.ROOT, b, 0.0, 0.0)


def nonlinear_pag_general(nsys: NonlinearSystem, T: float, N: int, b: float,
                          rho_u: RhoVector, seed: int = 0) -> NonlinearPagResult:
    """Conservative periodic gain of a general-structure nonlinear system.

    ``b`` bounds the state norm over the forward-invariant set at input level
    ||rho_u||_1 (supplied configuration, not computed here).
    """
    _check_nonlinear_inputs(nsys, b, rho_u)
    if rho_u.one_norm == 0:
        # zero input: the unique periodic orbit is the origin
        return _zero_result(b)
    pags = subsystem_pags(nsys.linear, T, N, seed)
    Mf, Mg = nsys.M_f, nsys.M_g
    dc, ac = rho_u.dc, rho_u.ac
    rho_sq = dc * dc + ac * ac

    a_ac = 2.0 * Mf * pags.f_to_x.gamma_ac
    c_ac = 2.0 * Mf * pags.f_to_x.gamma_ac * ac * ac + pags.u_to_x.gamma_ac * ac
    xi_ac, br_ac = quad_resolve(a_ac, c_ac, 2.0 * b)

    a_dc = Mf * pags.f_to_x.gamma_dc
    c_dc = Mf * pags.f_to_x.gamma_dc * (xi_ac * xi_ac + rho_sq) + pags.u_to_x.gamma_dc * dc
    xi_dc, br_dc = quad_resolve(a_dc, c_dc, b)

    xi_sq = xi_dc * xi_dc + xi_ac * xi_ac
    eta_dc = (pags.u_to_y.gamma_dc * dc
              + Mf * pags.f_to_y.gamma_dc * rho_sq
              + (Mf * pags.f_to_y.gamma_dc + Mg) * xi_sq)
    eta_ac = (pags.u_to_y.gamma_ac * ac
              + Mf * pags.f_to_y.gamma_ac * 2.0 * ac * ac
              + (Mf * pags.f_to_y.gamma_ac + Mg) * 2.0 * xi_ac * xi_ac)
    return NonlinearPagResult(float(eta_dc), float(eta_ac), br_dc, br_ac,
                              b, float(xi_dc), float(xi_ac))


def nonlinear_pag_special(nsys: NonlinearSystem, T: float, N: int, b: float,
                          rho_u: RhoVector, seed: int = 0) -> NonlinearPagResult:
    """Conservative periodic gain for the output-Lurie structure.

    Works on the two output channels only; ``b`` bounds the norm of the
    linear output over the invariant set (the classical gain at level
    ||rho_u||_1).
    """
    if nsys.structure is not Structure.OUTPUT_LURIE:
        raise StructureMismatchError("system structure is not output-Lurie")
    _check_nonlinear_inputs(nsys, b, rho_u)
    if rho_u.one_norm == 0:
        return NonlinearPagResult(0.0, 0.0, Branch.ROOT, Branch.ROOT, b)
    lp_uy = linear_pag(nsys.linear, "B", T, N, seed)
    lp_fy = linear_pag(nsys.linear, "F", T, N, seed)
    Mf = nsys.M_f
    dc, ac = rho_u.dc, rho_u.ac

    a_ac = 2.0 * Mf * lp_fy.gamma_ac
    c_ac = 2.0 * Mf * lp_fy.gamma_ac * ac * ac + lp_uy.gamma_ac * ac
    eta_ac, br_ac = quad_resolve(a_ac, c_ac, 2.0 * b)

    a_dc = Mf * lp_fy.gamma_dc
    c_dc = Mf * lp_fy.gamma_dc * (eta_ac * eta_ac + dc * dc + ac * ac) + lp_uy.gamma_dc * dc
    eta_dc, br_dc = quad_resolve(a_dc, c_dc, b)
    return NonlinearPagResult(float(eta_dc), float(eta_ac), br_dc, br_ac, b)


def mu_slope(pag, level: float, composition: Composition) -> float:
    """Average slope of the bound's 1-norm over inputs of one composition.

    ``pag`` is either a callable mapping RhoVector -> 2-vector, or a
    NonlinearPagResult already evaluated at the composition's rho.
    """
    if level <= 0:
        raise ValueError("level must be positive")
    if callable(pag):
        vec = np.asarray(pag(composition_rho(level, composition)), dtype=float)
    else:
        vec = pag.as_array()
    return float((vec[0] + vec[1]) / level)


def sharpness_compare(pag_bound, ag_bound: float):
    """Compare the bound 1-norms; returns (verdict, pag 1-norm, ag bound)."""
    vec = pag_bound.as_array() if hasattr(pag_bound, "as_array") else np.asarray(pag_bound)
    pag_sum = float(np.sum(vec))
    if pag_sum < ag_bound:
        verdict = Sharpness.PAG_SHARPER
    elif pag_sum > ag_bound:
        verdict = Sharpness.AG_SHARPER
    else:
        verdict = Sharpness.TIE
    return verdict, pag_sum, float(ag_bound)
