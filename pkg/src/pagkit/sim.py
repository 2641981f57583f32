"""Time-domain validation: fixed-step RK4, periodic steady states, input
synthesis (random harmonics, worst-case bang-bang), contraction heuristic.

The integrator is classical RK4 with the input held constant over each grid
step (all stage times use the held value), so the sample grid, the input
grid, and the measurement grid coincide and bang-bang switches align with
steps.  Campaign code integrates whole batches of trials at once; the
per-trial arithmetic is elementwise, so batch results match single-trial
runs bit for bit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import linops, median
from .errors import DivergedError, NoSteadyStateError, UnboundedSuspectError
from .model import (
    DEFAULT_GRID_SIZE,
    Composition,
    NonlinearSystem,
    SampledSignal,
    StateSpace,
    Structure,
    composition_rho,
)

DEFAULT_TOL_PS = 1e-10
DEFAULT_MAX_PERIODS = 20_000


class InputKind(enum.Enum):
    HARMONIC_RANDOM = "harmonic_random"
    BANG_BANG = "bang_bang"
    CUSTOM = "custom"


@dataclass(frozen=True)
class InputSpec:
    """Recipe for a T-periodic input; realized signals are rescaled so the
    DC norm and the AC grid sup hit the caps exactly."""

    kind: InputKind
    T: float
    dc: np.ndarray                      # unit direction (or zeros)
    harmonics: tuple                    # of (order, amplitude m-vec, phase m-vec)
    seed: int
    dc_cap: float
    ac_cap: float


@dataclass(frozen=True)
class Trajectory:
    t0: float
    dt: float
    states: np.ndarray    # (K+1, n), row k at time t0 + k dt
    outputs: np.ndarray   # (K+1, p)


@dataclass(frozen=True)
class PeriodicSteadyState:
    x_hat: SampledSignal
    y_hat: SampledSignal
    periods_used: int


@dataclass
class PssBatchResult:
    """Batched steady states; failed trials carry NaN rows and a status flag."""

    x_hat: np.ndarray          # (batch, N, n)
    y_hat: np.ndarray          # (batch, N, p)
    periods_used: np.ndarray   # (batch,)
    status: list               # per trial: "ok" | "no-pss" | "diverged"


@dataclass(frozen=True)
class ContractionReport:
    """Heuristic logarithmic-norm scan; a negative maximum suggests (but does
    not prove) contraction on the sampled region."""

    max_log_norm: float
    plausibly_contractive: bool
    n_samples: int


class _Stepper:
    """One RK4-with-held-input step of dx/dt = Ax + Bu + F f(., u).

    Linear systems fold the four stages into the exact polynomial update
    x+ = R x + S u; nonlinear systems evaluate the stages directly.
    """

    def __init__(self, nsys: NonlinearSystem, dt: float):
        lin = nsys.linear
        self.dt = dt
        self.At = np.ascontiguousarray(lin.A.T)
        self.Bt = np.ascontiguousarray(lin.B.T)
        self.Ft = np.ascontiguousarray(lin.F.T)
        self.Ct = np.ascontiguousarray(lin.C.T)
        self.entry = nsys.entry
        if self.entry is None:
            # R = sum_{j=0..4} (A dt)^j / j!,  S = (sum_{j=1..4} A^{j-1} dt^j / j!) B
            A = lin.A
            n = lin.n
            R = np.eye(n)
            S = np.zeros((n, n))
            P = np.eye(n)
            fact = 1.0
            for j in range(1, 5):
                fact *= j
                S = S + P * (dt**j / fact)
                P = P @ A
                R = R + P * (dt**j / fact)
            self.Rt = np.ascontiguousarray(R.T)
            self.St = np.ascontiguousarray((S @ lin.B).T)

    def _f_term(self, X, U):
        z = X @ self.Ct if self.entry.output_lurie else X
        return self.entry.f(z, U) @ self.Ft

    def _deriv(self, X, U):
        d = X @ self.At + U @ self.Bt
        if self.entry is not None:
            d = d + self._f_term(X, U)
        return d

    def step(self, X, U):
        """Advance (batch, n) states one grid step under held input (batch, m)."""
        if self.entry is None:
            return X @ self.Rt + U @ self.St
        dt = self.dt
        k1 = self._deriv(X, U)
        k2 = self._deriv(X + 0.5 * dt * k1, U)
        k3 = self._deriv(X + 0.5 * dt * k2, U)
        k4 = self._deriv(X + dt * k3, U)
        return X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _advance_period(stepper: _Stepper, X, U, record: bool = False):
    """Run one period (N steps); optionally record the N left-endpoint states."""
    N = U.shape[1]
    rec = np.empty((X.shape[0], N, X.shape[1])) if record else None
    for j in range(N):
        if record:
            rec[:, j, :] = X
        X = stepper.step(X, U[:, j, :])
    return X, rec


def integrate(nsys: NonlinearSystem, input_signal: SampledSignal,
              x0=None, periods: int = 1) -> Trajectory:
    """Integrate over whole periods of the input; returns the full trajectory.

    Raises DivergedError (with the last finite step index) if the state
    leaves the finite range.
    """
    lin = nsys.linear
    if input_signal.d != lin.m:
        raise ValueError("input dimension does not match B")
    N = input_signal.N
    dt = input_signal.dt
    stepper = _Stepper(nsys, dt)
    x = np.zeros(lin.n) if x0 is None else np.asarray(x0, dtype=float).reshape(lin.n)
    K = periods * N
    states = np.empty((K + 1, lin.n))
    states[0] = x
    X = x[None, :]
    U = input_signal.values
    for k in range(K):
        X = stepper.step(X, U[k % N][None, :])
        if not np.all(np.isfinite(X)):
            raise DivergedError(f"state diverged at step {k + 1}", last_index=k)
        states[k + 1] = X[0]
    outputs = states @ lin.C.T
    return Trajectory(t0=0.0, dt=dt, states=states, outputs=outputs)


def periodic_steady_state_batch(nsys: NonlinearSystem, inputs: np.ndarray, T: float,
                                x0=None, tol_ps: float = DEFAULT_TOL_PS,
                                max_periods: int = DEFAULT_MAX_PERIODS) -> PssBatchResult:
    """Find periodic steady states for a batch of T-periodic inputs.

    ``inputs`` has shape (batch, N, m).  Each trial iterates the period map
    until the endpoint moves by less than tol_ps (relative); its orbit is
    then recorded over one period starting from its own converged endpoint,
    so results equal the single-trial ones exactly.
    """
    lin = nsys.linear
    inputs = np.asarray(inputs, dtype=float)
    batch, N, m = inputs.shape
    if m != lin.m:
        raise ValueError("input dimension does not match B")
    stepper = _Stepper(nsys, T / N)

    X = np.zeros((batch, lin.n)) if x0 is None else np.array(x0, dtype=float).reshape(batch, lin.n)
    prev = X.copy()
    conv_state = np.full((batch, lin.n), np.nan)
    periods_used = np.zeros(batch, dtype=int)
    done = np.zeros(batch, dtype=bool)
    alive = np.ones(batch, dtype=bool)

    for k in range(1, max_periods + 1):
        X, _ = _advance_period(stepper, X, inputs)
        size = np.linalg.norm(X, axis=1)
        # norms square the entries, so they overflow before the state does;
        # either way the trial has left any meaningful range
        finite = np.all(np.isfinite(X), axis=1) & np.isfinite(size)
        newly_dead = alive & ~finite
        if newly_dead.any():
            alive &= finite
            X[~alive] = 0.0  # keep the batch arithmetic finite
            size[~alive] = 0.0
        move = np.linalg.norm(X - prev, axis=1)
        newly = alive & ~done & (move <= tol_ps * (1.0 + size))
        conv_state[newly] = X[newly]
        periods_used[newly] = k
        done |= newly
        if np.all(done | ~alive):
            break
        prev = X.copy()

    status = []
    for i in range(batch):
        if not alive[i]:
            status.append("diverged")
        elif done[i]:
            status.append("ok")
        else:
            status.append("no-pss")

    x_hat = np.full((batch, N, lin.n), np.nan)
    ok = np.array([s == "ok" for s in status])
    if ok.any():
        _, rec = _advance_period(stepper, conv_state[ok], inputs[ok], record=True)
        x_hat[ok] = rec
    y_hat = x_hat @ lin.C.T
    return PssBatchResult(x_hat=x_hat, y_hat=y_hat, periods_used=periods_used, status=status)


def periodic_steady_state(nsys: NonlinearSystem, input_signal: SampledSignal,
                          x0=None, tol_ps: float = DEFAULT_TOL_PS,
                          max_periods: int = DEFAULT_MAX_PERIODS) -> PeriodicSteadyState:
    """Iterate the period map until its fixed point, then record one period."""
    x0b = None if x0 is None else np.asarray(x0, dtype=float)[None, :]
    res = periodic_steady_state_batch(nsys, input_signal.values[None, :, :],
                                      input_signal.T, x0b, tol_ps, max_periods)
    if res.status[0] == "diverged":
        raise DivergedError("trajectory diverged before reaching a steady state")
    if res.status[0] == "no-pss":
        raise NoSteadyStateError(
            f"no steady state within {max_periods} periods (tol_ps={tol_ps:g})")
    return PeriodicSteadyState(
        x_hat=SampledSignal(input_signal.T, res.x_hat[0]),
        y_hat=SampledSignal(input_signal.T, res.y_hat[0]),
        periods_used=int(res.periods_used[0]),
    )


def make_harmonic_spec(T: float, n_harmonics: int, composition: Composition,
                       level: float, seed: int, m: int = 1) -> InputSpec:
    """Draw a random-harmonic input recipe (uniform amplitudes and phases)."""
    rho = composition_rho(level, composition)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal(m)
    nd = np.linalg.norm(d)
    d = d / nd if nd > 0 else np.zeros(m)
    harmonics = tuple(
        (k, rng.uniform(0.0, 1.0, m), rng.uniform(0.0, 2.0 * np.pi, m))
        for k in range(1, n_harmonics + 1)
    )
    return InputSpec(InputKind.HARMONIC_RANDOM, T, d, harmonics, seed, rho.dc, rho.ac)


def realize_input(spec: InputSpec, N: int = DEFAULT_GRID_SIZE) -> SampledSignal:
    """Sample a harmonic recipe on the period grid and enforce its caps."""
    m = spec.dc.shape[0]
    frac = np.arange(N) / N
    ac = np.zeros((N, m))
    for order, amp, phase in spec.harmonics:
        ac += amp * np.cos(2.0 * np.pi * order * frac[:, None] + phase)
    dev = ac - ac.mean(axis=0)
    if spec.ac_cap > 0:
        sup = float(np.max(np.linalg.norm(dev, axis=1)))
        dev = dev * (spec.ac_cap / sup) if sup > 0 else dev
    else:
        dev = np.zeros_like(dev)
    values = spec.dc * spec.dc_cap + dev
    return SampledSignal(spec.T, values)


def random_harmonic_input(T: float, n_harmonics: int, composition: Composition,
                          level: float, seed: int, m: int = 1,
                          N: int = DEFAULT_GRID_SIZE) -> SampledSignal:
    """Seeded sum of harmonics rescaled to hit the composition caps exactly."""
    return realize_input(make_harmonic_spec(T, n_harmonics, composition, level, seed, m), N)


def bangbang_worst_input(sys: StateSpace, input_map: str, T: float, N: int,
                         v: np.ndarray, ac_cap: float) -> SampledSignal:
    """Worst-case zero-mean input aligned with the median-centered wrapped
    impulse response projected on the unit output direction v.

    Samples closer than 1e-12 to the median produce a zero vector (the 0/0
    convention); the residual grid mean is subtracted and the magnitude
    re-capped afterwards.
    """
    v = np.asarray(v, dtype=float).reshape(sys.p)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ValueError("v must be a unit vector")
    grid = linops.periodic_impulse_response(sys, input_map, T, N)
    rows = np.einsum("p,kpm->km", v, grid.H)
    if rows.shape[1] == 1:
        mu = np.array([median.scalar_median(rows[:, 0])])
    else:
        mu = median.geometric_median(rows).mu
    centered = rows - mu
    norms = np.linalg.norm(centered, axis=1)
    safe = norms >= 1e-12
    g = np.zeros_like(centered)
    g[safe] = centered[safe] / norms[safe, None] * ac_cap
    # u(s) = g(-s) on the periodic grid, so that the convolution at t = 0
    # integrates the kernel against its own sign pattern
    idx = (-np.arange(N)) % N
    u = g[idx]
    u = u - u.mean(axis=0)
    if ac_cap > 0:
        sup = float(np.max(np.linalg.norm(u, axis=1)))
        if sup > 0:
            u *= ac_cap / sup
    return SampledSignal(T, u)


def contraction_check(nsys: NonlinearSystem, region_samples: np.ndarray,
                      input_samples: np.ndarray) -> ContractionReport:
    """Scan the symmetric-part spectrum of the closed Jacobian A + F df/dx.

    Heuristic surrogate for a contraction certificate: reports the maximal
    logarithmic norm over the supplied (x, u) samples.
    """
    lin = nsys.linear
    X = np.atleast_2d(np.asarray(region_samples, dtype=float))
    U = np.atleast_2d(np.asarray(input_samples, dtype=float))
    if U.shape[0] != X.shape[0]:
        raise ValueError("region_samples and input_samples must pair up")
    entry = nsys.entry
    worst = -np.inf
    for x, u in zip(X, U):
        J = lin.A
        if entry is not None:
            if entry.output_lurie:
                z = lin.C @ x
                jac = entry.jac_z(z, u) @ lin.C      # (q, p) @ (p, n)
            else:
                jac = entry.jac_z(x, u)
            J = J + lin.F @ jac
        sym = 0.5 * (J + J.T)
        worst = max(worst, float(np.max(np.linalg.eigvalsh(sym))))
    return ContractionReport(max_log_norm=worst, plausibly_contractive=worst < 0.0,
                             n_samples=X.shape[0])


def estimate_b(nsys: NonlinearSystem, level: float, n_trials: int, seed: int,
               T, N: int = DEFAULT_GRID_SIZE, n_harmonics: int = 8,
               safety: float = 1.5) -> float:
    """HEURISTIC invariant-set bound: 1.5 x the largest steady-state sup seen
    over randomized trials cycling all compositions (and periods, if several).

    Measures sup_t |x_hat| for general structure, sup_t |C x_hat| for
    output-Lurie.  Not rigorous; rigorous bounds must come from configuration.
    """
    if n_trials <= 0 or level == 0.0:
        return 0.0
    periods = [float(T)] if np.isscalar(T) else [float(t) for t in T]
    comps = [Composition.PURE_AC, Composition.SPLIT, Composition.PURE_DC]
    m = nsys.linear.m
    worst = 0.0
    for ti, T_i in enumerate(periods):
        specs = []
        for tr in range(n_trials):
            comp = comps[tr % len(comps)]
            s = int(np.random.SeedSequence([seed, ti, tr]).generate_state(1)[0])
            specs.append(make_harmonic_spec(T_i, n_harmonics, comp, level, s, m))
        U = np.stack([realize_input(sp, N).values for sp in specs])
        res = periodic_steady_state_batch(nsys, U, T_i)
        if any(s == "diverged" for s in res.status):
            raise UnboundedSuspectError(f"trial diverged at level {level:g}")
        if any(s != "ok" for s in res.status):
            raise NoSteadyStateError(f"steady state not reached at level {level:g}")
        if nsys.structure is Structure.OUTPUT_LURIE:
            sup = np.max(np.linalg.norm(res.y_hat, axis=2))
        else:
            sup = np.max(np.linalg.norm(res.x_hat, axis=2))
        worst = max(worst, float(sup))
    return safety * worst
