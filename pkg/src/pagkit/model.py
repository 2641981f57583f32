"""Core data types: state-space systems, sampled periodic signals, AC/DC split.

Signals live on a uniform left-endpoint grid with N samples per period; index
arithmetic wraps modulo N.  The periodic mean on this grid is the plain
arithmetic mean (exact for the periodic average), which keeps the AC/DC
decomposition free of quadrature artifacts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import StructureMismatchError

DEFAULT_GRID_SIZE = 4096


def _readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


class Structure(enum.Enum):
    """How the nonlinearity enters the dynamics."""

    GENERAL = "general"          # f depends on the full state x
    OUTPUT_LURIE = "output_lurie"  # f depends only on (y, u) with y = Cx


class Composition(enum.Enum):
    """AC/DC makeup of a test input at magnitude level l."""

    PURE_AC = "pure_ac"   # (dc, ac) = (0, l)
    SPLIT = "split"       # (dc, ac) = (l/2, l/2)
    PURE_DC = "pure_dc"   # (dc, ac) = (l, 0)


@dataclass(frozen=True)
class Nonlinearity:
    """Registry entry: vectorized evaluation of f and its state Jacobian.

    ``f(z, u)`` maps (..., pz) x (..., m) -> (..., q) where z is the linear
    output y when ``output_lurie`` else the full state x.  ``jac_z`` returns
    d f/d z with shape (..., q, pz).
    """

    name: str
    output_lurie: bool
    f: Callable
    jac_z: Callable


def _pll_f(y, u):
    # y: (..., 1), u: (..., 2) -> (..., 1)
    th = y[..., 0]
    out = th - np.sin(th) + u[..., 0] * (np.cos(th) - 1.0) + u[..., 1] * np.sin(th)
    return out[..., None]


def _pll_jac_y(y, u):
    th = y[..., 0]
    d = 1.0 - np.cos(th) - u[..., 0] * np.sin(th) + u[..., 1] * np.cos(th)
    return d[..., None, None]


NONLINEARITIES = {
    "none": None,
    "pll": Nonlinearity("pll", output_lurie=True, f=_pll_f, jac_z=_pll_jac_y),
}


@dataclass(frozen=True)
class StateSpace:
    """Matrices (A, B, C, F) of the linear part: dx/dt = Ax + Bu + F f, y = Cx."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: Optional[np.ndarray] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.asarray(self.C, dtype=float).reshape(-1, n)
        F = self.F
        F = np.zeros((n, 1)) if F is None else np.asarray(F, dtype=float).reshape(n, -1)
        object.__setattr__(self, "A", _readonly(A))
        object.__setattr__(self, "B", _readonly(B))
        object.__setattr__(self, "C", _readonly(C))
        object.__setattr__(self, "F", _readonly(F))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def q(self) -> int:
        return self.F.shape[1]

    def input_matrix(self, input_map: str) -> np.ndarray:
        """Select the injection matrix: "B" for the input, "F" for the nonlinearity."""
        if input_map == "B":
            return self.B
        if input_map == "F":
            return self.F
        raise ValueError(f"input_map must be 'B' or 'F', got {input_map!r}")


@dataclass(frozen=True)
class NonlinearSystem:
    """A stable linear core plus a registered nonlinearity with its constants.

    M_f and M_g are the quadratic-remainder constants of the nonlinearity;
    u_max bounds admissible inputs (sup norm).  For OUTPUT_LURIE structure the
    nonlinearity must evaluate on (y, u) only and M_g must vanish.
    """

    linear: StateSpace
    nonlinearity: str = "none"
    params: tuple = ()
    M_f: float = 0.0
    M_g: float = 0.0
    structure: Structure = Structure.GENERAL
    u_max: float = np.inf

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(f"unknown nonlinearity {self.nonlinearity!r}")
        if self.M_f < 0 or self.M_g < 0:
            raise ValueError("M_f and M_g must be nonnegative")
        if self.u_max <= 0:
            raise ValueError("u_max must be positive")
        if self.nonlinearity == "none" and (self.M_f != 0 or self.M_g != 0):
            raise ValueError("nonlinearity 'none' requires M_f = M_g = 0")
        entry = NONLINEARITIES[self.nonlinearity]
        if self.structure is Structure.OUTPUT_LURIE:
            if entry is not None and not entry.output_lurie:
                raise StructureMismatchError(
                    f"nonlinearity {self.nonlinearity!r} does not evaluate on (y, u)"
                )
            if self.M_g != 0:
                raise ValueError("OUTPUT_LURIE structure requires M_g = 0")

    @property
    def entry(self) -> Optional[Nonlinearity]:
        return NONLINEARITIES[self.nonlinearity]


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled T-periodic vector signal: values[k] = f(k T / N)."""

    T: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("values must be an N x d array with N >= 2")
        if not self.T > 0:
            raise ValueError("period T must be positive")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N) * self.dt


@dataclass(frozen=True)
class RhoVector:
    """DC magnitude and AC sup-magnitude of a periodic signal."""

    dc: float
    ac: float

    def __post_init__(self):
        if self.dc < 0 or self.ac < 0:
            raise ValueError("rho components must be nonnegative")

    @property
    def one_norm(self) -> float:
        return self.dc + self.ac

    def as_array(self) -> np.ndarray:
        return np.array([self.dc, self.ac])


@dataclass(frozen=True)
class GainRow:
    """One period's worth of gain data (nonlinear columns optional)."""

    T: float
    gamma_dc: float
    gamma_ac_exact: float
    gamma_ac_conservative: float
    ag_slope: float
    freq_resp_norm: float
    eta_dc: Optional[float] = None
    eta_ac: Optional[float] = None
    mu: Optional[float] = None


@dataclass(frozen=True)
class GainCurve:
    """Rows of per-period gains, strictly increasing in T."""

    rows: tuple = field(default_factory=tuple)

    def __post_init__(self):
        Ts = [r.T for r in self.rows]
        if any(b <= a for a, b in zip(Ts, Ts[1:])):
            raise ValueError("GainCurve rows must be sorted by strictly increasing T")

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)


def acdc_decompose(s: SampledSignal):
    """Split a periodic signal into its period mean and zero-mean remainder.

    Returns ``(dc, ac)`` where ``dc`` is the d-vector grid mean and ``ac`` is
    a SampledSignal with ``ac.values[k] = s.values[k] - dc``; the grid mean of
    ``ac`` is zero to machine precision.
    """
    dc = s.values.mean(axis=0)
    ac = SampledSignal(s.T, s.values - dc)
    return dc, ac


def composition_rho(level: float, composition: Composition) -> RhoVector:
    """The (dc, ac) magnitude pair of a composition at level ``level``."""
    if composition is Composition.PURE_AC:
        return RhoVector(0.0, level)
    if composition is Composition.SPLIT:
        return RhoVector(level / 2.0, level / 2.0)
    return RhoVector(level, 0.0)


def rho_of(s: SampledSignal) -> RhoVector:
    """Measure (|mean|, sup |deviation|) of a sampled periodic signal.

    Both entries use the Euclidean norm across the signal's d components; the
    sup is the maximum over the sample grid.
    """
    dc = s.values.mean(axis=0)
    dev = s.values - dc
    return RhoVector(
        dc=float(np.linalg.norm(dc)),
        ac=float(np.max(np.linalg.norm(dev, axis=1))),
    )
