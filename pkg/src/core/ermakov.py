"""Scaling-factor dynamics of the released trap.

The whole many-body evolution is carried by b(t), its velocity and the
conformal time tau(t) = int_0^t dt'/b^2, driven by the Ermakov equation

    b'' + K(t) b = b^-3,    b(0) = 1, b'(0) = 0,

with K(t) = [omega(t)/omega_0]^2 the trap schedule. Closed forms exist for the
sudden quench and for a release after a delay; anything else is integrated.
"""
import math
from dataclasses import dataclass, field
from enum import Enum, auto
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from config.config_handler import ConfigHandler
from core.errors import DomainError, IntegrityError, SolverError
from utils import logging


class ProtocolKind(Enum):
    SUDDEN_QUENCH = auto()     # K = 0 for t >= 0
    DELAYED_RELEASE = auto()   # K = 1 until t0, then 0
    TABULATED = auto()         # piecewise linear K through (t, k) knots


@dataclass(frozen=True)
class FrequencyProtocol:
    kind: ProtocolKind
    t0: float = 0.0
    times: Tuple[float, ...] = ()
    k_values: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == ProtocolKind.DELAYED_RELEASE:
            if not (math.isfinite(self.t0) and self.t0 >= 0.0):
                raise DomainError(f"Release time must be finite and >= 0, got {self.t0}")
        if self.kind == ProtocolKind.TABULATED:
            times = np.asarray(self.times, dtype=float)
            ks = np.asarray(self.k_values, dtype=float)
            if times.ndim != 1 or len(times) == 0 or len(times) != len(ks):
                raise DomainError("Tabulated protocol needs matching, non-empty t and k columns")
            if not (np.all(np.isfinite(times)) and np.all(np.isfinite(ks))):
                raise DomainError("Tabulated protocol contains non-finite values")
            if np.any(np.diff(times) <= 0.0):
                raise DomainError("Tabulated protocol times must be strictly increasing")
            if np.any(ks < 0.0):
                logging.log_warning("Tabulated protocol has K < 0 (inverted trap); this regime is experimental")

    @classmethod
    def sudden_quench(cls) -> "FrequencyProtocol":
        return cls(ProtocolKind.SUDDEN_QUENCH)

    @classmethod
    def delayed_release(cls, t0: float) -> "FrequencyProtocol":
        return cls(ProtocolKind.DELAYED_RELEASE, t0=float(t0))

    @classmethod
    def tabulated(cls, times: Sequence[float], k_values: Sequence[float]) -> "FrequencyProtocol":
        return cls(ProtocolKind.TABULATED,
                   times=tuple(float(t) for t in times),
                   k_values=tuple(float(k) for k in k_values))

    @property
    def is_analytic(self) -> bool:
        return self.kind in (ProtocolKind.SUDDEN_QUENCH, ProtocolKind.DELAYED_RELEASE)

    def k(self, t: float) -> float:
        if self.kind == ProtocolKind.SUDDEN_QUENCH:
            return 0.0
        if self.kind == ProtocolKind.DELAYED_RELEASE:
            return 1.0 if t < self.t0 else 0.0
        return float(np.interp(t, self.times, self.k_values))

    def breakpoints(self, t_end: float) -> List[float]:
        """Times in (0, t_end) where K or its slope jumps."""
        if self.kind == ProtocolKind.DELAYED_RELEASE:
            return [self.t0] if 0.0 < self.t0 < t_end else []
        if self.kind == ProtocolKind.TABULATED:
            return [t for t in self.times if 0.0 < t < t_end]
        return []

    def is_constant_on(self, t_start: float, t_end: float) -> bool:
        if self.kind == ProtocolKind.SUDDEN_QUENCH:
            return True
        if self.kind == ProtocolKind.DELAYED_RELEASE:
            return t_end <= self.t0 or t_start >= self.t0
        probes = [t_start, t_end] + [t for t in self.times if t_start < t < t_end]
        values = [self.k(t) for t in probes]
        return max(values) == min(values)

    def describe(self) -> str:
        if self.kind == ProtocolKind.DELAYED_RELEASE:
            return f"delayed:{self.t0:g}"
        if self.kind == ProtocolKind.TABULATED:
            return f"tabulated[{len(self.times)} knots]"
        return "sudden"


def protocol_from_csv(path: str) -> FrequencyProtocol:
    try:
        df = pd.read_csv(path)
    except ValueError as e:
        # ParserError and EmptyDataError both derive from ValueError
        raise DomainError(f"{path}: unreadable protocol table ({e})") from e
    if list(df.columns[:2]) != ['t', 'k']:
        raise DomainError(f"{path}: expected a 't,k' header, found {','.join(map(str, df.columns))}")
    try:
        times, k_values = df['t'].to_numpy(dtype=float), df['k'].to_numpy(dtype=float)
    except ValueError as e:
        raise DomainError(f"{path}: non-numeric protocol entries ({e})") from e
    return FrequencyProtocol.tabulated(times, k_values)


def protocol_from_spec(spec: str) -> FrequencyProtocol:
    name, _, arg = spec.partition(':')
    if name == 'sudden' and not arg:
        return FrequencyProtocol.sudden_quench()
    if name == 'delayed':
        try:
            return FrequencyProtocol.delayed_release(float(arg))
        except ValueError:
            raise DomainError(f"Bad release time in protocol '{spec}'")
    if name == 'tabulated' and arg:
        return protocol_from_csv(arg)
    raise DomainError(f"Unknown protocol '{spec}' (use sudden, delayed:T0 or tabulated:PATH)")


@dataclass(frozen=True)
class ScalingState:
    t: float
    b: float
    b_dot: float
    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0.0):
            raise DomainError(f"Scaling factor must be finite and > 0, got b={self.b} at t={self.t}")


INITIAL_STATE = ScalingState(t=0.0, b=1.0, b_dot=0.0, tau=0.0)


@dataclass(frozen=True)
class SolverOptions:
    method: str = 'RK45'
    rtol: float = 1.0e-9
    atol: float = 1.0e-10
    max_step: Optional[float] = None
    refinement: int = 8

    @classmethod
    def from_config(cls) -> "SolverOptions":
        cfg = ConfigHandler()
        return cls(method=cfg.get('solver', 'method'),
                   rtol=cfg.get('solver', 'rtol'),
                   atol=cfg.get('solver', 'atol'),
                   refinement=cfg.get('solver', 'refinement'))


@dataclass(frozen=True)
class SolverMeta:
    method: str
    step_policy: str
    max_residual: float


@dataclass(frozen=True, eq=False)
class ScalingTrajectory:
    protocol: FrequencyProtocol
    grid: np.ndarray
    states: Tuple[ScalingState, ...]
    solver_meta: SolverMeta = field(default_factory=lambda: SolverMeta('closed-form', 'exact', 0.0))

    @property
    def b(self) -> np.ndarray:
        return np.array([s.b for s in self.states])

    @property
    def b_dot(self) -> np.ndarray:
        return np.array([s.b_dot for s in self.states])

    @property
    def tau(self) -> np.ndarray:
        return np.array([s.tau for s in self.states])

    @cached_property
    def _splines(self):
        b, b_dot = self.b, self.b_dot
        k = np.array([self.protocol.k(t) for t in self.grid])
        b_ddot = -k * b + b ** -3
        return (CubicHermiteSpline(self.grid, b, b_dot),
                CubicHermiteSpline(self.grid, b_dot, b_ddot),
                CubicHermiteSpline(self.grid, self.tau, b ** -2))

    def state_at(self, t: float) -> ScalingState:
        """State at any time inside the grid span."""
        if not (self.grid[0] <= t <= self.grid[-1]):
            raise DomainError(f"t={t} outside trajectory span [{self.grid[0]}, {self.grid[-1]}]")
        i = int(np.searchsorted(self.grid, t))
        if i < len(self.grid) and self.grid[i] == t:
            return self.states[i]
        if self.protocol.is_analytic:
            return analytic_state(self.protocol, t)
        spline_b, spline_v, spline_tau = self._splines
        return ScalingState(t=float(t), b=float(spline_b(t)), b_dot=float(spline_v(t)),
                            tau=float(spline_tau(t)))


def sudden_quench_scaling(t: float) -> ScalingState:
    if not t >= 0.0:
        raise DomainError(f"Sudden quench is defined for t >= 0, got t={t}")
    b = math.hypot(1.0, t)
    return ScalingState(t=t, b=b, b_dot=t / b, tau=math.atan(t))


def delayed_release_scaling(b0: float, v0: float, t0: float, t: float, tau0: float = 0.0) -> ScalingState:
    """Free expansion after the trap is switched off at t0 with b(t0)=b0, b'(t0)=v0.

    b^2 = (b0 + v0 s)^2 + s^2/b0^2 with s = t - t0; the conformal time follows as
    tau0 + atan(A s + b0 v0) - atan(b0 v0) with A = v0^2 + 1/b0^2.
    """
    if not b0 > 0.0:
        raise DomainError(f"Initial scaling factor must be > 0, got b0={b0}")
    if not t >= t0:
        raise DomainError(f"Delayed release needs t >= t0, got t={t} < t0={t0}")
    s = t - t0
    slope_sq = v0 * v0 + 1.0 / (b0 * b0)
    b = math.sqrt((b0 + v0 * s) ** 2 + (s / b0) ** 2)
    b_dot = (slope_sq * s + b0 * v0) / b
    tau = tau0 + math.atan(slope_sq * s + b0 * v0) - math.atan(b0 * v0)
    return ScalingState(t=t, b=b, b_dot=b_dot, tau=tau)


def analytic_state(protocol: FrequencyProtocol, t: float) -> ScalingState:
    if protocol.kind == ProtocolKind.SUDDEN_QUENCH:
        return sudden_quench_scaling(t)
    if protocol.kind == ProtocolKind.DELAYED_RELEASE:
        if t < 0.0:
            raise DomainError(f"Negative time t={t}")
        if t < protocol.t0:
            # Trap still on: the ground state is stationary
            return ScalingState(t=t, b=1.0, b_dot=0.0, tau=t)
        return delayed_release_scaling(1.0, 0.0, protocol.t0, t, tau0=protocol.t0)
    raise DomainError(f"No closed form for protocol {protocol.describe()}; use solve_scaling")


def _validate_grid(grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise DomainError("Time grid must be a non-empty 1-D sequence")
    if grid[0] != 0.0:
        raise DomainError(f"Time grid must start at 0, starts at {grid[0]}")
    if not np.all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0.0):
        raise DomainError("Time grid must be finite and strictly increasing")
    return grid


def analytic_trajectory(protocol: FrequencyProtocol, grid: Sequence[float]) -> ScalingTrajectory:
    grid = _validate_grid(grid)
    states = tuple(analytic_state(protocol, float(t)) for t in grid)
    return ScalingTrajectory(protocol=protocol, grid=grid, states=states)


def _second_difference(t: np.ndarray, b: np.ndarray) -> np.ndarray:
    h_minus = t[1:-1] - t[:-2]
    h_plus = t[2:] - t[1:-1]
    return 2.0 * (h_minus * b[2:] - (h_minus + h_plus) * b[1:-1] + h_plus * b[:-2]) / (
        h_minus * h_plus * (h_minus + h_plus))


def _residual(t: np.ndarray, b: np.ndarray, k: Callable[[float], float]) -> np.ndarray:
    kt = np.array([k(x) for x in t[1:-1]])
    return np.abs(_second_difference(t, b) + kt * b[1:-1] - b[1:-1] ** -3)


def ermakov_residual(traj: ScalingTrajectory) -> np.ndarray:
    """|b'' + K b - b^-3| at interior grid points, b'' by centered differences."""
    if len(traj.grid) < 5:
        raise DomainError(f"Residual needs at least 5 grid points, got {len(traj.grid)}")
    return _residual(traj.grid, traj.b, traj.protocol.k)


def _segment_k(protocol: FrequencyProtocol, t_start: float, t_end: float) -> Callable[[float], float]:
    if protocol.kind == ProtocolKind.TABULATED:
        return protocol.k
    # Piecewise constant: evaluate inside the piece so the jump at t0 is never straddled
    k_const = protocol.k(0.5 * (t_start + t_end))
    return lambda t: k_const


def solve_scaling(protocol: FrequencyProtocol, grid: Sequence[float],
                  opts: Optional[SolverOptions] = None) -> ScalingTrajectory:
    """Integrate the Ermakov equation with tau as a third state variable.

    The interval is cut at every discontinuity of K (or of its slope) and each
    piece is integrated separately, so the embedded Runge-Kutta step control
    never has to resolve a jump.
    """
    grid = _validate_grid(grid)
    opts = opts or SolverOptions.from_config()
    t_end = float(grid[-1])
    edges = [0.0] + protocol.breakpoints(t_end) + [t_end]

    values = np.empty((len(grid), 3))
    values[0] = (1.0, 0.0, 0.0)
    y = np.array([1.0, 0.0, 0.0])
    max_residual = 0.0

    for t_start, t_stop in zip(edges[:-1], edges[1:]):
        if t_stop <= t_start:
            continue
        k = _segment_k(protocol, t_start, t_stop)

        def rhs(t, state, k=k):
            b, b_dot, _ = state
            return [b_dot, -k(t) * b + b ** -3, b ** -2]

        def collapse(t, state):
            return state[0]
        collapse.terminal = True
        collapse.direction = -1

        sol = solve_ivp(rhs, (t_start, t_stop), y, method=opts.method, rtol=opts.rtol, atol=opts.atol,
                        max_step=opts.max_step or np.inf, dense_output=True, events=collapse)
        if sol.status == 1:
            raise IntegrityError(f"Scaling factor reached zero at t={sol.t_events[0][0]:.6g}")
        if sol.status != 0:
            raise SolverError(f"Ermakov integration failed on [{t_start:g}, {t_stop:g}]: {sol.message}",
                              last_good_time=float(sol.t[-1]))

        mask = (grid > t_start) & (grid <= t_stop)
        if np.any(mask):
            values[mask] = sol.sol(grid[mask]).T

        count = max(int(np.count_nonzero(mask)), 1) * opts.refinement
        fine = np.linspace(t_start, t_stop, max(count, 4) + 1)
        max_residual = max(max_residual, float(np.max(_residual(fine, sol.sol(fine)[0], k))))

        y = sol.y[:, -1]
        logging.log_debug(f"Segment [{t_start:g}, {t_stop:g}] integrated in {sol.nfev} evaluations")

    if np.any(values[:, 0] <= 0.0):
        bad = grid[np.argmax(values[:, 0] <= 0.0)]
        raise IntegrityError(f"Scaling factor not positive at t={bad:g}")
    if np.any(np.diff(values[:, 2]) < 0.0):
        raise IntegrityError("Conformal time decreased along the trajectory")

    states = tuple(ScalingState(t=float(t), b=float(v[0]), b_dot=float(v[1]), tau=float(v[2]))
                   for t, v in zip(grid, values))
    meta = SolverMeta(method=opts.method,
                      step_policy=f"adaptive rtol={opts.rtol:g} atol={opts.atol:g}",
                      max_residual=max_residual)
    return ScalingTrajectory(protocol=protocol, grid=grid, states=states, solver_meta=meta)
