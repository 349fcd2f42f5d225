"""Closed-form decay of the Bijl-Jastrow ground state.

For a gas of N particles with coupling lambda the survival probability after
any trap protocol is S(t) = [alpha(t) b(t)]^-beta with beta = N[1 + lambda(N-1)].
"""
import cmath
import math
import sys
from dataclasses import dataclass

from core.errors import DomainError
from core.ermakov import ScalingState
from utils import logging

_LOG_TINY = math.log(sys.float_info.min)


@dataclass(frozen=True)
class SystemParams:
    n: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"Particle number must be an integer >= 1, got {self.n}")
        object.__setattr__(self, 'n', int(self.n))
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise DomainError(f"Coupling lambda must be finite and >= 0, got {self.lam}")

    @property
    def beta(self) -> float:
        return self.n * (1.0 + self.lam * (self.n - 1))


@dataclass(frozen=True)
class DecayQuantities:
    survival: float
    log_survival: float
    amplitude: complex
    alpha: float
    asymptote: float
    crossover_time: float
    underflow: bool = False


def exponent_beta(params: SystemParams) -> float:
    return params.beta


def alpha(state: ScalingState) -> float:
    """alpha = 1/2 [(1 + 1/b^2)^2 + (b'/b)^2]^(1/2); unity at t = 0, never below 1/2."""
    b = state.b
    if not b > 0.0:
        raise DomainError(f"alpha needs b > 0, got {b}")
    return 0.5 * math.hypot(1.0 + 1.0 / (b * b), state.b_dot / b)


def log_survival(params: SystemParams, state: ScalingState) -> float:
    return -params.beta * math.log(alpha(state) * state.b)


def survival_probability(params: SystemParams, state: ScalingState) -> float:
    """[alpha b]^-beta; for N = 1 this is (alpha b)^-1."""
    log_s = log_survival(params, state)
    if log_s < _LOG_TINY:
        return 0.0
    return math.exp(log_s)


def survival_amplitude(params: SystemParams, state: ScalingState, gauge_away_phase: bool = False) -> complex:
    """A(t) = [(b + 1/b - i b')/2]^(-beta/2) exp(-i beta tau / 2).

    The phase is assembled unwrapped: the base has a positive real part, so its
    principal argument is continuous, and the tau term is added without any
    reduction mod 2 pi. Gauging multiplies by exp(+i beta tau / 2).
    """
    b = state.b
    if not b > 0.0:
        raise DomainError(f"Survival amplitude needs b > 0, got {b}")
    if not math.isfinite(state.tau):
        raise DomainError(f"Conformal time must be finite, got {state.tau}")
    half_beta = 0.5 * params.beta
    base = complex(b + 1.0 / b, -state.b_dot)
    log_modulus = -half_beta * (math.log(abs(base)) - math.log(2.0))
    phase = -half_beta * cmath.phase(base)
    if not gauge_away_phase:
        phase -= half_beta * state.tau
    if log_modulus < _LOG_TINY:
        return 0j
    return cmath.rect(math.exp(log_modulus), phase)


def dual_survival(n: int, gamma: float, lam: float, state: ScalingState) -> float:
    """[S_{N,gamma}]^(1-lam) [S_{N,gamma+1}]^lam, which equals S_{N,gamma+lam}."""
    log_lower = log_survival(SystemParams(n, gamma), state)
    log_upper = log_survival(SystemParams(n, gamma + 1.0), state)
    return math.exp((1.0 - lam) * log_lower + lam * log_upper)


def energy_variance(params: SystemParams) -> float:
    """Delta H = sqrt(beta) / (2 sqrt 2) of the initial state."""
    return math.sqrt(params.beta) / (2.0 * math.sqrt(2.0))


def short_time_series(params: SystemParams, t: float) -> float:
    if not t >= 0.0:
        raise DomainError(f"Short-time series needs t >= 0, got {t}")
    return 1.0 - params.beta * t * t / 8.0


def long_time_asymptote(params: SystemParams, t: float) -> float:
    if not t > 0.0:
        raise DomainError(f"Long-time asymptote needs t > 0, got {t}")
    log_value = params.beta * math.log(2.0 / t)
    return 0.0 if log_value < _LOG_TINY else math.exp(log_value)


def crossover_time(params: SystemParams) -> float:
    """Onset scale sqrt(2 beta) of the power law (a 'much greater than' threshold)."""
    return math.sqrt(2.0 * params.beta)


def sudden_quench_survival(params: SystemParams, t: float) -> float:
    # alpha b = sqrt(1 + t^2/4) on the sudden quench
    return math.exp(-0.5 * params.beta * math.log1p(0.25 * t * t))


def decay_quantities(params: SystemParams, state: ScalingState) -> DecayQuantities:
    log_s = log_survival(params, state)
    underflow = log_s < _LOG_TINY
    if underflow:
        logging.log_warning(f"Survival underflows at t={state.t:g} (log S = {log_s:.6g}); reporting 0")
    return DecayQuantities(
        survival=0.0 if underflow else math.exp(log_s),
        log_survival=log_s,
        amplitude=survival_amplitude(params, state),
        alpha=alpha(state),
        asymptote=long_time_asymptote(params, state.t) if state.t > 0.0 else math.inf,
        crossover_time=crossover_time(params),
        underflow=underflow,
    )
