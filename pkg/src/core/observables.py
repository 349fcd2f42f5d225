"""Decay observables beyond the survival probability.

The non-escape probability P(t) that all N particles stay inside
[-a/2, a/2] is a many-body quantity and inherits the t^-beta law of S(t).
The one-body integrated density p(t) comes from the Wigner semicircle and
decays as 1/t whatever N and lambda are. The semicircle is the large-N
profile; for small N it is an approximation.
"""
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from core.ensembles import mehta_constant, selberg
from core.ermakov import ScalingState
from core.errors import DomainError
from core.oracle import nonescape_quadrature
from core.survival import SystemParams
from utils import logging

# "b much greater than sqrt(lambda) a" is read as a factor of ten
_ASYMPTOTE_MARGIN = 10.0


@dataclass(frozen=True)
class RegionSpec:
    a: float

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a)):
            raise DomainError(f"Region width must be finite and > 0, got a={self.a}")

    @property
    def bounds(self):
        return -0.5 * self.a, 0.5 * self.a


def _check_state(state: ScalingState):
    if not state.b > 0.0:
        raise DomainError(f"Scaling factor must be > 0, got b={state.b}")


def nonescape_probability(params: SystemParams, state: ScalingState, region: RegionSpec,
                          nodes: Optional[int] = None, workers: Optional[int] = 1) -> float:
    """C^-1 b^-beta int_{[-a/2, a/2]^N} exp(-q^2 / b^2) J(q) dq.

    The prefactor is b^-beta, exact under the scaling map; it approaches the
    t^-beta form only asymptotically and stays finite at t = 0.
    """
    _check_state(state)
    estimate = nonescape_quadrature(params, state.b, region.a, nodes, workers)
    if estimate.value <= 0.0:
        return 0.0
    log_p = -mehta_constant(params) - params.beta * math.log(state.b) + math.log(estimate.value)
    return math.exp(log_p)


def nonescape_asymptote(params: SystemParams, state: ScalingState, region: RegionSpec) -> float:
    """C^-1 b^-beta a^beta S_N(1, 1, lambda), valid once the cloud is much wider than the region."""
    _check_state(state)
    if state.b < _ASYMPTOTE_MARGIN * math.sqrt(params.lam) * region.a:
        logging.log_warning(f"Non-escape asymptote used at b={state.b:g}, not much larger than "
                            f"sqrt(lambda) a = {math.sqrt(params.lam) * region.a:g}")
    log_p = (-mehta_constant(params) + params.beta * (math.log(region.a) - math.log(state.b))
             + selberg(params.n, 1.0, 1.0, params.lam))
    return math.exp(log_p)


def density_profile(q: float, state: ScalingState, n_particles: int) -> float:
    _check_state(state)
    x = q / state.b
    if abs(x) > 1.0:
        return 0.0
    return 2.0 * n_particles / math.pi * math.sqrt(1.0 - x * x) / state.b


def integrated_density(state: ScalingState, region: RegionSpec, n_particles: int) -> float:
    """p(t): the semicircle segment over the region, in closed form."""
    _check_state(state)
    x = min(0.5 * region.a / state.b, 1.0)
    return 2.0 * n_particles / math.pi * (x * math.sqrt(1.0 - x * x) + math.asin(x))


def integrated_density_asymptote(state: ScalingState, region: RegionSpec, n_particles: int) -> float:
    if state.t <= 0.0:
        return math.inf
    return 2.0 * region.a * n_particles / (math.pi * state.t)


def log_log_slope(t: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log(values) against log(t)."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    if t.shape != values.shape or len(t) < 2:
        raise DomainError(f"Slope fit needs at least two matching points, got {len(t)} and {len(values)}")
    if np.any(t <= 0.0) or np.any(values <= 0.0):
        raise DomainError("Slope fit needs positive times and values")
    slope, _ = np.polyfit(np.log(t), np.log(values), 1)
    return float(slope)
