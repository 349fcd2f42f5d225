"""State-reconstruction decomposition of the survival probability.

The composition A(t) = A(t - s) A(s) + M(t, s) defines the memory amplitude M
for a split time s in [0, t]. Squaring it,

    S(t) = S(t - s) S(s) + |M|^2 + 2 Re[M* A(t - s) A(s)],

separates surviving at s from decaying and being rebuilt, plus their
interference. The composition uses U(t, s) = U(t - s, 0), so K(t) must be
constant over [0, t].
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

from core.ermakov import ScalingTrajectory
from core.errors import DomainError
from core.survival import SystemParams, survival_amplitude, survival_probability
from utils.parallel import parallel_map


@dataclass(frozen=True)
class DecompositionTerms:
    classical: float
    memory: float
    interference: float
    total: float

    def normalized(self) -> "DecompositionTerms":
        scale = self.total
        if scale == 0.0:
            raise DomainError("S(t) underflows; the normalised decomposition is undefined")
        return DecompositionTerms(self.classical / scale, self.memory / scale,
                                  self.interference / scale, 1.0)


def _check_split(traj: ScalingTrajectory, t: float, tau_split: float):
    if not (0.0 <= tau_split <= t):
        raise DomainError(f"Split time must lie in [0, t]; got tau={tau_split}, t={t}")
    if t > traj.grid[-1]:
        raise DomainError(f"Trajectory ends at {traj.grid[-1]:g}, before t={t:g}")
    if not traj.protocol.is_constant_on(0.0, t):
        raise DomainError(f"Protocol {traj.protocol.describe()} changes K inside [0, {t:g}]; "
                          "the composition needs a time-independent Hamiltonian")


def _amplitudes(params: SystemParams, traj: ScalingTrajectory, t: float, tau_split: float,
                gauge: bool) -> Tuple[complex, complex, complex]:
    a_t = survival_amplitude(params, traj.state_at(t), gauge)
    a_rest = survival_amplitude(params, traj.state_at(t - tau_split), gauge)
    a_split = survival_amplitude(params, traj.state_at(tau_split), gauge)
    return a_t, a_rest, a_split


def memory_amplitude(params: SystemParams, traj: ScalingTrajectory, t: float, tau_split: float,
                     gauge: bool = False) -> complex:
    _check_split(traj, t, tau_split)
    a_t, a_rest, a_split = _amplitudes(params, traj, t, tau_split, gauge)
    return a_t - a_rest * a_split


def decompose(params: SystemParams, traj: ScalingTrajectory, t: float, tau_split: float,
              gauge: bool = False) -> DecompositionTerms:
    _check_split(traj, t, tau_split)
    a_t, a_rest, a_split = _amplitudes(params, traj, t, tau_split, gauge)
    history = a_rest * a_split
    memory = a_t - history
    return DecompositionTerms(
        classical=survival_probability(params, traj.state_at(t - tau_split))
        * survival_probability(params, traj.state_at(tau_split)),
        memory=abs(memory) ** 2,
        interference=2.0 * (memory.conjugate() * history).real,
        total=survival_probability(params, traj.state_at(t)),
    )


def _scan_point(task) -> Tuple[float, DecompositionTerms]:
    params, traj, t, tau, gauge = task
    return tau, decompose(params, traj, t, tau, gauge).normalized()


def decomposition_scan(params: SystemParams, traj: ScalingTrajectory, t: float, tau_grid: Sequence[float],
                       gauge: bool = False, workers: int = 1) -> List[Tuple[float, DecompositionTerms]]:
    """Terms normalised by S(t) along the split grid, one row per split time, in grid order."""
    if len(tau_grid) == 0:
        raise DomainError("Decomposition scan needs a non-empty split grid")
    tasks = [(params, traj, t, float(tau), gauge) for tau in tau_grid]
    return parallel_map(_scan_point, tasks, workers)
