"""Brute-force integrals that certify the closed forms.

Three N-dimensional integrals of the Bijl-Jastrow weight J(q) = prod_{i<j} |q_i - q_j|^(2 lambda):

* the survival overlap  int exp(-z q^2 / 2) J(q) dq,  z = 1 + 1/b^2 - i b'/b,
* the Mehta normalisation  int exp(-q^2) J(q) dq,
* the non-escape integral  int_{[-a/2, a/2]^N} exp(-q^2 / b^2) J(q) dq.

For integer lambda J is a polynomial and tensor Gauss rules converge
spectrally. Otherwise J has kinks on the coalescence planes q_i = q_j; those
integrands use a nested Gauss-Legendre rule whose inner intervals are cut at
the coordinates already fixed by the outer axes, so every piece is smooth.

Quadratures are summed one outer-axis node per block and the block sums are
combined in order with compensated addition, so the result does not depend on
how many workers evaluated the blocks.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from config.config_handler import ConfigHandler
from core.ensembles import mehta_constant
from core.ermakov import ScalingState
from core.errors import CapabilityError, DomainError
from core.survival import SystemParams
from utils import logging
from utils.parallel import parallel_map
from utils.summation import KahanSum

# exp(-45) bounds the Gaussian mass dropped by truncating the real line
_GAUSSIAN_TAIL = 45.0
_MAX_QUADRATURE_N = 4
_MAX_MEHTA_N = 3


class OracleMethod(Enum):
    GAUSS_HERMITE = "GaussHermite"
    SPLIT_LEGENDRE = "SplitLegendre"
    UNIFORM_QUADRATURE = "UniformQuadrature"
    MONTE_CARLO = "MonteCarlo"


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    method: OracleMethod
    evaluations: int
    amplitude: Optional[complex] = None
    seed: Optional[int] = None
    flags: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.std_error < 0.0:
            raise DomainError(f"Standard error must be >= 0, got {self.std_error}")


def is_smooth_coupling(lam: float) -> bool:
    return float(lam).is_integer()


def default_nodes(lam: float, n: int = 1) -> int:
    cfg = ConfigHandler()
    if is_smooth_coupling(lam):
        return cfg.get('oracle', 'nodes_smooth')
    nodes = cfg.get('oracle', 'nodes_kinked')
    # The split rule grows like n! * nodes^n; keep four particles affordable
    return nodes if n <= 3 else nodes // 2


def jastrow(points: np.ndarray, lam: float) -> np.ndarray:
    n_dims = points.shape[1]
    values = np.ones(points.shape[0])
    if lam == 0.0:
        return values
    for i in range(n_dims):
        for j in range(i + 1, n_dims):
            values *= np.abs(points[:, i] - points[:, j]) ** (2.0 * lam)
    return values


def _tensor_points(first: float, first_weight: float, xi: np.ndarray, wi: np.ndarray,
                   n_dims: int) -> Tuple[np.ndarray, np.ndarray]:
    if n_dims == 1:
        return np.array([[first]]), np.array([first_weight])
    axes = np.meshgrid(*([xi] * (n_dims - 1)), indexing='ij')
    weights = np.meshgrid(*([wi] * (n_dims - 1)), indexing='ij')
    points = np.column_stack([np.full(axes[0].size, first)] + [a.ravel() for a in axes])
    w = np.full(axes[0].size, first_weight)
    for wa in weights:
        w = w * wa.ravel()
    return points, w


def _split_points(first: float, first_weight: float, xi: np.ndarray, wi: np.ndarray,
                  n_dims: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nested Gauss-Legendre points with each new axis cut at the earlier coordinates."""
    points = np.array([[first]])
    w = np.array([first_weight])
    n_nodes = len(xi)
    for d in range(1, n_dims):
        k = len(w)
        cuts = np.sort(points, axis=1)
        edges = np.concatenate([np.full((k, 1), lo), cuts, np.full((k, 1), hi)], axis=1)
        half = 0.5 * (edges[:, 1:] - edges[:, :-1])
        mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
        new_x = mid[..., None] + half[..., None] * xi
        new_w = w[:, None, None] * half[..., None] * wi
        points = np.concatenate([np.repeat(points, (d + 1) * n_nodes, axis=0), new_x.reshape(-1, 1)], axis=1)
        w = new_w.reshape(-1)
    return points, w


def _block_sum(task) -> Tuple[complex, int]:
    rule, first, first_weight, xi, wi, n_dims, lo, hi, lam, coef = task
    if rule == 'split':
        points, w = _split_points(first, first_weight, xi, wi, n_dims, lo, hi)
    else:
        points, w = _tensor_points(first, first_weight, xi, wi, n_dims)
    values = w * np.exp(coef * np.sum(points * points, axis=1)) * jastrow(points, lam)
    return complex(np.sum(values)), len(w)


def _integrate(rule: str, outer_x: np.ndarray, outer_w: np.ndarray, xi: np.ndarray, wi: np.ndarray,
               n_dims: int, lo: float, hi: float, lam: float, coef: complex,
               workers: Optional[int]) -> Tuple[complex, int]:
    tasks = [(rule, float(x), float(w), xi, wi, n_dims, lo, hi, lam, coef) for x, w in zip(outer_x, outer_w)]
    total = KahanSum(0j)
    evaluations = 0
    for block, count in parallel_map(_block_sum, tasks, workers):
        total.add(block)
        evaluations += count
    return total.value, evaluations


def _legendre(nodes: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _gaussian_integral(n: int, lam: float, c: float, kappa: float, nodes: int,
                       workers: Optional[int]) -> Tuple[complex, int, OracleMethod]:
    """int_{R^n} exp(-c q^2 / 2 + i kappa q^2) J(q) dq."""
    if is_smooth_coupling(lam):
        # q = s x turns exp(-c q^2 / 2) into the Hermite weight exp(-x^2)
        s = math.sqrt(2.0 / c)
        xi, wi = np.polynomial.hermite.hermgauss(nodes)
        total, evaluations = _integrate('tensor', xi, wi, xi, wi, n, 0.0, 0.0, lam,
                                        1j * kappa * s * s, workers)
        return total * s ** (n * (1.0 + lam * (n - 1))), evaluations, OracleMethod.GAUSS_HERMITE
    half_width = math.sqrt(2.0 * _GAUSSIAN_TAIL / c)
    outer_x, outer_w = _legendre(nodes, -half_width, half_width)
    xi, wi = np.polynomial.legendre.leggauss(nodes)
    total, evaluations = _integrate('split', outer_x, outer_w, xi, wi, n, -half_width, half_width,
                                    lam, complex(-0.5 * c, kappa), workers)
    return total, evaluations, OracleMethod.SPLIT_LEGENDRE


def _node_flags(nodes: int) -> Tuple[str, ...]:
    min_nodes = ConfigHandler().get('oracle', 'min_nodes')
    if nodes < min_nodes:
        logging.log_warning(f"Only {nodes} quadrature nodes per axis (< {min_nodes}); accuracy is not assured")
        return ('low_node_count',)
    return ()


def survival_quadrature(params: SystemParams, state: ScalingState, nodes: Optional[int] = None,
                        workers: Optional[int] = 1) -> OracleEstimate:
    """Survival probability from the overlap integral, without the closed form.

    The returned amplitude is the overlap with the dynamical phase gauged away,
    [(b + 1/b - i b')/2]^(-beta/2) in closed form.
    """
    if params.n > _MAX_QUADRATURE_N:
        raise CapabilityError(f"Quadrature handles N <= {_MAX_QUADRATURE_N}, got N={params.n}; "
                              "use survival_monte_carlo")
    max_t = ConfigHandler().get('oracle', 'max_t_quadrature')
    if state.t > max_t:
        raise CapabilityError(f"Quadrature oracle is limited to t <= {max_t:g} (oscillatory phase), got t={state.t:g}")
    nodes = nodes or default_nodes(params.lam, params.n)
    flags = _node_flags(nodes)

    b = state.b
    c = 1.0 + 1.0 / (b * b)
    kappa = state.b_dot / (2.0 * b)
    integral, evaluations, method = _gaussian_integral(params.n, params.lam, c, kappa, nodes, workers)
    log_prefactor = -mehta_constant(params) - 0.5 * params.beta * math.log(b)
    amplitude = math.exp(log_prefactor) * integral
    logging.log_debug(f"Survival quadrature N={params.n} lambda={params.lam:g} t={state.t:g}: "
                      f"{evaluations} evaluations ({method.value})")
    return OracleEstimate(value=abs(amplitude) ** 2, std_error=0.0, method=method,
                          evaluations=evaluations, amplitude=amplitude, flags=flags)


def _mc_batch(task) -> complex:
    seed_sequence, count, n, lam, c, kappa = task
    rng = np.random.Generator(np.random.Philox(seed_sequence))
    q = rng.standard_normal((count, n)) / math.sqrt(c)
    values = np.exp(1j * kappa * np.sum(q * q, axis=1)) * jastrow(q, lam)
    return complex(np.mean(values))


def _monte_carlo_mean(n: int, lam: float, c: float, kappa: float, samples: int, seed: int,
                      batches: int, workers: Optional[int]):
    """Batch means of exp(i kappa q^2) J(q) with q ~ N(0, 1/c) per coordinate."""
    sizes = [samples // batches + (1 if k < samples % batches else 0) for k in range(batches)]
    children = np.random.SeedSequence(seed).spawn(batches)
    tasks = [(child, size, n, lam, c, kappa) for child, size in zip(children, sizes)]
    means = parallel_map(_mc_batch, tasks, workers)
    return np.array(means), np.array(sizes, dtype=float)


def _jackknife(means: np.ndarray, sizes: np.ndarray, prefactor: float) -> Tuple[float, float]:
    """|prefactor * mean|^2 and its leave-one-batch-out standard error."""
    total = KahanSum(0j)
    total.extend(means * sizes)
    grand = total.value
    n_total = sizes.sum()
    estimate = abs(prefactor * grand / n_total) ** 2
    leave_out = np.abs(prefactor * (grand - means * sizes) / (n_total - sizes)) ** 2
    batches = len(means)
    spread = leave_out - leave_out.mean()
    return estimate, math.sqrt((batches - 1) / batches * float(np.sum(spread * spread)))


def _check_samples(samples: int, batches: int):
    cfg = ConfigHandler()
    min_samples = cfg.get('oracle', 'mc_min_samples')
    if samples < min_samples:
        raise DomainError(f"Monte Carlo needs at least {min_samples} samples, got {samples}")
    if batches < 20:
        raise DomainError(f"Jackknife needs at least 20 batches, got {batches}")


def survival_monte_carlo(params: SystemParams, state: ScalingState, samples: Optional[int] = None,
                         seed: Optional[int] = None, batches: Optional[int] = None,
                         workers: Optional[int] = 1) -> OracleEstimate:
    cfg = ConfigHandler()
    samples = samples or cfg.get('oracle', 'mc_samples')
    seed = cfg.get('oracle', 'seed') if seed is None else seed
    batches = batches or cfg.get('oracle', 'mc_batches')
    _check_samples(samples, batches)
    max_t = cfg.get('oracle', 'max_t_monte_carlo')
    if state.t > max_t:
        raise CapabilityError(f"Monte Carlo oracle is limited to t <= {max_t:g}, got t={state.t:g}")

    b = state.b
    c = 1.0 + 1.0 / (b * b)
    kappa = state.b_dot / (2.0 * b)
    means, sizes = _monte_carlo_mean(params.n, params.lam, c, kappa, samples, seed, batches, workers)
    log_prefactor = (-mehta_constant(params) - 0.5 * params.beta * math.log(b)
                     + 0.5 * params.n * math.log(2.0 * math.pi / c))
    prefactor = math.exp(log_prefactor)
    value, std_error = _jackknife(means, sizes, prefactor)
    amplitude = prefactor * complex(np.sum(means * sizes) / sizes.sum())

    flags = ()
    relative = std_error / value if value > 0.0 else math.inf
    if state.t > cfg.get('oracle', 'max_t_quadrature') or relative > 0.01:
        guidance = int(math.ceil(samples * (relative / 0.01) ** 2))
        logging.log_warning(f"Monte Carlo relative error {relative:.3g} at t={state.t:g}; "
                            f"about {guidance} samples are needed for 1%")
        flags = ('sample_size_guidance',)
    return OracleEstimate(value=value, std_error=std_error, method=OracleMethod.MONTE_CARLO,
                          evaluations=int(sizes.sum()), amplitude=amplitude, seed=seed, flags=flags)


def nonescape_quadrature(params: SystemParams, b: float, a: float, nodes: Optional[int] = None,
                         workers: Optional[int] = 1) -> OracleEstimate:
    """I = int_{[-a/2, a/2]^N} exp(-q^2 / b^2) J(q) dq; b may be infinite."""
    if params.n > _MAX_QUADRATURE_N:
        raise CapabilityError(f"Non-escape quadrature handles N <= {_MAX_QUADRATURE_N}, got N={params.n}")
    if not b > 0.0:
        raise DomainError(f"Scaling factor must be > 0, got b={b}")
    if not (a > 0.0 and math.isfinite(a)):
        raise DomainError(f"Region width must be finite and > 0, got a={a}")
    nodes = nodes or default_nodes(params.lam, params.n)
    flags = _node_flags(nodes) + ('truncation_limited',)
    coef = -1.0 / (b * b) if math.isfinite(b) else 0.0
    lo, hi = -0.5 * a, 0.5 * a
    outer_x, outer_w = _legendre(nodes, lo, hi)
    if is_smooth_coupling(params.lam):
        total, evaluations = _integrate('tensor', outer_x, outer_w, outer_x, outer_w, params.n,
                                        lo, hi, params.lam, coef, workers)
        method = OracleMethod.UNIFORM_QUADRATURE
    else:
        xi, wi = np.polynomial.legendre.leggauss(nodes)
        total, evaluations = _integrate('split', outer_x, outer_w, xi, wi, params.n,
                                        lo, hi, params.lam, coef, workers)
        method = OracleMethod.SPLIT_LEGENDRE
    return OracleEstimate(value=total.real, std_error=0.0, method=method,
                          evaluations=evaluations, flags=flags)


def selberg_quadrature(n: int, gamma: float, nodes: Optional[int] = None,
                       workers: Optional[int] = 1) -> OracleEstimate:
    """S_n(1, 1, gamma) as a direct integral over the unit cube (shifted to be centred)."""
    return nonescape_quadrature(SystemParams(n, gamma), math.inf, 1.0, nodes, workers)


def mehta_constant_numeric(params: SystemParams, method: str = 'quadrature', budget: Optional[int] = None,
                           seed: Optional[int] = None, workers: Optional[int] = 1) -> OracleEstimate:
    """C_{N,lambda} = int exp(-q^2) J(q) dq by quadrature or by sampling."""
    if params.n > _MAX_MEHTA_N:
        raise CapabilityError(f"Numeric Mehta constant handles N <= {_MAX_MEHTA_N}, got N={params.n}")
    if method == 'quadrature':
        nodes = budget or default_nodes(params.lam, params.n)
        integral, evaluations, rule = _gaussian_integral(params.n, params.lam, 2.0, 0.0, nodes, workers)
        return OracleEstimate(value=integral.real, std_error=0.0, method=rule,
                              evaluations=evaluations, flags=_node_flags(nodes))
    if method == 'montecarlo':
        cfg = ConfigHandler()
        samples = budget or cfg.get('oracle', 'mc_samples')
        seed = cfg.get('oracle', 'seed') if seed is None else seed
        batches = cfg.get('oracle', 'mc_batches')
        _check_samples(samples, batches)
        means, sizes = _monte_carlo_mean(params.n, params.lam, 2.0, 0.0, samples, seed, batches, workers)
        scale = math.pi ** (0.5 * params.n)
        # Real integrand: jackknife the plain mean
        n_total = sizes.sum()
        grand = float(np.sum(means.real * sizes))
        leave_out = scale * (grand - means.real * sizes) / (n_total - sizes)
        spread = leave_out - leave_out.mean()
        std_error = math.sqrt((len(means) - 1) / len(means) * float(np.sum(spread * spread)))
        return OracleEstimate(value=scale * grand / n_total, std_error=std_error,
                              method=OracleMethod.MONTE_CARLO, evaluations=int(n_total), seed=seed)
    raise DomainError(f"Unknown method '{method}' (use quadrature or montecarlo)")
