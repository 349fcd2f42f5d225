"""Gaussian beta-ensemble constants in log space.

Everything here returns natural logarithms; callers exponentiate only at the
very end. The Mehta normalisation overflows double precision around N=30,
lambda=2, well inside the range the survival formulas accept.
"""
import math
from dataclasses import dataclass

from core.errors import DomainError
from core.survival import SystemParams

# Lanczos series, g = 671/128, in the Numerical Recipes layout
_LANCZOS_G = 5.2421875
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS_COEFFICIENTS = (
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
)
_SQRT_TWO_PI = 2.5066282746310005


@dataclass(frozen=True)
class EnsembleConstants:
    params: SystemParams
    log_c: float

    @property
    def value(self) -> float:
        return math.exp(self.log_c)


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if not x > 0.0 or math.isinf(x):
        raise DomainError(f"log_gamma needs a finite x > 0, got {x}")
    # The series loses accuracy below 1/2; shift up instead of reflecting
    if x < 0.5:
        return log_gamma(x + 1.0) - math.log(x)
    y = x
    tmp = x + _LANCZOS_G
    tmp = (x + 0.5) * math.log(tmp) - tmp
    ser = _LANCZOS_C0
    for c in _LANCZOS_COEFFICIENTS:
        y += 1.0
        ser += c / y
    return tmp + math.log(_SQRT_TWO_PI * ser / x)


def mehta_constant(params: SystemParams) -> float:
    """log C_{N,lambda}, the normalisation of the Bijl-Jastrow ground state.

    C = 2^(-beta/2) (2 pi)^(N/2) prod_{j<N} Gamma(1+(j+1) lambda) / Gamma(1+lambda)
    """
    n, lam = params.n, params.lam
    log_c = -0.5 * params.beta * math.log(2.0) + 0.5 * n * math.log(2.0 * math.pi)
    log_g1 = log_gamma(1.0 + lam)
    for j in range(n):
        log_c += log_gamma(1.0 + (j + 1) * lam) - log_g1
    return log_c


def ensemble_constants(params: SystemParams) -> EnsembleConstants:
    return EnsembleConstants(params=params, log_c=mehta_constant(params))


def selberg(n: int, a: float, b: float, g: float) -> float:
    """log S_n(a, b, g) from the Selberg product formula."""
    if n < 1:
        raise DomainError(f"Selberg dimension must be >= 1, got {n}")
    if not (a > 0.0 and b > 0.0):
        raise DomainError(f"Selberg exponents need a > 0 and b > 0, got a={a}, b={b}")
    if g < 0.0:
        raise DomainError(f"Selberg coupling must be >= 0, got {g}")
    log_g1 = log_gamma(1.0 + g)
    total = 0.0
    for j in range(n):
        total += (log_gamma(a + j * g) + log_gamma(b + j * g) + log_gamma(1.0 + (j + 1) * g)
                  - log_gamma(a + b + (n + j - 1) * g) - log_g1)
    return total
