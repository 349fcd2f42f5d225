import math

import numpy as np
import pytest

from core.ensembles import mehta_constant
from core.ermakov import sudden_quench_scaling
from core.errors import CapabilityError, DomainError
from core.oracle import (OracleEstimate, OracleMethod, default_nodes, jastrow, mehta_constant_numeric,
                         nonescape_quadrature, selberg_quadrature, survival_monte_carlo, survival_quadrature)
from core.survival import SystemParams, survival_amplitude, survival_probability


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("lam", [0.0, 0.5, 1.0, 2.0])
def test_quadrature_matches_closed_form(n, lam):
    params = SystemParams(n, lam)
    for t in (0.0, 0.5, 1.0, 2.0, 5.0):
        state = sudden_quench_scaling(t)
        estimate = survival_quadrature(params, state)
        assert estimate.value == pytest.approx(survival_probability(params, state), rel=1e-6)
        assert estimate.std_error == 0.0


def test_quadrature_spot_value():
    estimate = survival_quadrature(SystemParams(2, 1.0), sudden_quench_scaling(1.0))
    assert estimate.value == pytest.approx(0.64, abs=1e-8)
    assert estimate.method == OracleMethod.GAUSS_HERMITE


@pytest.mark.parametrize("n,lam", [(2, 1.0), (2, 0.5), (3, 1.0)])
def test_quadrature_amplitude_is_gauged_amplitude(n, lam):
    params = SystemParams(n, lam)
    for t in (0.5, 2.0, 4.0):
        state = sudden_quench_scaling(t)
        expected = survival_amplitude(params, state, gauge_away_phase=True)
        assert survival_quadrature(params, state).amplitude == pytest.approx(expected, rel=1e-6)


def test_kinked_coupling_uses_split_rule():
    estimate = survival_quadrature(SystemParams(3, 0.5), sudden_quench_scaling(1.0))
    assert estimate.method == OracleMethod.SPLIT_LEGENDRE
    assert estimate.evaluations > 0


def test_block_parallelism_does_not_change_result():
    params = SystemParams(3, 0.5)
    state = sudden_quench_scaling(2.0)
    assert survival_quadrature(params, state, workers=1).value == survival_quadrature(params, state, workers=3).value


def test_low_node_count_is_flagged():
    estimate = survival_quadrature(SystemParams(2, 1.0), sudden_quench_scaling(1.0), nodes=10)
    assert 'low_node_count' in estimate.flags
    assert default_nodes(1.0) == 80
    assert default_nodes(0.5, 3) == 64
    assert default_nodes(0.5, 4) == 32


def test_quadrature_capability_limits():
    with pytest.raises(CapabilityError):
        survival_quadrature(SystemParams(5, 1.0), sudden_quench_scaling(1.0))
    with pytest.raises(CapabilityError):
        survival_quadrature(SystemParams(2, 1.0), sudden_quench_scaling(6.0))
    with pytest.raises(CapabilityError):
        nonescape_quadrature(SystemParams(5, 0.0), 2.0, 1.0)
    with pytest.raises(CapabilityError):
        mehta_constant_numeric(SystemParams(4, 1.0))


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
def test_mehta_constant_numeric(n, lam):
    params = SystemParams(n, lam)
    estimate = mehta_constant_numeric(params)
    assert estimate.value == pytest.approx(math.exp(mehta_constant(params)), rel=1e-6)


def test_mehta_constant_by_sampling():
    params = SystemParams(3, 1.0)
    estimate = mehta_constant_numeric(params, method='montecarlo', budget=200000, seed=5)
    assert estimate.method == OracleMethod.MONTE_CARLO
    assert estimate.seed == 5
    assert abs(estimate.value - math.exp(mehta_constant(params))) < 4.0 * estimate.std_error
    with pytest.raises(DomainError):
        mehta_constant_numeric(params, method='simpson')


def test_selberg_quadrature_spot_values():
    assert selberg_quadrature(2, 1.0).value == pytest.approx(1.0 / 6.0, rel=1e-6)
    assert selberg_quadrature(2, 0.5).value == pytest.approx(1.0 / 3.0, rel=1e-6)
    assert selberg_quadrature(2, 0.5).method == OracleMethod.SPLIT_LEGENDRE


def test_nonescape_quadrature_one_dimension():
    estimate = nonescape_quadrature(SystemParams(1, 0.0), 1.0, 2.0)
    assert estimate.value == pytest.approx(math.sqrt(math.pi) * math.erf(1.0), rel=1e-12)
    assert estimate.method == OracleMethod.UNIFORM_QUADRATURE
    assert 'truncation_limited' in estimate.flags
    with pytest.raises(DomainError):
        nonescape_quadrature(SystemParams(1, 0.0), 1.0, -2.0)


def test_monte_carlo_agrees_with_closed_form():
    params = SystemParams(2, 1.0)
    state = sudden_quench_scaling(1.0)
    estimate = survival_monte_carlo(params, state, 1000000, 42)
    assert estimate.method == OracleMethod.MONTE_CARLO
    assert estimate.seed == 42
    assert estimate.evaluations == 1000000
    assert abs(estimate.value - survival_probability(params, state)) < 3.0 * estimate.std_error


def test_monte_carlo_beyond_quadrature_reach():
    # Bounded weight: large-N Jastrow factors are too heavy-tailed for this sample size
    params = SystemParams(6, 0.0)
    state = sudden_quench_scaling(3.0)
    estimate = survival_monte_carlo(params, state, 200000, 7)
    assert abs(estimate.value - survival_probability(params, state)) < 4.0 * estimate.std_error


def test_monte_carlo_is_reproducible():
    params = SystemParams(3, 0.5)
    state = sudden_quench_scaling(2.0)
    first = survival_monte_carlo(params, state, 40000, 11)
    assert survival_monte_carlo(params, state, 40000, 11) == first
    assert survival_monte_carlo(params, state, 40000, 11, workers=2) == first
    assert survival_monte_carlo(params, state, 40000, 12).value != first.value


def test_monte_carlo_error_shrinks_with_samples():
    params = SystemParams(2, 1.0)
    state = sudden_quench_scaling(1.0)
    small = survival_monte_carlo(params, state, 40000, 3)
    large = survival_monte_carlo(params, state, 160000, 3)
    assert 0.3 < large.std_error / small.std_error < 0.75


def test_monte_carlo_limits():
    params = SystemParams(2, 1.0)
    with pytest.raises(DomainError):
        survival_monte_carlo(params, sudden_quench_scaling(1.0), 500, 1)
    with pytest.raises(CapabilityError):
        survival_monte_carlo(params, sudden_quench_scaling(12.0), 20000, 1)
    late = survival_monte_carlo(SystemParams(1, 0.0), sudden_quench_scaling(8.0), 20000, 1)
    assert 'sample_size_guidance' in late.flags


def test_jastrow_weight():
    points = np.array([[0.0, 1.0, 3.0], [1.0, 1.0, 2.0]])
    np.testing.assert_allclose(jastrow(points, 0.5), [1.0 * 3.0 * 2.0, 0.0])
    np.testing.assert_allclose(jastrow(points, 0.0), [1.0, 1.0])


def test_negative_standard_error_rejected():
    with pytest.raises(DomainError):
        OracleEstimate(value=1.0, std_error=-1.0, method=OracleMethod.MONTE_CARLO, evaluations=1)
