import numpy as np
import pytest

from core.ermakov import FrequencyProtocol, analytic_trajectory, solve_scaling
from core.errors import DomainError
from core.ersak import DecompositionTerms, decompose, decomposition_scan, memory_amplitude
from core.survival import SystemParams, survival_amplitude

T_FINAL = 15.0


@pytest.fixture
def quench():
    return analytic_trajectory(FrequencyProtocol.sudden_quench(), np.linspace(0.0, T_FINAL, 31))


def _memory_fractions(params, traj, count=301, gauge=True):
    taus = np.linspace(0.0, T_FINAL, count)
    return np.array([terms.memory for _, terms in decomposition_scan(params, traj, T_FINAL, taus, gauge=gauge)])


@pytest.mark.parametrize("gauge", [False, True])
@pytest.mark.parametrize("n,lam", [(1, 0.0), (3, 1.0), (3, 2.0), (6, 2.0)])
def test_terms_close_to_survival(quench, n, lam, gauge):
    params = SystemParams(n, lam)
    for tau in np.linspace(0.0, T_FINAL, 17):
        terms = decompose(params, quench, T_FINAL, tau, gauge=gauge)
        closure = terms.classical + terms.memory + terms.interference
        assert closure == pytest.approx(terms.total, rel=1e-10)


def test_gauge_leaves_classical_and_quantum_parts(quench):
    params = SystemParams(3, 1.0)
    for tau in (1.0, 4.5, 7.5, 12.0):
        plain = decompose(params, quench, T_FINAL, tau)
        gauged = decompose(params, quench, T_FINAL, tau, gauge=True)
        assert gauged.classical == plain.classical
        assert gauged.total == plain.total
        assert gauged.memory + gauged.interference == pytest.approx(plain.memory + plain.interference, rel=1e-10)


def test_memory_vanishes_at_endpoints(quench):
    params = SystemParams(3, 2.0)
    for tau in (0.0, T_FINAL):
        assert abs(memory_amplitude(params, quench, T_FINAL, tau)) < 1e-15
        terms = decompose(params, quench, T_FINAL, tau, gauge=True).normalized()
        assert terms.memory == pytest.approx(0.0, abs=1e-15)
        assert terms.classical == pytest.approx(1.0, rel=1e-12)


def test_memory_amplitude_definition(quench):
    params = SystemParams(2, 0.5)
    a = lambda t: survival_amplitude(params, quench.state_at(t))
    assert memory_amplitude(params, quench, T_FINAL, 4.0) == pytest.approx(a(T_FINAL) - a(11.0) * a(4.0), rel=1e-12)


def test_free_particle_split_values(quench):
    params = SystemParams(1, 0.0)
    expected = {0.2: (0.690, 0.213, 0.097), 0.5: (0.503, 0.326, 0.171)}
    for fraction, (classical, memory, interference) in expected.items():
        terms = decompose(params, quench, T_FINAL, fraction * T_FINAL).normalized()
        assert terms.classical == pytest.approx(classical, abs=2e-3)
        assert terms.memory == pytest.approx(memory, abs=2e-3)
        assert terms.interference == pytest.approx(interference, abs=2e-3)


@pytest.mark.parametrize("gauge", [False, True])
def test_memory_dominates_for_interacting_gas(quench, gauge):
    assert _memory_fractions(SystemParams(3, 1.0), quench, gauge=gauge).max() > 0.9


def test_larger_gas_prolongs_reconstruction(quench):
    # Holds on the raw amplitudes; gauging shrinks the (6, 2) interval below the (3, 2) one
    small = np.mean(_memory_fractions(SystemParams(3, 2.0), quench, gauge=False) > 0.99)
    large = np.mean(_memory_fractions(SystemParams(6, 2.0), quench, gauge=False) > 0.99)
    assert large > small


def test_memory_fraction_grows_with_exponent(quench):
    middle = [decompose(SystemParams(n, lam), quench, T_FINAL, 0.5 * T_FINAL, gauge=True).normalized().memory
              for n, lam in ((1, 0.0), (3, 1.0), (3, 2.0), (6, 2.0))]
    assert middle == sorted(middle)


def test_scan_rows_are_normalised(quench):
    rows = decomposition_scan(SystemParams(3, 1.0), quench, T_FINAL, np.linspace(0.0, T_FINAL, 11), gauge=True)
    assert len(rows) == 11
    for tau, terms in rows:
        assert terms.total == 1.0
        assert terms.classical + terms.memory + terms.interference == pytest.approx(1.0, abs=1e-9)


def test_invalid_splits(quench):
    params = SystemParams(2, 1.0)
    with pytest.raises(DomainError):
        decompose(params, quench, T_FINAL, -0.1)
    with pytest.raises(DomainError):
        decompose(params, quench, T_FINAL, T_FINAL + 0.1)
    with pytest.raises(DomainError):
        decompose(params, quench, 20.0, 1.0)
    with pytest.raises(DomainError):
        decomposition_scan(params, quench, T_FINAL, [])
    with pytest.raises(DomainError):
        DecompositionTerms(0.0, 0.0, 0.0, 0.0).normalized()


def test_composition_needs_constant_trap():
    protocol = FrequencyProtocol.delayed_release(3.0)
    traj = solve_scaling(protocol, np.linspace(0.0, T_FINAL, 61))
    with pytest.raises(DomainError):
        decompose(SystemParams(2, 1.0), traj, T_FINAL, 5.0)


def test_scan_rows_do_not_depend_on_workers(quench):
    params = SystemParams(3, 2.0)
    taus = np.linspace(0.0, T_FINAL, 21)
    serial = decomposition_scan(params, quench, T_FINAL, taus, gauge=True)
    assert decomposition_scan(params, quench, T_FINAL, taus, gauge=True, workers=2) == serial
