import math

from utils.parallel import parallel_map, resolve_workers
from utils.summation import KahanSum


def _square(x):
    return x * x


def test_compensated_sum_keeps_small_terms():
    total = KahanSum(1.0)
    naive = 1.0
    for _ in range(10000):
        total.add(1e-16)
        naive += 1e-16
    assert naive == 1.0
    assert math.isclose(total.value, 1.0 + 1e-12, rel_tol=1e-15)


def test_complex_terms():
    total = KahanSum(0j)
    total.extend([1.0 + 1e-16j] * 1000 + [1e-16 + 1.0j] * 1000)
    assert math.isclose(total.value.real, 1000.0, rel_tol=1e-15)
    assert math.isclose(total.value.imag, 1000.0, rel_tol=1e-15)


def test_parallel_map_keeps_order():
    tasks = list(range(50))
    assert parallel_map(_square, tasks, 1) == [x * x for x in tasks]
    assert parallel_map(_square, tasks, 3) == [x * x for x in tasks]


def test_resolve_workers_prefers_flag():
    assert resolve_workers(4) == 4
    assert resolve_workers(None) == 1
