from typing import Iterable, Union

Number = Union[float, complex]


class KahanSum:
    """Compensated running sum of real or complex terms.

    Complex addition is componentwise, so the same correction works for both.
    Feeding the terms in a fixed order gives a result that does not depend on
    how the terms were produced (serially or by a worker pool).
    """

    def __init__(self, start: Number = 0.0):
        self._sum = start
        self._compensation = 0.0 * start

    def add(self, term: Number) -> None:
        y = term - self._compensation
        t = self._sum + y
        self._compensation = (t - self._sum) - y
        self._sum = t

    def extend(self, terms: Iterable[Number]) -> None:
        for term in terms:
            self.add(term)

    @property
    def value(self) -> Number:
        return self._sum
