"""Order-independent exact float accumulation.

``math.fsum`` needs the whole sequence at once. ``ExactSum`` keeps the same
non-overlapping partials incrementally so that streamed sums over the same
multiset of values always round to the same float, whatever the arrival order.
"""

from __future__ import annotations

import math


class ExactSum:
    __slots__ = ("_partials",)

    def __init__(self) -> None:
        self._partials: list[float] = []

    def add(self, x: float) -> None:
        # Shewchuk's algorithm, same as the reference fsum recipe.
        partials = self._partials
        i = 0
        for y in partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                partials[i] = lo
                i += 1
            x = hi
        partials[i:] = [x]

    def value(self) -> float:
        return math.fsum(self._partials)
