"""Exception hierarchy.

``InputError`` subclasses signal bad user input (CLI exit code 1);
``InternalError`` subclasses signal a broken invariant (exit code 2).
"""

from __future__ import annotations


class FairClustError(Exception):
    pass


class InputError(FairClustError, ValueError):
    pass


class InternalError(FairClustError, RuntimeError):
    pass


class MetricError(InputError):
    pass


class Asymmetric(MetricError):
    def __init__(self, a: int, b: int):
        super().__init__(f"dist[{a}][{b}] != dist[{b}][{a}]")
        self.witness = (a, b)


class NegativeDistance(MetricError):
    def __init__(self, a: int, b: int):
        super().__init__(f"dist[{a}][{b}] < 0")
        self.witness = (a, b)


class NonzeroDiagonal(MetricError):
    def __init__(self, a: int):
        super().__init__(f"dist[{a}][{a}] != 0")
        self.witness = (a,)


class TriangleViolation(MetricError):
    def __init__(self, a: int, b: int, c: int):
        super().__init__(f"dist[{a}][{c}] > dist[{a}][{b}] + dist[{b}][{c}]")
        self.witness = (a, b, c)


class EmptyCenterSet(InputError):
    pass


class FullSet(InputError):
    pass


class RegimeMismatch(InputError):
    pass


class DegenerateK(InputError):
    pass


class NoSurplus(InputError):
    pass


class TooFewPoints(InputError):
    pass


class TooLarge(InputError):
    pass


class ParameterOrder(InputError):
    pass


class IterationLimit(InternalError):
    pass


class Infeasible(InternalError):
    pass


class ProbabilityOverflow(InternalError):
    pass
