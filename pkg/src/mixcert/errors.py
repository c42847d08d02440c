"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class MixcertError(Exception):
    """Base class for library errors."""


class InvalidGraph(MixcertError, ValueError):
    pass


class NonRegular(InvalidGraph):
    def __init__(self, vertex: int, degree: int, expected: int):
        self.vertex = vertex
        self.degree = degree
        self.expected = expected
        super().__init__(f"vertex {vertex} has degree {degree}, expected {expected}")


class SelfLoop(InvalidGraph):
    def __init__(self, vertex: int):
        self.vertex = vertex
        super().__init__(f"self-loop at vertex {vertex}")


class DuplicateEdge(InvalidGraph):
    def __init__(self, u: int, v: int):
        self.u, self.v = u, v
        super().__init__(f"duplicate edge {u}-{v}")


class EmptySet(MixcertError, ValueError):
    pass


class SizeOutOfRange(MixcertError, ValueError):
    pass


class SizeCap(MixcertError):
    """The requested exact computation exceeds the configured size cap."""

    def __init__(self, n: int, cap: int, what: str = "exact computation"):
        self.n = n
        self.cap = cap
        super().__init__(f"{what} refused: n={n} exceeds cap {cap}")


class ConvergenceFailure(MixcertError):
    def __init__(self, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")


class NotAWitness(MixcertError, ValueError):
    pass


class NotReached(MixcertError):
    def __init__(self, t_max: int, last_d_tv: float):
        self.t_max = t_max
        self.last_d_tv = last_d_tv
        super().__init__(f"threshold not reached within {t_max} steps (last d_tv={last_d_tv:.6g})")


class BudgetZero(MixcertError, ValueError):
    pass


class IndexOutOfTrace(MixcertError, IndexError):
    pass


class GenerationFailure(MixcertError):
    def __init__(self, retries: int, what: str = "graph"):
        self.retries = retries
        super().__init__(f"{what} generation failed after {retries} retries")


class Divisibility(MixcertError, ValueError):
    def __init__(self, n: int, divisor: int):
        self.n = n
        self.divisor = divisor
        super().__init__(f"n={n} is not divisible by {divisor}")


class OddDegree(MixcertError, ValueError):
    pass
