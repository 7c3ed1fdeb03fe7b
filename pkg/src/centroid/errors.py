"""Exception hierarchy shared across the package."""


class CentroidError(Exception):
    """Base class for all package errors."""


class ShapeError(CentroidError):
    pass


class RankDeficient(CentroidError):
    pass


class DegenerateConfiguration(CentroidError):
    """Two vertex projections (or denominator rows) coincide.

    Carries the list of colliding index pairs so the caller can decide
    whether to perturb the basis and retry.
    """

    def __init__(self, pairs, message=None):
        self.pairs = list(pairs)
        super().__init__(message or f"degenerate configuration, colliding pairs: {self.pairs}")


class UnhandledPoleOrder(CentroidError):
    """A pole of multiplicity > 2 appeared during the recursion."""


class ZeroColumnEntry(CentroidError):
    """A zero denominator entry reached the final transform dimension."""


class EmptyPolytope(CentroidError):
    pass


class InfeasibleT(CentroidError):
    pass


class Infeasible(CentroidError):
    pass


class Unbounded(CentroidError):
    pass


class ConvergenceFailure(CentroidError):
    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class SchemaMismatch(CentroidError):
    pass


class CorruptDocument(CentroidError):
    pass


class RowNotOnSimplex(CentroidError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"row {index} is not a probability vector")
