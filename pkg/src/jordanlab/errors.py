"""Exception types shared across the package."""


class JordanLabError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(JordanLabError):
    pass


class IterationLimit(JordanLabError):
    """An iterative factorization failed to deflate within its sweep budget."""


class NotConverged(JordanLabError):
    """Eigensolver hit max_iter. Carries the best decomposition so far."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ShiftExhausted(JordanLabError):
    """Multiplicity adjustment consumed all shifts; the degenerate cluster is wider than k+p."""


class IllConditionedElimination(JordanLabError):
    """A block elimination solve is too ill-conditioned; retry with a larger clustering delta."""


class RankDeficient(JordanLabError):
    pass


class ZeroVector(JordanLabError):
    pass


class ParallelVectors(JordanLabError):
    pass


class GridMismatch(JordanLabError):
    pass


class UnmatchedEigenvalue(JordanLabError):
    pass


class DegenerateOverlap(JordanLabError):
    """A biorthogonal overlap vanished, signalling a nontrivial Jordan block."""


class SingularOverlap(JordanLabError):
    pass


class SplitsCluster(JordanLabError):
    """A truncation rank falls inside a degenerate eigenvalue cluster or Jordan tower."""


class EmptySector(JordanLabError):
    pass


class IndexOutOfRange(JordanLabError):
    pass


class CapExceeded(JordanLabError):
    pass


class DomainError(JordanLabError):
    pass


class QuadratureFailure(JordanLabError):
    pass


class SingularFit(JordanLabError):
    pass


class VariantUnsupported(JordanLabError):
    pass


class StateNotFound(JordanLabError):
    pass


class OptimizerNoConverge(JordanLabError):
    pass


class RankTolViolation(JordanLabError):
    """Column-reduction pivots fell in the ambiguity band between noise and signal."""


class ZeroConformalOverlap(JordanLabError):
    pass
