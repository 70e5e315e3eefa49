"""Exception hierarchy shared by every sparsesel module."""


class SparseSelError(Exception):
    """Base class for all errors raised by sparsesel."""


class DataError(SparseSelError, ValueError):
    """Malformed input data (shape mismatch, non-finite entries, bad CSV)."""


class RankDeficient(SparseSelError):
    """The columns of a candidate sub-design are numerically dependent."""

    def __init__(self, support, rank, k):
        self.support = tuple(support)
        self.rank = rank
        self.k = k
        super().__init__(f"support {self.support} has numerical rank {rank} < {k}")


class DegenerateResidual(SparseSelError):
    """Residual energy is zero, so a residual-dependent penalty is undefined."""


class TooLarge(SparseSelError):
    """Enumeration guard tripped."""


class NoSuchCardinality(SparseSelError):
    """A candidate path never reaches the requested cardinality."""


class AllCandidatesFailed(SparseSelError):
    """Every candidate support failed to score."""


class ConfigError(SparseSelError, ValueError):
    """Invalid experiment configuration."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
