"""Exception hierarchy.

The CLI maps ``ConfigError`` to exit code 2, ``DataError`` to 3 and any other
``RecIneqError`` to 4.
"""


class RecIneqError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RecIneqError, ValueError):
    pass


class DataError(RecIneqError, ValueError):
    pass


class RaggedGrid(DataError):
    pass


class OutOfRangeRating(DataError):
    pass


class EmptyDataset(DataError):
    pass


class CountMismatch(DataError):
    pass


class ParseError(DataError):
    pass


class NotEnoughUsers(DataError):
    pass


class InsufficientGaugeCandidates(DataError):
    def __init__(self, found: int, needed: int = 10):
        super().__init__(f"only {found} fully-rated items found, need {needed}")
        self.found = found
        self.needed = needed


class NumericsError(RecIneqError, ValueError):
    pass


class LengthMismatch(NumericsError):
    pass


class EmptyInput(NumericsError):
    pass


class ZeroVariance(NumericsError):
    pass


class NonConvergence(NumericsError):
    pass


class RankOutOfRange(NumericsError):
    pass


class RecommenderError(RecIneqError):
    pass


class EmptyCatalog(RecommenderError):
    pass


class AllZeroMass(RecommenderError):
    pass


class NoSimilarUsers(RecommenderError):
    pass


class SingularProjection(RecommenderError):
    pass


class UnknownUser(RecommenderError, KeyError):
    pass


class AllZero(RecIneqError, ValueError):
    pass


class DegenerateRegression(RecIneqError, ValueError):
    pass
