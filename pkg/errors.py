"""
Exceptions for the Hankel approximation toolkit
All pipeline failures derive from AakError so the CLI can map them to exit codes
"""


class AakError(Exception):
    """Base class for every pipeline error"""


class ConfigError(AakError):
    """Invalid configuration, command line or input file"""


class OutOfHorizonError(AakError):
    """Oracle evaluated beyond the indices it supports"""

    def __init__(self, index: int, horizon: int):
        self.index = index
        self.horizon = horizon
        super().__init__(f"index {index} is beyond the oracle horizon {horizon}")


class UnsupportedBoundError(AakError):
    """A bound needs an oracle with total mass one"""


class MassError(AakError):
    """Probabilistic oracle with negative values or mass above one"""


class NoiseSpecError(AakError):
    """Noise decay exponent too small for a compact perturbation"""


class PolynomialError(AakError):
    """Zero or non-monic polynomial where the operation needs otherwise"""


class MultiplicityError(AakError):
    """Pole multiplicity above the supported maximum"""


class DecompositionError(AakError):
    """Partial fractions do not recombine to the input fraction"""


class EmptyProjectionError(AakError):
    """No pole lies strictly inside the unit disc"""


class ApproximantZeroError(EmptyProjectionError):
    """The rank-k approximant came out as the zero function"""


class DegreeMismatchError(AakError):
    """Symbol degree differs from the requested number of states"""


class RankDeficiencyError(AakError):
    """Hankel block has lower numerical rank than requested"""

    def __init__(self, rank: int, requested: int):
        self.rank = rank
        self.requested = requested
        super().__init__(
            f"Hankel block has numerical rank {rank} < {requested}; "
            f"re-run with k={rank}"
        )


class UncertifiableTailError(AakError):
    """Sequence tail cannot be bounded below the requested threshold"""


class BoundViolationError(AakError):
    """A certified inequality failed numerically"""
