"""Exception hierarchy shared by the curve, maker and simulator layers."""


class PmmError(Exception):
    """Base class for every error raised by pmmlab."""


class CorruptStateError(PmmError):
    """A pool state violates the regime trichotomy or positivity."""


class NumericalDomainError(PmmError):
    """A square-root argument or discriminant went negative."""


class SwapRefused(PmmError):
    """The maker declined the swap; state is left untouched."""


class RetargetInfeasible(PmmError):
    """No anchor in the search range yields a valid curve."""


class FeedError(PmmError, ValueError):
    """Malformed, unsorted or gapped price feed."""


class ConfigError(PmmError, ValueError):
    """Invalid scenario configuration or conflicting overrides."""
