"""Exception hierarchy shared by all modules."""


class WillmoreLabError(Exception):
    """Base class for every error raised by the toolkit."""


class InputError(WillmoreLabError):
    """Bad user input (files, configuration, geometric preconditions)."""


class NumericalError(WillmoreLabError):
    """A numerical procedure could not certify its result."""


class DegenerateImmersion(InputError):
    """The induced metric is (numerically) singular at a parameter point."""


class ParseError(InputError):
    pass


class NonManifold(InputError):
    pass


class TruncationUnsound(InputError):
    """A chart cutoff boundary reaches into the integration region."""


class BasePointOnSurface(InputError):
    pass


class CompactSource(InputError):
    """The identity being checked only applies to non-compact surfaces."""


class DegenerateCloud(InputError):
    pass


class MissingTangents(InputError):
    pass


class EmptyBall(InputError):
    pass


class SamplingTooCoarse(InputError):
    pass


class NonConvergent(NumericalError):
    pass


class Unstable(NumericalError):
    """End counts did not stabilise over the last radii of a schedule."""
