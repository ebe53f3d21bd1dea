"""Exception hierarchy shared by every stage of the pipeline."""


class ModStabError(Exception):
    """Base class for all library errors."""


class NoPeriodicOrbit(ModStabError):
    """No bounded well of the effective potential lies below the energy level."""


class DegenerateOrbit(ModStabError):
    """A turning point is (nearly) a double root: equilibrium or solitary-wave boundary."""


class QuadratureFailure(ModStabError):
    pass


class IntegrationFailure(ModStabError):
    pass


class ProfileResolutionTooCoarse(ModStabError):
    pass


class GradientUnresolved(ModStabError):
    """Richardson-extrapolated differences never settled before the step underflowed."""


class SingularC(ModStabError):
    pass


class DegenerateIndex(ModStabError):
    """|{T,M,P}| too small for the low-frequency expansion to say anything."""


class FitUnstable(ModStabError):
    pass


class RootLost(ModStabError):
    pass
