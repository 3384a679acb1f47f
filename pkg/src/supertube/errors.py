"""Exception types raised by the spectral routines.

Every error carries the name of the module that raised it so that the CLI
can report provenance.
"""


class SupertubeError(Exception):
    module = "supertube"

    def __str__(self):
        return f"{self.module}: {type(self).__name__}: {super().__str__()}"


class ConfigError(SupertubeError, ValueError):
    module = "cli"


class InvalidParams(SupertubeError, ValueError):
    module = "core"


class NonRepulsive(SupertubeError):
    module = "potential"


class SupportExceedsBox(SupertubeError):
    module = "potential"


class BoundViolated(SupertubeError):
    module = "potential"

    def __init__(self, msg, q=None):
        super().__init__(msg)
        self.q = q


class Gapless(SupertubeError):
    module = "bogoliubov"


class NonNormalizable(SupertubeError):
    module = "bogoliubov"


class ComplexBranch(SupertubeError):
    module = "bogoliubov"

    def __init__(self, msg, lam=None):
        super().__init__(msg)
        self.lam = lam


class EmptyScan(SupertubeError):
    module = "scan"


class ZeroDenominator(SupertubeError):
    module = "pairseries"

    def __init__(self, msg, l=None):
        super().__init__(msg)
        self.l = l


class TruncationDominates(SupertubeError):
    module = "pairseries"


class NotTransverse(SupertubeError):
    module = "pairseries"


class NotLongitudinal(SupertubeError):
    module = "critical"


class ExcludedMode(SupertubeError):
    module = "variational"


class NonConvergence(SupertubeError):
    def __init__(self, msg, module="variational", detail=None):
        super().__init__(msg)
        self.module = module
        self.detail = detail


class ModeSetNotClosed(UserWarning):
    """Interaction terms scattering outside the mode set were dropped."""
