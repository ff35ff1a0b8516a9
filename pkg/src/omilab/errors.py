"""Exception hierarchy shared by every omilab module."""


class OmilabError(Exception):
    """Base class for all omilab errors."""


class BudgetExceeded(OmilabError):
    pass


class NotFinite(OmilabError):
    """An operation needs a finitely supported law but got an analytic one."""


class NonFiniteValue(OmilabError, ValueError):
    pass


class UnknownPrefix(OmilabError, KeyError):
    pass


class ModeError(OmilabError):
    """Conditional oracles are unavailable for Monte Carlo ensembles."""


class NoMomentSource(OmilabError):
    pass


class TooLargeForExact(OmilabError):
    pass


class NotACover(OmilabError):
    pass


class NotSubmartingale(OmilabError):
    def __init__(self, message, time=None, prefix=None, margin=None):
        super().__init__(message)
        self.time = time
        self.prefix = prefix
        self.margin = margin


class MeasurabilityViolation(OmilabError):
    pass


class InvalidProcessShape(OmilabError, ValueError):
    pass


class TimeKindError(OmilabError):
    pass


class CaseUndeclared(OmilabError):
    pass


class EmptySchedule(OmilabError, ValueError):
    pass


class NotTotallyBoundedDeclared(OmilabError):
    pass


class NoCentering(OmilabError):
    pass


class OracleMissing(OmilabError):
    pass


class LipschitzViolation(OmilabError):
    def __init__(self, message, pair=None, path=None, excess=None):
        super().__init__(message)
        self.pair = pair
        self.path = path
        self.excess = excess


class ConfigError(OmilabError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ManifestError(OmilabError):
    pass
