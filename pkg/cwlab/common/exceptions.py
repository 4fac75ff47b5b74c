"""
Exceptions raised by cwlab
"""


class CwlabError(Exception):
    """Base class for all errors raised by this package"""


class ConfigError(CwlabError, ValueError):
    """Invalid parameters or options"""


class DomainError(CwlabError, ValueError):
    """An argument lies outside the domain of a function"""


class NoPositiveRoot(DomainError):
    """The critical point equation has no positive root (beta <= 1)"""


class RegimeMismatch(ConfigError):
    """The requested regime is inconsistent with the model parameters"""


class NumericalError(CwlabError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance or produced non-finite values"""


class InternalError(CwlabError, RuntimeError):
    """An internal invariant has been violated"""
