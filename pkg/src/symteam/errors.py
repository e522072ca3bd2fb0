"""Exception hierarchy shared by every module."""


class SymTeamError(Exception):
    """Base class for all library errors."""


class NotNormalized(SymTeamError, ValueError):
    pass


class NegativeWeight(SymTeamError, ValueError):
    pass


class EvidenceImpossible(SymTeamError, ValueError):
    """A Bayes update was asked to condition on a zero-probability event."""


class SchemaError(SymTeamError, ValueError):
    pass


class KernelRowNotNormalized(SchemaError):
    pass


class InconsistentFlag(SchemaError):
    """A structural flag declared in a model file contradicts its kernels."""


class FlagViolation(SymTeamError, ValueError):
    """An operation requiring a structural property was given a model without it."""


class BudgetExceeded(SymTeamError, RuntimeError):
    pass


class UnreachableInfoRealization(SymTeamError, KeyError):
    pass
