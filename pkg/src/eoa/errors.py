"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses without a lookup table.
"""


class EOAError(Exception):
    exit_code = 1


class UsageError(EOAError):
    exit_code = 2


class StateInvariantError(EOAError):
    exit_code = 3


class ResourceGuardError(EOAError):
    exit_code = 4


class NotHermitian(StateInvariantError):
    pass


class NotPSD(StateInvariantError):
    pass


class NotUnitary(StateInvariantError):
    pass


class NoConvergence(EOAError):
    pass


class LabelClash(UsageError):
    pass


class UnknownLabel(UsageError):
    pass


class OverlappingSystems(UsageError):
    pass


class DimensionMismatch(UsageError):
    pass


class UnknownExample(UsageError):
    pass


class InvalidPOVM(StateInvariantError):
    pass


class NotClassicalQuantum(StateInvariantError):
    pass


class DecompositionMismatch(StateInvariantError):
    pass


class DegenerateProjection(StateInvariantError):
    pass


class TooManyHelpers(ResourceGuardError):
    pass


class TooLarge(ResourceGuardError):
    pass
