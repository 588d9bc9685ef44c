"""Exception types raised by the analysis routines."""


class QidError(ValueError):
    """Base class for invalid inputs and failed numerical preconditions."""


class ZeroCharacteristicFunctionError(QidError):
    """The characteristic function is (numerically) zero somewhere on the grid."""


class PhaseUnwrapError(QidError):
    """The phase could not be followed continuously even on the finest grid."""


class DominantAtomError(QidError):
    """No atom carries strictly more than half of the mass."""


class NotQidResultError(QidError):
    """An operation that needs a QID triplet was handed a non-QID result."""
