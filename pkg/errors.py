class AtiyahError(Exception):
    """Base exception for configuration analysis errors"""

    exit_code = 3


class InvalidInputError(AtiyahError):
    """Malformed or out-of-domain input (bad JSON, norms >= 1, wrong point count, bad flags)"""

    pass


class PreconditionError(InvalidInputError):
    """An operation was called outside its precondition (e.g. wrong scenario for a checker)"""

    pass


class DegenerateInputError(AtiyahError):
    """Vanishing denominator, coincident projective points or singular Moebius matrix"""

    pass


class DistinctPointsError(AtiyahError):
    """Two configuration points are closer than the separation tolerance"""

    pass


class NotCoplanarError(AtiyahError):
    """Hull membership requested for a non-coplanar configuration"""

    pass


class DegenerateFaceError(AtiyahError):
    """The three points of a face lie on one geodesic"""

    pass


class IndeterminateError(AtiyahError):
    """The relation does not determine the third root (any root works, or none)"""

    pass


class SamplingError(AtiyahError):
    """Rejection sampling ran out of budget"""

    pass


class ConsistencyError(AtiyahError):
    """An internal cross-check failed (oracle disagreement, map verification, NaN output)"""

    exit_code = 4
