"""Exception hierarchy shared by every module."""


class CrowdshipError(Exception):
    """Base class for all library errors."""


class ContractError(CrowdshipError, ValueError):
    """An operation was called with arguments violating its precondition."""


class UnknownArcError(CrowdshipError, LookupError):
    pass


class NoPathError(CrowdshipError, LookupError):
    pass


class CapacityError(CrowdshipError):
    """A solver refused a problem larger than its configured limit."""


class InfeasibleInstanceError(CrowdshipError):
    """Some PDOs cannot be delivered by any vehicle.

    ``culprits`` lists the offending PDO ids.
    """

    def __init__(self, message, culprits=()):
        super().__init__(message)
        self.culprits = tuple(culprits)


class ParseError(CrowdshipError, ValueError):
    pass


class GenerationError(CrowdshipError, ValueError):
    pass
