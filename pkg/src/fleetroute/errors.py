"""Exception types raised across the solver."""


class FleetRouteError(Exception):
    """Base class for all solver errors."""


class InstanceError(FleetRouteError):
    """The problem instance is internally inconsistent (unknown ids, bad matrices)."""


class PartitionError(FleetRouteError):
    """A solution does not cover every customer exactly once."""


class InfeasibleCustomerError(FleetRouteError):
    """A customer cannot be served at all under the instance constraints."""

    def __init__(self, customer_id, message):
        super().__init__(message)
        self.customer_id = customer_id


class ContractError(FleetRouteError):
    """A precondition of an operation was violated by the caller."""


class ParseError(FleetRouteError):
    """An instance or solution document could not be parsed."""

    def __init__(self, message, line=None, path=None):
        loc = ""
        if line is not None:
            loc = f" (line {line})"
        elif path is not None:
            loc = f" (at {path})"
        super().__init__(message + loc)
        self.line = line
        self.path = path


class TrainingError(FleetRouteError):
    """The tuning history cannot produce a usable training table."""


class FitError(FleetRouteError):
    """A regression model could not be fitted."""
