"""Exception hierarchy shared by every module of the package."""


class SuperhedgeError(Exception):
    """Base class for all package errors."""


class ParseError(SuperhedgeError):
    """A market or calibration file does not follow the expected schema."""

    def __init__(self, message, node_id=None, field=None):
        self.node_id = node_id
        self.field = field
        where = []
        if node_id is not None:
            where.append(f"node {node_id!r}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(SuperhedgeError):
    """A structurally valid market violates a model invariant."""


class NoSuccessors(SuperhedgeError):
    """An operation that needs the children of a node was given a leaf."""


class DimensionError(SuperhedgeError):
    """An operation restricted to one risky asset was given d != 1."""


class CalibrationError(SuperhedgeError):
    """Price history cannot be turned into binomial multipliers."""


class FormatError(SuperhedgeError):
    """Inconsistent linear-program data, or a malformed report document."""


class InternalError(SuperhedgeError):
    """An invariant that should hold by construction was breached."""


class IpDetected(SuperhedgeError):
    """A closed-form pricing formula was used where an instantaneous profit exists."""


class PayoffError(SuperhedgeError, ValueError):
    """Malformed payoff specification, or a payoff lacking a required shape."""


class SizeError(SuperhedgeError):
    """Input exceeds what a brute-force routine is willing to enumerate."""
