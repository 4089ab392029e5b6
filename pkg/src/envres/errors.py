"""Exception hierarchy shared by all envres modules."""


class EnvresError(Exception):
    """Base class for all envres errors."""


class ParameterError(EnvresError):
    """An argument violates a documented precondition (negative rate, bad epsilon, ...)."""


class InstabilityError(EnvresError):
    """Long-run arrival rate meets or exceeds service capacity; no finite bound exists."""


class DuplicateFlowError(EnvresError):
    """A flow id is already held tentatively (or replayed with the same nonce)."""


class UnknownReservationError(EnvresError):
    """A commit/release names a (flow_id, nonce) this router has never seen."""


class RoutingError(EnvresError):
    """A path request arrived at a router that is not the next hop of its route."""


class ProtocolError(EnvresError):
    """A signaling message violates the reservation protocol (e.g. incomplete report)."""


class BindingError(EnvresError):
    """A binding update carries a stale sequence number."""


class ScenarioError(EnvresError):
    """A scenario file failed to parse or validate; message names the offending field/id."""
