"""Exception hierarchy shared by all actmem modules."""


class ActmemError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ActmemError):
    """Malformed input: bad geometry, bad script, unknown names, bad filters."""


class ConflictError(ActmemError):
    """An identity collision, e.g. creating a task under an existing name."""


class NotFoundError(ActmemError):
    """A lookup missed: unknown entity, event, or a time before the episode."""


class StateError(ActmemError):
    """An operation arrived in the wrong lifecycle state (e.g. append after seal)."""


class StreamError(ActmemError):
    """A frame stream violated its contract (out-of-order time, contradictory feeds)."""


class ProvisionalDataWarning(UserWarning):
    """Answer computed from an episode still being written; a later read may see more."""
