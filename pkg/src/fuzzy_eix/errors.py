class EIXError(Exception):
    pass


class ContractError(EIXError, ValueError):
    """An operation was called outside its precondition."""


class RejectedInstanceError(EIXError, ValueError):
    """An instance is non-finite or not scaled into [0, 1]."""


class SnapshotError(EIXError, ValueError):
    """A model document could not be parsed or has the wrong version."""
