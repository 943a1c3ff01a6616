"""Exception hierarchy shared by every layer of the package."""


class HMAError(Exception):
    """Base class; the CLI turns these into a one-line message and exit code 1."""


class DimensionError(HMAError, ValueError):
    pass


class RangeError(HMAError, IndexError):
    pass


class ContractError(HMAError):
    """A documented precondition of an operation was violated."""


class FormatError(HMAError, ValueError):
    """Malformed file content (corpus, vectors, checkpoint, config)."""


class SchemaError(FormatError):
    pass
