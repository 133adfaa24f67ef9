"""Exception taxonomy shared across the package."""


class ConvsumError(Exception):
    """Base class for all package errors."""


class ContractError(ConvsumError):
    """An argument violated a documented precondition (shape, range, ordering)."""


class DegenerateInputError(ConvsumError):
    """Structurally valid input with no well-defined result (e.g. fully masked row)."""


class NonFiniteError(ConvsumError):
    """A NaN or Inf appeared in an operation; the message names the op."""


class ConfigError(ConvsumError):
    """Invalid, unknown, or inconsistent configuration (including checkpoint mismatch)."""


class DataError(ConvsumError):
    """Missing or malformed input data (corpus files, vocab files, JSONL lines)."""
