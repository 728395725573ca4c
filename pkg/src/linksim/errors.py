"""Exception types shared across the package."""


class Error(Exception):
    """Base class for all errors raised by this package."""


class ParseError(Error):
    """An input file is malformed; the message carries file and line context."""


class IntegrityError(Error):
    """Data violates a cross-record guarantee (duplicate ids, dangling refs, tampering)."""


class ContractError(Error):
    """A caller broke an operation precondition."""


class ConfigError(Error):
    """A run configuration or schema is invalid."""


class DerivationError(Error):
    """A derived attribute could not be computed from its source value."""
