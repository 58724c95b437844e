"""Exception hierarchy shared by every module of the package."""


class CascadeError(Exception):
    """Base class for all errors raised by cascade_kpz."""


class DomainError(CascadeError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(CascadeError, ValueError):
    """A caller broke an operation's precondition."""


class PreconditionError(ContractError):
    """A model or configuration fails a validity gate required by the operation."""


class ResourceError(CascadeError, RuntimeError):
    """An enumeration would exceed the configured node budget."""

    def __init__(self, message, depth=None, set_label=None):
        super().__init__(message)
        self.depth = depth
        self.set_label = set_label


class EstimationError(CascadeError, RuntimeError):
    """A dimension estimate could not be formed; ``diagnostics`` says why."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(CascadeError, ValueError):
    """Malformed experiment configuration."""

    def __init__(self, message, field=None, line=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.field = field
        self.line = line


class ReplayError(CascadeError, RuntimeError):
    """A provenance record cannot be replayed by this build."""
