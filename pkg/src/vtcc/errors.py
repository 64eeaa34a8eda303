"""Exception types shared across the engine."""


class VtccError(Exception):
    """Base class for all engine errors."""


class ShapeError(VtccError):
    """Operand shapes or dims are incompatible with an operation."""


class ContractError(VtccError):
    """A documented precondition of an operation was violated."""


class NumericGuardError(VtccError):
    """A numeric guard tripped (zero norms, non-finite losses)."""


class ConfigError(VtccError):
    """Malformed or inconsistent run configuration."""


class DataFormatError(VtccError):
    """A dataset file is unreadable, malformed or geometrically inconsistent."""


class CheckpointError(VtccError):
    """Base class for checkpoint I/O failures."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint was written by an incompatible format version."""


class CheckpointIntegrityError(CheckpointError):
    """Checkpoint payload is truncated or fails its checksum."""


class TrainingDiverged(NumericGuardError):
    """A loss term became non-finite; carries per-term diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
