"""Exception types shared across the package."""


class ExamError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(ExamError, ValueError):
    """Tensor dimensions do not line up for the requested operation."""


class ConfigError(ExamError, ValueError):
    """Invalid run configuration or config file."""


class DataError(ExamError, ValueError):
    """Malformed dataset file; message carries the offending line number."""


class ContractError(ExamError, ValueError):
    """Model and instance disagree on task or label shape."""


class UnsupportedModelError(ExamError, TypeError):
    """Operation requested on a model kind that cannot provide it."""


class UndefinedMetricError(ExamError, ValueError):
    """Metric evaluated on an empty or degenerate input."""


class NonFiniteGradientError(ExamError, FloatingPointError):
    """Optimizer step aborted: a parameter gradient is NaN or infinite."""

    def __init__(self, param_name: str):
        self.param_name = param_name
        super().__init__(f"non-finite gradient for parameter '{param_name}'")


class CheckpointError(ExamError, ValueError):
    """Checkpoint directory missing, incomplete, or inconsistent."""
