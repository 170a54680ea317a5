"""
Custom exceptions for the hashing toolkit.
Provides domain-specific exceptions for better error handling.
"""


class HashingToolkitException(Exception):
    """Base exception for all hashing toolkit exceptions."""

    def __init__(self, message: str = None, code: str = None):
        self.message = message or "An error occurred"
        self.code = code or "UNKNOWN_ERROR"
        super().__init__(self.message)


class ContractViolationException(HashingToolkitException):
    """Raised when an operation is called with inconsistent shapes or out-of-range arguments."""

    def __init__(self, message: str = "Contract violation"):
        super().__init__(message, "CONTRACT_VIOLATION")


class InputValidationException(HashingToolkitException):
    """Raised when input values are malformed (e.g. NaN or infinite entries)."""

    def __init__(self, message: str = "Invalid input", errors: dict = None):
        super().__init__(message, "INVALID_INPUT")
        self.errors = errors or {}


class ConfigurationException(HashingToolkitException):
    """Raised when a configuration value is invalid."""

    def __init__(self, message: str = "Invalid configuration", errors: dict = None):
        super().__init__(message, "CONFIG_ERROR")
        self.errors = errors or {}


class TrainingDivergedException(HashingToolkitException):
    """Raised when the objective becomes non-finite during training."""

    def __init__(self, iteration: int, message: str = None):
        message = message or f"Objective became non-finite at iteration {iteration}"
        super().__init__(message, "TRAINING_DIVERGED")
        self.iteration = iteration


class UndefinedAveragePrecisionException(HashingToolkitException):
    """Raised when average precision is requested for a query without relevant items."""

    def __init__(self, message: str = "Average precision is undefined for an empty relevant set"):
        super().__init__(message, "UNDEFINED_AP")


class EmptyEvaluationException(HashingToolkitException):
    """Raised when no query is left to average over."""

    def __init__(self, message: str = "No query with a non-empty relevant set"):
        super().__init__(message, "EMPTY_EVALUATION")


class DatasetFormatException(HashingToolkitException):
    """Raised when a matrix, codes or model file is malformed."""

    def __init__(self, path: str, message: str = None):
        message = message or f"Malformed file: {path}"
        super().__init__(message, "DATASET_FORMAT")
        self.path = path


class RowCountMismatchException(HashingToolkitException):
    """Raised when the views of one dataset disagree on the number of samples."""

    def __init__(self, counts: list, message: str = None):
        message = message or f"Views disagree on row count: {counts}"
        super().__init__(message, "ROW_COUNT_MISMATCH")
        self.counts = counts


class EmptyLabelException(HashingToolkitException):
    """Raised when no labelled sample is left after filtering."""

    def __init__(self, message: str = "Every row has an empty label vector"):
        super().__init__(message, "EMPTY_LABELS")


class ArtifactNotFoundException(HashingToolkitException):
    """Raised when a dataset, model or codes file does not exist."""

    def __init__(self, path: str, message: str = None):
        message = message or f"File not found: {path}"
        super().__init__(message, "ARTIFACT_NOT_FOUND")
        self.path = path
