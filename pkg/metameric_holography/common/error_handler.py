"""
Error types and centralized error handling for the hologram toolkit.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

from .logger import Logger


class MetaholoError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(MetaholoError, ValueError):
    """Raised when an operation receives data that violates its preconditions."""


class InvalidConfigError(MetaholoError, ValueError):
    """Raised when configuration values are out of range or inconsistent."""


class UnsupportedConfigError(InvalidConfigError):
    """Raised for configurations the pipeline cannot differentiate through."""


class ConfigConflictError(InvalidConfigError):
    """Raised when stored metadata disagrees with the requested run."""


class FormatError(MetaholoError):
    """Raised for corrupt or inconsistent files."""

    def __init__(self, message: str, filename: Optional[str] = None):
        super().__init__(message)
        self.filename = filename


class OptimisationDivergedError(MetaholoError):
    """Raised when the loss or its gradient stops being finite."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class ErrorType(Enum):
    """Types of errors that can occur while running the pipeline."""
    CONFIGURATION = "configuration"
    FILE_ACCESS = "file_access"
    FILE_FORMAT = "file_format"
    INVALID_INPUT = "invalid_input"
    DIVERGENCE = "divergence"
    UNKNOWN = "unknown"


# CLI exit codes per error type
EXIT_CODES: Dict[ErrorType, int] = {
    ErrorType.CONFIGURATION: 2,
    ErrorType.INVALID_INPUT: 2,
    ErrorType.FILE_ACCESS: 3,
    ErrorType.FILE_FORMAT: 3,
    ErrorType.DIVERGENCE: 4,
    ErrorType.UNKNOWN: 1,
}


@dataclass
class ErrorContext:
    """Context information for error handling."""
    error_type: ErrorType
    operation: str
    file_path: Optional[str] = None
    iteration: Optional[int] = None
    additional_info: Optional[dict] = None


def classify(error: BaseException) -> ErrorType:
    """Map an exception onto an ErrorType."""
    if isinstance(error, OptimisationDivergedError):
        return ErrorType.DIVERGENCE
    if isinstance(error, FormatError):
        return ErrorType.FILE_FORMAT
    if isinstance(error, InvalidConfigError):
        return ErrorType.CONFIGURATION
    if isinstance(error, InvalidInputError):
        return ErrorType.INVALID_INPUT
    if isinstance(error, (FileNotFoundError, PermissionError, IsADirectoryError)):
        return ErrorType.FILE_ACCESS
    return ErrorType.UNKNOWN


class ErrorHandler:
    """Centralized error logging and exit-code mapping."""

    def __init__(self, logger: Optional[Logger] = None):
        """
        Initialize error handler.

        Args:
            logger: Optional logger instance
        """
        self.logger = logger or Logger()
        self.error_counts: Dict[str, int] = {}
        self.operation_counts: Dict[str, int] = {}

    def handle(self, error: BaseException, context: Optional[ErrorContext] = None) -> int:
        """
        Log an error with guidance and return the matching exit code.

        Args:
            error: The exception that occurred
            context: Optional context; its error_type wins over classification

        Returns:
            Process exit code for the error
        """
        error_type = context.error_type if context else classify(error)
        operation = context.operation if context else "run"

        self._log_error(error, operation, context)
        self._update_error_stats(error, operation)
        self._suggest(error, error_type, context)

        return EXIT_CODES[error_type]

    def handle_file_error(self, error: Exception, file_path: Optional[str], operation: str) -> int:
        """
        Handle file-related errors.

        Args:
            error: The exception that occurred
            file_path: Path to the file that caused the error
            operation: Operation being performed
        """
        error_type = ErrorType.FILE_FORMAT if isinstance(error, FormatError) else ErrorType.FILE_ACCESS
        context = ErrorContext(error_type=error_type, operation=operation, file_path=file_path)
        return self.handle(error, context)

    def _log_error(self, error: BaseException, operation: str,
                   context: Optional[ErrorContext] = None) -> None:
        """Log error with context information."""
        message = f"Error in {operation}: {str(error)}"
        if context:
            if context.file_path:
                message += f" (file: {context.file_path})"
            if context.iteration is not None:
                message += f" (iteration: {context.iteration})"
        self.logger.error(message)

    def _suggest(self, error: BaseException, error_type: ErrorType,
                 context: Optional[ErrorContext]) -> None:
        """Provide a recovery hint for common failures."""
        if error_type == ErrorType.FILE_ACCESS:
            if isinstance(error, FileNotFoundError):
                self.logger.info("Suggestion: check the path passed on the command line or in the config file")
            elif isinstance(error, PermissionError):
                self.logger.info("Suggestion: check file permissions of the input and output directories")
        elif error_type == ErrorType.FILE_FORMAT:
            self.logger.info("Suggestion: re-export the phase set; sidecar and image files must come from one run")
        elif error_type == ErrorType.CONFIGURATION:
            self.logger.info("Suggestion: run with --log-level DEBUG and compare against config.yaml.template")
        elif error_type == ErrorType.DIVERGENCE:
            self.logger.info("Suggestion: lower --lr or check the target for non-finite pixels")

    def _update_error_stats(self, error: BaseException, operation: str) -> None:
        """Update error statistics."""
        error_name = type(error).__name__
        self.error_counts[error_name] = self.error_counts.get(error_name, 0) + 1
        self.operation_counts[operation] = self.operation_counts.get(operation, 0) + 1

    def get_error_summary(self) -> dict:
        """
        Get summary of errors encountered.

        Returns:
            Dictionary with error statistics
        """
        return {
            "error_counts": dict(self.error_counts),
            "operation_counts": dict(self.operation_counts),
            "total_errors": sum(self.error_counts.values()),
        }
