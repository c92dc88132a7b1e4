"""Custom exceptions and error handling for the toolkit."""

from typing import Any, Optional


class TbcnnError(Exception):
    """Base exception for toolkit errors."""

    def __init__(
        self,
        message: str,
        error_type: str = "TbcnnError",
        details: Optional[dict[str, Any]] = None,
    ):
        """
        Initialize error.

        Args:
            message: Human-readable error message
            error_type: Type/category of error
            details: Additional context about the error
        """
        super().__init__(message)
        self.message = message
        self.error_type = error_type
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        """Convert error to dictionary format for reports and CLI output."""
        result: dict[str, Any] = {
            "success": False,
            "error": self.message,
            "error_type": self.error_type,
        }
        if self.details:
            result["details"] = self.details
        return result


def _compact(**fields: Any) -> dict[str, Any]:
    return {key: value for key, value in fields.items() if value is not None}


class ValidationError(TbcnnError):
    """Error raised when a parameter fails validation outside pydantic models."""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        value: Any = None,
        constraint: Optional[str] = None,
    ):
        """
        Initialize validation error.

        Args:
            message: Human-readable error message
            field: Name of the field that failed validation
            value: The invalid value
            constraint: Description of the constraint that was violated
        """
        super().__init__(
            message=message,
            error_type="ValidationError",
            details=_compact(field=field, value=value, constraint=constraint),
        )


class DatasetError(TbcnnError):
    """Error raised when a dataset cannot be read or contains bad records."""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        label: Optional[str] = None,
    ):
        """
        Initialize dataset error.

        Args:
            message: Human-readable error message
            path: Offending file or directory
            line: 1-based line number inside a delimited file
            label: The unrecognised label token
        """
        super().__init__(
            message=message,
            error_type="DatasetError",
            details=_compact(path=path, line=line, label=label),
        )


class VocabularyError(TbcnnError):
    """Error raised when no word survives the vocabulary cutoff."""

    def __init__(self, min_count: int, max_size: int):
        super().__init__(
            message=f"No word occurs at least {min_count} times; the vocabulary would be empty.",
            error_type="VocabularyError",
            details={"min_count": min_count, "max_size": max_size},
        )


class EmbeddingFormatError(TbcnnError):
    """Error raised when a word2vec file is malformed."""

    def __init__(
        self,
        message: str,
        path: str,
        line: Optional[int] = None,
        expected_dim: Optional[int] = None,
        found_dim: Optional[int] = None,
    ):
        """
        Initialize embedding format error.

        Args:
            message: Human-readable error message
            path: The vector file
            line: 1-based line (text) or record (binary) number
            expected_dim: Dimension announced by the header
            found_dim: Dimension found on the offending record
        """
        super().__init__(
            message=message,
            error_type="EmbeddingFormatError",
            details=_compact(
                path=path, line=line, expected_dim=expected_dim, found_dim=found_dim
            ),
        )


class TopicModelError(TbcnnError):
    """Error raised when an LDA fit, sweep or persistence step fails."""

    def __init__(
        self,
        message: str,
        k: Optional[int] = None,
        document: Optional[int] = None,
    ):
        super().__init__(
            message=message,
            error_type="TopicModelError",
            details=_compact(k=k, document=document),
        )


class TopicResolutionError(TbcnnError):
    """Error raised when a document cannot be given a topic."""

    def __init__(self, doc_id: int, split: str):
        super().__init__(
            message=f"Document {doc_id} of split '{split}' has no topic assignment and fold-in is unavailable.",
            error_type="TopicResolutionError",
            details={"doc_id": doc_id, "split": split},
        )


class GradientError(TbcnnError):
    """Error raised when a gradient or parameter becomes non-finite."""

    def __init__(
        self,
        group: str,
        epoch: Optional[int] = None,
        batch: Optional[int] = None,
    ):
        """
        Initialize gradient error.

        Args:
            group: Parameter group holding the non-finite value
            epoch: 1-based epoch in which it happened
            batch: 1-based batch index within the epoch
        """
        where = ""
        if epoch is not None and batch is not None:
            where = f" at epoch {epoch}, batch {batch}"
        super().__init__(
            message=f"Non-finite gradient in '{group}'{where}; the step was aborted.",
            error_type="GradientError",
            details=_compact(group=group, epoch=epoch, batch=batch),
        )


class LinearModelError(TbcnnError):
    """Error raised when a baseline cannot be trained."""

    def __init__(self, message: str, step: Optional[int] = None, reason: Optional[str] = None):
        super().__init__(
            message=message,
            error_type="LinearModelError",
            details=_compact(step=step, reason=reason),
        )


class StageError(TbcnnError):
    """Error raised when a pipeline stage fails."""

    def __init__(self, stage: str, cause: BaseException):
        """
        Initialize stage error.

        Args:
            stage: Name of the failing stage
            cause: The underlying exception
        """
        details: dict[str, Any] = {"stage": stage, "cause": str(cause)}
        if isinstance(cause, TbcnnError):
            details["cause_type"] = cause.error_type
            if cause.details:
                details["cause_details"] = cause.details
        super().__init__(
            message=f"Stage '{stage}' failed: {cause}",
            error_type="StageError",
            details=details,
        )


def format_error_response(error: Exception) -> dict[str, Any]:
    """
    Format any exception into a standardized error response.

    Args:
        error: The exception to format

    Returns:
        Dictionary with standardized error format
    """
    if isinstance(error, TbcnnError):
        return error.to_dict()

    # Handle Pydantic validation errors
    if hasattr(error, "errors"):
        errors = error.errors()  # pyrefly: ignore
        if errors:
            first_error = errors[0]
            field = ".".join(str(loc) for loc in first_error.get("loc", []))
            message = first_error.get("msg", str(error))

            return {
                "success": False,
                "error": f"Validation error for field '{field}': {message}",
                "error_type": "ValidationError",
                "details": {"field": field, "validation_errors": errors},
            }

    return {"success": False, "error": str(error), "error_type": type(error).__name__}
