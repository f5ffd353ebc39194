"""
Global kclust exception classes.
"""

from typing import Optional


class KClusterError(Exception):
    """
    Base class for every error raised by kclust.
    """

    def __init__(self, message: str) -> None:
        """
        Initialize with a human readable message.

        Args:
            message: Description of the failure.
        """
        super().__init__(message)
        self.message = message


class ImproperlyConfigured(KClusterError):
    """
    Raised when kclust is not configured correctly.
    """


class ParameterError(KClusterError):
    """
    Raised when a numeric parameter is outside its admissible range.
    """

    def __init__(self, name: str, detail: str) -> None:
        """
        Initialize with the parameter name and the violated constraint.

        Args:
            name: Parameter name, e.g. ``eps``.
            detail: Explanation of the violation.
        """
        self.name = name
        self.detail = detail
        super().__init__(f"invalid {name}: {detail}")


class StructuralError(KClusterError):
    """
    Raised when inputs are mutually inconsistent (dimension mismatch,
    unknown cell, index out of range).
    """


class DomainError(KClusterError):
    """
    Raised when an operation is undefined on its input, such as the cost of
    an empty center set.
    """


class DegenerateInstanceError(KClusterError):
    """
    Raised when an instance cannot be normalised because all of its points
    coincide.
    """


class ParseError(KClusterError):
    """
    Raised when an instance or solution file is malformed.
    """

    def __init__(self, line: Optional[int], detail: str) -> None:
        """
        Initialize with the offending line and the reason.

        Args:
            line: 1-based line number, or None at end of input.
            detail: Explanation of the problem.
        """
        self.line = line
        self.detail = detail
        where = f"line {line}" if line is not None else "end of input"
        super().__init__(f"{where}: {detail}")


class SizeLimitError(KClusterError):
    """
    Raised when an exhaustive enumeration would exceed its configured cap.
    """

    def __init__(self, size: int, cap: int, what: str = "subsets") -> None:
        """
        Initialize with the requested and permitted sizes.

        Args:
            size: Number of items the enumeration would visit.
            cap: Configured maximum.
            what: Name of the enumerated objects.
        """
        self.size = size
        self.cap = cap
        super().__init__(f"{size} {what} exceed the cap of {cap}")


class InfeasibleError(KClusterError):
    """
    Raised when the dynamic program finds no root configuration using at
    most k centers.
    """


class InternalAssertionError(KClusterError):
    """
    Raised when an internal invariant is violated.
    """
