"""
Exception hierarchy for QJH

Every error carries the process exit code the CLI reports for it.
"""

from typing import Any, Optional

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class QJHError(Exception):
    """Base error with an exit code and optional structured data"""

    def __init__(self, message: str, code: int = EXIT_RUNTIME, data: Optional[Any] = None):
        super().__init__(message)
        self.code = code
        self.data = data


class NumericValidationError(QJHError):
    """Input fails a structural check (shape, Hermiticity, unitarity)"""

    def __init__(self, message: str, data: Optional[Any] = None):
        super().__init__(message, code=EXIT_CONFIG, data=data)


class DomainError(QJHError):
    """Input is well-formed but outside the mathematical domain of the operation"""

    def __init__(self, message: str, data: Optional[Any] = None):
        super().__init__(message, code=EXIT_RUNTIME, data=data)


class IntegrationError(QJHError):
    """A time integrator lost stability or produced non-finite values"""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message, code=EXIT_RUNTIME, data={"step": step})
        self.step = step


class SamplerError(QJHError):
    """A Markov chain could not proceed"""

    def __init__(self, message: str, data: Optional[Any] = None):
        super().__init__(message, code=EXIT_RUNTIME, data=data)


class ConfigError(QJHError):
    """Run configuration is malformed or out of range"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message, code=EXIT_CONFIG, data={"key": key})
        self.key = key
