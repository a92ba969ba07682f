"""
Logging configuration for QJH
"""

import functools
import logging
import logging.handlers
import sys
import time
from contextvars import ContextVar, Token
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, Optional

try:
    # New import path (pythonjsonlogger >= 3.0)
    from pythonjsonlogger.json import JsonFormatter as BaseJsonFormatter
except ImportError:
    # Fallback to old import path
    from pythonjsonlogger import jsonlogger
    BaseJsonFormatter = jsonlogger.JsonFormatter

from ..config import get_settings

APP_NAME = "qjh"


class ContextFilter(logging.Filter):
    """Add context information to log records"""

    def filter(self, record: logging.LogRecord) -> bool:
        """Add custom fields to log record"""
        record.app_name = APP_NAME
        record.timestamp = datetime.now(timezone.utc).isoformat()
        return True


class CustomJsonFormatter(BaseJsonFormatter):
    """Custom JSON formatter with additional fields"""

    def add_fields(
        self,
        log_record: Dict[str, Any],
        record: logging.LogRecord,
        message_dict: Dict[str, Any],
    ) -> None:
        """Add custom fields to JSON log"""
        super().add_fields(log_record, record, message_dict)

        log_record["level"] = record.levelname
        log_record["logger"] = record.name
        log_record["timestamp"] = getattr(
            record, "timestamp", datetime.now(timezone.utc).isoformat()
        )
        log_record["app_name"] = getattr(record, "app_name", APP_NAME)

        if record.exc_info:
            log_record["exception"] = self.formatException(record.exc_info)


def setup_logging(log_level: Optional[str] = None) -> None:
    """
    Configure logging for the application

    Args:
        log_level: Override log level from settings
    """
    settings = get_settings()

    level = log_level or settings.logging.level
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    if settings.logging.format == "json":
        formatter: logging.Formatter = CustomJsonFormatter(
            "%(timestamp)s %(level)s %(name)s %(message)s"
        )
    else:
        formatter = logging.Formatter(
            "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

    # stdout carries the run summary JSON, so logs go to stderr
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.addFilter(ContextFilter())
    root_logger.addHandler(console_handler)

    if settings.logging.file_path:
        file_path = Path(settings.logging.file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.handlers.RotatingFileHandler(
            filename=str(file_path),
            maxBytes=settings.logging.max_size_mb * 1024 * 1024,
            backupCount=settings.logging.backup_count,
            encoding="utf-8",
        )
        file_handler.setFormatter(formatter)
        file_handler.addFilter(ContextFilter())
        root_logger.addHandler(file_handler)

    logger = logging.getLogger(__name__)
    logger.debug(
        "Logging configured",
        extra={
            "log_level": level,
            "log_format": settings.logging.format,
            "file_logging": bool(settings.logging.file_path),
        },
    )


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger instance

    Args:
        name: Logger name (usually __name__)

    Returns:
        Configured logger instance
    """
    return logging.getLogger(name)


_log_context: ContextVar[Dict[str, Any]] = ContextVar("qjh_log_context", default={})
_base_record_factory = logging.getLogRecordFactory()


def _context_record_factory(*args: Any, **kwargs: Any) -> logging.LogRecord:
    record = _base_record_factory(*args, **kwargs)
    for key, value in _log_context.get().items():
        setattr(record, key, value)
    return record


logging.setLogRecordFactory(_context_record_factory)


class LogContext:
    """
    Context manager for adding temporary log context

    Fields live in a ContextVar, so chains logging from worker threads each
    see only their own fields.
    """

    def __init__(self, logger: logging.Logger, **kwargs: Any):
        self.logger = logger
        self.context = kwargs
        self._token: Optional[Token] = None

    def __enter__(self) -> "LogContext":
        """Enter context and add fields"""
        self._token = _log_context.set({**_log_context.get(), **self.context})
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        """Exit context and restore the previous fields"""
        if self._token is not None:
            _log_context.reset(self._token)
            self._token = None


def log_operation(operation_type: str) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """
    Decorator to log start, completion and failure of an operation

    Args:
        operation_type: Name recorded on every log line of the operation
    """

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = get_logger(func.__module__)
            started = time.perf_counter()

            with LogContext(logger, operation_type=operation_type):
                logger.info(f"Starting {operation_type}")
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    logger.error(
                        f"Failed {operation_type}", exc_info=True, extra={"error": str(e)}
                    )
                    raise
                logger.info(
                    f"Completed {operation_type}",
                    extra={"duration_seconds": round(time.perf_counter() - started, 3)},
                )
                return result

        return wrapper

    return decorator
