"""
QJH Utils - logging, validation, output files and quick plots.
"""

from .io import atomic_write_text, render_csv, sha256_file, write_csv, write_json, write_manifest
from .logging import LogContext, get_logger, log_operation, setup_logging
from .validation import (
    validate_conformable,
    validate_finite,
    validate_hermitian,
    validate_probability_vector,
    validate_square,
    validate_unitary,
)

__all__ = [
    "atomic_write_text",
    "render_csv",
    "sha256_file",
    "write_csv",
    "write_json",
    "write_manifest",
    "LogContext",
    "get_logger",
    "log_operation",
    "setup_logging",
    "validate_conformable",
    "validate_finite",
    "validate_hermitian",
    "validate_probability_vector",
    "validate_square",
    "validate_unitary",
]
