"""
Configuration management for QJH
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, Field, field_validator
from pydantic_settings import BaseSettings


class LoggingConfig(BaseModel):
    """Logging configuration"""
    level: str = Field(default="INFO", description="Log level")
    format: str = Field(default="json", description="Log format (json or text)")
    file_path: Optional[Path] = Field(default=None, description="Log file path")
    max_size_mb: int = Field(default=100, description="Max log file size in MB")
    backup_count: int = Field(default=5, description="Number of log backups to keep")

    @field_validator("format")
    def validate_format(cls, v: str) -> str:
        """Only json and text formatters exist"""
        v = v.lower()
        if v not in ("json", "text"):
            raise ValueError("log format must be 'json' or 'text'")
        return v


class Settings(BaseSettings):
    """Process-wide settings, read from QJH_* environment variables and .env"""

    seed: Optional[int] = Field(default=None, description="Fallback RNG seed when none is given")
    threads: Optional[int] = Field(
        default=None, ge=1, description="Worker pool size (default: logical cores)"
    )
    output_dir: Path = Field(default=Path("qjh-out"), description="Default output directory")
    max_history_bytes: int = Field(
        default=512 * 1024 * 1024,
        gt=0,
        description="Upper bound on stored integration history",
    )

    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "env_prefix": "QJH_",
        "env_nested_delimiter": "__",
        "case_sensitive": False,
    }

    @field_validator("output_dir", mode="before")
    def coerce_path(cls, v) -> Path:
        """Coerce string paths to Path objects."""
        if isinstance(v, str):
            return Path(v)
        return v

    @property
    def worker_count(self) -> int:
        """Effective worker pool size"""
        return self.threads or os.cpu_count() or 1

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to a JSON-friendly dictionary"""
        return self.model_dump(mode="json")


# Singleton instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get settings singleton"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """Reload settings from environment"""
    global _settings
    _settings = Settings()
    return _settings
