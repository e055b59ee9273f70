from __future__ import annotations

import os
import logging
from functools import lru_cache
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


def _env_truthy(name: str, default: bool = False) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "y", "on"}


class Settings(BaseModel):
    """Process-wide defaults, read from ``DYADIC_*`` environment variables."""

    model_config = ConfigDict(frozen=True)

    max_scale: int = Field(26, ge=1, le=40)
    ifs_max_iter: int = Field(256, ge=1)
    threads: int = Field(1, ge=1)
    h_cap: float = Field(10.0, gt=0)
    qc_recursion: Literal["previous", "fixed-point"] = "previous"
    log_level: str = "INFO"
    json_logs: bool = False

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            max_scale=int(os.getenv("DYADIC_MAX_SCALE", "26")),
            ifs_max_iter=int(os.getenv("DYADIC_IFS_MAX_ITER", "256")),
            threads=int(os.getenv("DYADIC_THREADS", "1")),
            h_cap=float(os.getenv("DYADIC_H_CAP", "10.0")),
            qc_recursion=os.getenv("DYADIC_QC_RECURSION", "previous"),
            log_level=os.getenv("DYADIC_LOG_LEVEL", "INFO").upper(),
            json_logs=_env_truthy("DYADIC_JSON_LOGS", default=False),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()


def configure_logging(level: str | None = None) -> logging.Logger:
    """Install the console log format used by the CLI and the servers."""
    settings = get_settings()
    if settings.json_logs:
        fmt = '{"time": "%(asctime)s", "level": "%(levelname)s", "message": "%(message)s"}'
    else:
        fmt = "%(asctime)s | %(levelname)-5s | %(message)s"
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper(), logging.INFO),
        format=fmt,
        datefmt="%H:%M:%S",
    )
    return logging.getLogger("dyadic")


def resolve_max_scale(max_scale: int | None) -> int:
    return get_settings().max_scale if max_scale is None else max_scale


def resolve_threads(threads: int | None) -> int:
    return get_settings().threads if threads is None else max(1, threads)
