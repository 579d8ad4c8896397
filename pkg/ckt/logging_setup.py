from __future__ import annotations

"""Structured JSON logging for the ckt library and CLI.

Library modules log through ``logging.getLogger(__name__)``; those loggers
are children of ``ckt`` and reach the handler installed here once the CLI
(or a test) calls :func:`configure_json_logging`.

 * Thread-safe idempotent configuration (one handler per logger name)
 * Reconfiguration updates level and static fields in place
 * UTC timestamps with millisecond precision (Z suffix)
 * User fields nested under ``fields`` so they never shadow reserved keys
 * Non-serializable values rendered with ``str``

Usage example:
    from ckt.logging_setup import configure_json_logging
    logger = configure_json_logging(level="INFO")
    logger.info(
        "sweep finished",
        extra={"event": "sweep_done", "fields": {"points": 61, "j": 10}},
    )
"""

from datetime import datetime, timezone
import json
import logging
import os
import sys
from threading import RLock
from typing import Any, Mapping, MutableMapping

DEFAULT_LOGGER_NAME = "ckt"
LEVEL_ENV = "CKT_LOG_LEVEL"

_configured_by_name: dict[str, logging.Handler] = {}
_lock = RLock()

RESERVED = {
    "ts",
    "level",
    "logger",
    "pid",
    "tid",
    "module",
    "func",
    "line",
    "msg",
    "event",
}


def _coerce_level(level: int | str | None) -> int:
    if isinstance(level, int):
        return level
    if isinstance(level, str):
        lvl = logging._nameToLevel.get(level.upper())  # type: ignore[attr-defined]
        if isinstance(lvl, int):
            return lvl
    return logging.INFO


def level_from_env(default: str = "WARNING") -> str:
    """Level requested through ``CKT_LOG_LEVEL`` (falls back to ``default``)."""
    return os.getenv(LEVEL_ENV, default) or default


class JsonFormatter(logging.Formatter):
    """One JSON object per record; never raises on odd payloads."""

    def __init__(self, *, static: dict[str, Any] | None = None) -> None:
        super().__init__()
        self._static = static or {}

    def format(self, record: logging.LogRecord) -> str:
        ts = (
            datetime.fromtimestamp(record.created, tz=timezone.utc)
            .isoformat(timespec="milliseconds")
            .replace("+00:00", "Z")
        )
        msg = record.getMessage()
        event = getattr(record, "event", None)
        if event == msg:
            event = None

        base: dict[str, Any] = {
            "ts": ts,
            "level": record.levelname.lower(),
            "logger": record.name,
            "pid": record.process,
            "tid": record.thread,
            "module": record.module,
            "func": record.funcName,
            "line": record.lineno,
            "msg": msg,
        }
        if event:
            base["event"] = event
        if self._static:
            base["static"] = self._static

        fields_obj = getattr(record, "fields", {})
        user_fields: MutableMapping[str, Any]
        if isinstance(fields_obj, Mapping):
            user_fields = dict(fields_obj)
        else:
            user_fields = {"_fields_type": str(type(fields_obj))}
        if user_fields:
            base["fields"] = user_fields
        if record.exc_info:
            base["exc"] = self.formatException(record.exc_info)

        try:
            return json.dumps(base, ensure_ascii=False, separators=(",", ":"), default=str)
        except Exception as exc:  # pragma: no cover
            fallback = {
                "ts": ts,
                "level": "error",
                "logger": record.name,
                "msg": "log_serialization_failed",
                "error": str(exc),
            }
            return json.dumps(fallback, separators=(",", ":"))


def configure_json_logging(
    *,
    logger_name: str = DEFAULT_LOGGER_NAME,
    level: int | str = "INFO",
    stream: Any | None = None,
    force: bool = False,
    extra_static: dict[str, Any] | None = None,
) -> logging.Logger:
    """Configure or update the JSON handler of ``logger_name``.

    Parameters
    ----------
    logger_name: Logger to configure; ``ckt`` covers every library module.
    level: Log level (int or name string).
    stream: Handler stream. Defaults to ``sys.stderr`` so CSV on stdout stays clean.
    force: Replace an existing handler instead of updating it.
    extra_static: Metadata emitted under ``static`` on every line.
    """
    numeric_level = _coerce_level(level)
    with _lock:
        logger = logging.getLogger(logger_name)
        logger.propagate = False
        logger.setLevel(numeric_level)

        existing = _configured_by_name.get(logger_name)
        if existing is not None and existing not in logger.handlers:
            existing = None

        if existing is not None and not force:
            existing.setLevel(numeric_level)
            existing.setFormatter(JsonFormatter(static=extra_static))
            return logger

        if existing is not None:
            logger.removeHandler(existing)

        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setLevel(numeric_level)
        handler.setFormatter(JsonFormatter(static=extra_static))
        setattr(handler, "_ckt_json", True)
        logger.addHandler(handler)
        _configured_by_name[logger_name] = handler
        return logger


def get_logger(name: str = DEFAULT_LOGGER_NAME, **kwargs: Any) -> logging.Logger:
    """Configured logger; accepts the keyword arguments of configure_json_logging."""
    if "logger_name" in kwargs:
        raise TypeError("Use 'name' instead of 'logger_name' with get_logger().")
    return configure_json_logging(logger_name=name, **kwargs)


def log_event(
    logger: logging.Logger,
    event: str,
    message: str | None = None,
    *,
    level: int = logging.INFO,
    **fields: Any,
) -> None:
    """Emit ``event`` on ``logger`` with ``fields`` nested under ``fields``.

    ``message`` becomes ``msg``; without it the event name is the message.
    """
    logger.log(level, message or event, extra={"event": event, "fields": fields}, stacklevel=2)


__all__ = [
    "configure_json_logging",
    "get_logger",
    "log_event",
    "level_from_env",
    "JsonFormatter",
    "RESERVED",
]
