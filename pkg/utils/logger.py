"""
Structured Logging - JSON formatted logs for synthesis, verification and simulation runs
"""

import json
import logging
import sys
from datetime import datetime, timezone

from config.environments import current_config


class StructuredLogger:
    """Logger facade that attaches keyword fields to every record"""

    def __init__(self, name: str = "pinstt", level: str = "INFO", fmt: str = "json"):
        self.logger = logging.getLogger(name)
        self.logger.propagate = False
        self.configure(level=level, fmt=fmt)

    def configure(self, level: str | None = None, fmt: str | None = None):
        """Reset level and/or output format"""
        if level is not None:
            self.logger.setLevel(level.upper())

        if fmt is not None:
            self.logger.handlers = []
            handler = logging.StreamHandler(sys.stderr)
            handler.setFormatter(JsonFormatter() if fmt == "json" else TextFormatter())
            self.logger.addHandler(handler)

    def info(self, message: str, **fields):
        self.logger.info(message, extra={"fields": fields}, stacklevel=2)

    def error(self, message: str, **fields):
        self.logger.error(message, extra={"fields": fields}, stacklevel=2)

    def warning(self, message: str, **fields):
        self.logger.warning(message, extra={"fields": fields}, stacklevel=2)

    def debug(self, message: str, **fields):
        self.logger.debug(message, extra={"fields": fields}, stacklevel=2)


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


class JsonFormatter(logging.Formatter):
    """Format logs as JSON"""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        for key, value in getattr(record, "fields", {}).items():
            log_data[key] = _jsonable(value)

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


class TextFormatter(logging.Formatter):
    """Human readable single-line format"""

    def format(self, record: logging.LogRecord) -> str:
        fields = getattr(record, "fields", {})
        extra = " ".join(f"{k}={_jsonable(v)}" for k, v in fields.items())
        line = f"{record.levelname:<7} {record.name}.{record.module}: {record.getMessage()}"
        if extra:
            line = f"{line} | {extra}"
        if record.exc_info:
            line = f"{line}\n{self.formatException(record.exc_info)}"
        return line


# Default logger instance
logger = StructuredLogger(level=current_config.LOG_LEVEL, fmt=current_config.LOG_FORMAT)
