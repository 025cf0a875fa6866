import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

# LogRecord attributes that are never copied into the JSON payload.
_RESERVED = frozenset([
    'name', 'msg', 'args', 'levelno', 'levelname', 'pathname', 'filename', 'module',
    'exc_info', 'exc_text', 'stack_info', 'lineno', 'funcName', 'created', 'msecs',
    'relativeCreated', 'thread', 'threadName', 'processName', 'process', 'message',
    'taskName',
])


def _to_json_native(value: Any) -> Any:
    """Convert numpy scalars and arrays found in ``extra`` to JSON-native values."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    return str(value)


class JSONFormatter(logging.Formatter):
    """
    JSON formatter for structured logging.

    Every record becomes one JSON object with the configured base fields plus all
    ``extra`` context (sample counts, seeds, residuals, brackets, ...).
    """

    def __init__(self, include_fields: Optional[list] = None):
        super().__init__()
        self.datefmt = '%Y-%m-%dT%H:%M:%S%z'
        if include_fields is None:
            include_fields = ['timestamp', 'level', 'module', 'message', 'extra']
        self.include_fields = include_fields

    def format(self, record: logging.LogRecord) -> str:
        log_entry: Dict[str, Any] = {}

        if 'timestamp' in self.include_fields:
            log_entry['timestamp'] = self.formatTime(record, self.datefmt)
        if 'level' in self.include_fields:
            log_entry['level'] = record.levelname
        if 'module' in self.include_fields:
            log_entry['module'] = record.name
        if 'message' in self.include_fields:
            log_entry['message'] = record.getMessage()

        for key, value in record.__dict__.items():
            if key in _RESERVED or key.startswith('_'):
                continue
            if key in self.include_fields or 'extra' in self.include_fields:
                log_entry[key] = value

        if record.exc_info and record.exc_info[0] is not None:
            log_entry['exception'] = self.formatException(record.exc_info)

        return json.dumps(log_entry, ensure_ascii=False, default=_to_json_native)


def configure_logging(level: Optional[str] = None, handler_type: str = 'stream',
                      output_file: Optional[str] = None) -> logging.Logger:
    """
    Configure application-wide logging with JSON formatting.

    Args:
        level: Logging level name; falls back to SUPPORTLAB_LOG_LEVEL, then WARNING
        handler_type: 'stream' for stderr output, 'file' for file output
        output_file: Path to log file if using file handler

    Returns:
        Configured root logger
    """
    level = level or os.getenv('SUPPORTLAB_LOG_LEVEL', 'WARNING')
    numeric_level = getattr(logging, level.upper(), logging.WARNING)

    root_logger = logging.getLogger()
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    if handler_type == 'file' and output_file:
        handler = logging.FileHandler(output_file)
    else:
        handler = logging.StreamHandler()

    handler.setFormatter(JSONFormatter())
    root_logger.setLevel(numeric_level)
    root_logger.addHandler(handler)

    return root_logger


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
