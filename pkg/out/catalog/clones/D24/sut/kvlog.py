"""One-line ``key=value`` log records.

Values made only of safe characters are written bare; anything else is
written as a JSON string literal. Records are parsed back with
:func:`parse_line`.
"""
from __future__ import annotations

import json
import logging
import re
from datetime import datetime, timezone

_BARE = re.compile(r"^[A-Za-z0-9_.:/@+\-]*$")
_PAIR = re.compile(r'([A-Za-z_][A-Za-z0-9_.]*)=("(?:[^"\\]|\\.)*"|[^\s"]*)(?:\s+|$)')


class SinkUnavailable(Exception):
    """The configured log destination cannot be written."""


class MalformedLine(ValueError):
    pass


def format_value(value) -> str:
    text = "" if value is None else str(value)
    if text and _BARE.match(text):
        return text
    return json.dumps(text, ensure_ascii=False)


def format_line(fields: dict) -> str:
    return " ".join(f"{key}={format_value(value)}" for key, value in fields.items())


def parse_line(line: str) -> dict:
    line = line.rstrip("\n")
    if not line.strip():
        raise MalformedLine("empty line")
    fields = {}
    pos = 0
    while pos < len(line):
        m = _PAIR.match(line, pos)
        if m is None:
            raise MalformedLine(f"cannot parse at column {pos}: {line[pos:pos + 20]!r}")
        key, raw = m.group(1), m.group(2)
        fields[key] = json.loads(raw) if raw.startswith('"') else raw
        pos = m.end()
    return fields


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class KeyValueFormatter(logging.Formatter):
    """Formats records whose ``msg`` is a dict of fields."""

    def format(self, record: logging.LogRecord) -> str:
        fields = {"ts": utc_timestamp(), "level": record.levelname}
        if isinstance(record.msg, dict):
            fields.update(record.msg)
        else:
            fields["message"] = record.getMessage()
        return format_line(fields)


def open_logger(name: str, target=None, level="INFO") -> logging.Logger:
    """Build an unregistered logger writing one line per record to ``target``.

    ``target`` is a file path, an open text stream, or None for a logger
    that drops everything.
    """
    logger = logging.Logger(name)
    logger.propagate = False
    logger.setLevel(level.upper() if isinstance(level, str) else level)
    if target is None:
        logger.addHandler(logging.NullHandler())
        return logger
    try:
        if hasattr(target, "write"):
            handler = logging.StreamHandler(target)
        else:
            handler = logging.FileHandler(str(target), mode="a", encoding="utf-8")
    except OSError as exc:
        raise SinkUnavailable(f"cannot open log sink {target!r}: {exc}") from exc
    handler.setFormatter(KeyValueFormatter())
    logger.addHandler(handler)
    return logger


def close_logger(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
