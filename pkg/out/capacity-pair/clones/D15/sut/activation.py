"""Activation evidence for seeded defects.

The baseline never calls :func:`record_activation`; the defect seeder
inserts the calls next to every patched region of a clone.
"""
from __future__ import annotations

import logging

from . import context, kvlog

_logger: logging.Logger | None = None


def configure(target) -> None:
    """Route activation records to ``target`` (path or stream); None disables the sink."""
    global _logger
    if _logger is not None:
        kvlog.close_logger(_logger)
        _logger = None
    if target is not None:
        _logger = kvlog.open_logger(f"{__name__}.sink", target, "INFO")


def record_activation(defect_id: str, site_id: str, run_id: str | None = None) -> None:
    if _logger is None:
        raise kvlog.SinkUnavailable("activation log sink is not configured")
    _logger.info(
        {
            "event": "defect_activated",
            "run_id": context.current_run_id.get() if run_id is None else run_id,
            "defect_id": defect_id,
            "site_id": site_id,
            "path": context.current_path.get(),
        }
    )
