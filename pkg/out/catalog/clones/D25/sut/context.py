"""Request-scoped ambient values shared by logging and activation hooks."""
from __future__ import annotations

import contextvars

current_run_id: contextvars.ContextVar[str] = contextvars.ContextVar("current_run_id", default="")
current_path: contextvars.ContextVar[str] = contextvars.ContextVar("current_path", default="")
current_actor: contextvars.ContextVar[str] = contextvars.ContextVar("current_actor", default="anonymous")
