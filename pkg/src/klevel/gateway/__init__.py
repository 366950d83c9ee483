"""Backends that turn prompt contexts into text, plus token metering."""
from .backends import (MODES, Backend, BackendSpec, Completion, ConfigError, LiveBackend, RateLimiter,
                       ReplayBackend, ReplayExhausted, ScriptedBackend, Transcript, make_backend,
                       request_hash)
from .scripts import get_script, register, script_names
from .tally import tally_report

__all__ = [
    "MODES", "Backend", "BackendSpec", "Completion", "ConfigError", "LiveBackend", "RateLimiter",
    "ReplayBackend", "ReplayExhausted", "ScriptedBackend", "Transcript", "make_backend", "request_hash",
    "get_script", "register", "script_names", "tally_report",
]
