"""Whole-body mobile-manipulation teleoperation core (C++ extension)."""

import json

from . import _core
from ._core import (
    ConfigError,
    Embodiment,
    IntegrityError,
    SequencingError,
    TransportError,
    crc32,
    damped_least_squares,
    decode_action,
    decode_frame,
    encode_action,
    encode_frame,
    flatten,
    load_episode,
    replay,
    unflatten,
)

MESSAGE_TYPES = {"action": 0, "observation": 1, "heartbeat": 2, "session_control": 3}


def run_local(config, record=None, latency=None):
    """Runs a scripted local session; returns the report as a dict."""
    return json.loads(_core.run_local(str(config), None if record is None else str(record), latency))


__all__ = [
    "ConfigError",
    "Embodiment",
    "IntegrityError",
    "MESSAGE_TYPES",
    "SequencingError",
    "TransportError",
    "crc32",
    "damped_least_squares",
    "decode_action",
    "decode_frame",
    "encode_action",
    "encode_frame",
    "flatten",
    "load_episode",
    "replay",
    "run_local",
    "unflatten",
]
