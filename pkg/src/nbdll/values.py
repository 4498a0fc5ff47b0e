"""Distinguished values shared by the list, the model and the checkers."""

from __future__ import annotations

import enum


class Marker(enum.Enum):
    """Non-user values that can appear in responses or node values."""

    EOL = "EOL"
    INVALID_CURSOR = "invalidCursor"
    ACK = "ack"
    NO_VALUE = "noValue"  # head/tail only, never returned by the API

    def __repr__(self) -> str:
        return self.value

    __str__ = __repr__


EOL = Marker.EOL
INVALID_CURSOR = Marker.INVALID_CURSOR
ACK = Marker.ACK
NO_VALUE = Marker.NO_VALUE


def encode_value(v):
    """JSON-friendly form of a value or response."""
    if isinstance(v, Marker):
        return {"marker": v.value}
    return v


def decode_value(v):
    if isinstance(v, dict) and set(v) == {"marker"}:
        return Marker(v["marker"])
    if isinstance(v, list):
        return tuple(decode_value(x) for x in v)
    return v
