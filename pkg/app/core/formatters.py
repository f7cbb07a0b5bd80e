"""Deterministic text formatting shared by the artifact writers."""

from __future__ import annotations

import datetime as dt
import math


def format_float(value: float) -> str:
    """Shortest round-trip representation of a double.

    Whole numbers keep one decimal (``3.0``) and negative zero is written as
    ``0.0`` so identical values always produce identical bytes.
    """
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite value {value!r}")
    if value == 0.0:
        return "0.0"
    return repr(value)


def format_day(day: dt.date) -> str:
    return day.isoformat()


def join_items(items) -> str:
    return "|".join(items)
