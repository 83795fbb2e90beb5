"""Small argument-checking helpers shared across modules."""

from __future__ import annotations

import operator


def as_int(name: str, value, minimum: int | None = None,
           maximum: int | None = None) -> int:
    """Coerce an integral value (incl. numpy ints) to int, range-checked."""
    try:
        out = operator.index(value)
    except TypeError:
        raise ValueError(f"{name} must be an integer, got {value!r}") from None
    if minimum is not None and out < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {out}")
    if maximum is not None and out > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {out}")
    return out
