"""Integer-backed bit-vector helpers for connection-subset state keys.

A state is a plain int: bit j is set iff connection j is still present.
Widths up to a few hundred bits are fine; Python ints are arbitrary precision.
"""

from __future__ import annotations

from typing import Iterator


def full_mask(width: int) -> int:
    """All-ones state of the given width (the fully assembled structure)."""
    if width < 0:
        raise ValueError(f"width must be non-negative, got {width}")
    return (1 << width) - 1


def iter_bits(state: int) -> Iterator[int]:
    """Yield the indices of set bits, ascending."""
    while state:
        low = state & -state
        yield low.bit_length() - 1
        state ^= low


def hex_digits(width: int) -> int:
    return max(1, (width + 3) // 4)


def to_hex(state: int, width: int) -> str:
    """Fixed-width lowercase hex encoding of a state."""
    return format(state, f"0{hex_digits(width)}x")


def from_hex(text: str, width: int) -> int:
    state = int(text, 16)
    if not 0 <= state <= full_mask(width):
        raise ValueError(f"state {text!r} does not fit in width {width}")
    return state
