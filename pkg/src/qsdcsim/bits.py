"""Small helpers for bit strings stored as int8 numpy arrays."""

from __future__ import annotations

import numpy as np


def as_bit_array(bits) -> np.ndarray:
    """Coerce a bit string ("0101"), list, or array to an int8 array of 0/1."""
    if isinstance(bits, str):
        if bits and set(bits) - {"0", "1"}:
            raise ValueError("bit string may only contain '0' and '1'")
        arr = np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - ord("0")
        return arr.astype(np.int8)
    arr = np.asarray(bits, dtype=np.int8)
    if arr.ndim != 1:
        raise ValueError("bits must be one-dimensional")
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError("bits must be 0 or 1")
    return arr


def bits_to_string(bits: np.ndarray) -> str:
    """Render an int8 bit array as a compact '0101' string."""
    return "".join("1" if b else "0" for b in np.asarray(bits).tolist())


def random_bits(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n, dtype=np.int8)
