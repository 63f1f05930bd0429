"""Small shared helpers: seed derivation and bitstring conventions.

Bitstrings are read most-significant-bit first: the string ``s`` of
length ``N`` denotes the integer ``int(s, 2)``, and coordinate ``j``
(1-indexed, as in ``[N]``) of that integer is bit ``N - j``.
"""

from __future__ import annotations

import hashlib

__all__ = [
    "derive_seed",
    "bits_to_int",
    "int_to_bits",
    "coord_mask",
    "get_coord",
    "flip_coord",
]


def derive_seed(*parts) -> int:
    """Deterministic, platform-independent 64-bit seed from labels."""
    blob = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def bits_to_int(s: str) -> int:
    return int(s, 2) if s else 0


def int_to_bits(value: int, width: int) -> str:
    if width == 0:
        return ""
    return format(value, f"0{width}b")


def coord_mask(j: int, n_bits: int) -> int:
    if not 1 <= j <= n_bits:
        raise ValueError(f"coordinate {j} outside [1, {n_bits}]")
    return 1 << (n_bits - j)


def get_coord(x: int, j: int, n_bits: int) -> int:
    return (x >> (n_bits - j)) & 1


def flip_coord(x: int, j: int, n_bits: int) -> int:
    return x ^ coord_mask(j, n_bits)
