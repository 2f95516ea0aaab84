"""Keyed pseudorandom basis function ``f(x, y)``.

A uniformly random table over ``2^(2n)`` input pairs cannot be stored for
interesting ``n``, so ``f`` is a keyed BLAKE2b over the encoded pair, reduced
mod ``m``.  The reduction bias is below ``m / 2^64``.
"""

from __future__ import annotations

import hashlib
from typing import Sequence, Union

import numpy as np

Bits = Union[str, Sequence[int], int]


class InputLengthError(ValueError):
    pass


def bits_to_int(bits: Bits, n: int | None = None) -> tuple[int, int]:
    """Normalize a bit string, bit sequence or integer to ``(value, n)``."""
    if isinstance(bits, (int, np.integer)):
        if n is None:
            raise InputLengthError("integer inputs need an explicit bit length n")
        value = int(bits)
        if value < 0 or value >> n:
            raise InputLengthError(f"value {value} does not fit in {n} bits")
        return value, n
    if isinstance(bits, str):
        if any(c not in "01" for c in bits):
            raise InputLengthError("bit strings may contain only 0 and 1")
        seq = [int(c) for c in bits]
    else:
        seq = [int(b) for b in bits]
        if any(b not in (0, 1) for b in seq):
            raise InputLengthError("bit sequences may contain only 0 and 1")
    if n is not None and len(seq) != n:
        raise InputLengthError(f"expected {n} bits, got {len(seq)}")
    value = 0
    for b in seq:
        value = (value << 1) | b
    return value, len(seq)


def _key(seed: int) -> bytes:
    return int(seed).to_bytes(16, "little", signed=False)


def eval_f(seed: int, x: Bits, y: Bits, m: int = 2, n: int | None = None) -> int:
    """Basis index in ``0..m-1`` for inputs ``x`` and ``y`` of equal length."""
    if m < 2:
        raise ValueError("m must be at least 2")
    xv, nx = bits_to_int(x, n)
    yv, ny = bits_to_int(y, n)
    if nx != ny:
        raise InputLengthError(f"|x|={nx} differs from |y|={ny}")
    if nx < 1:
        raise InputLengthError("inputs must have at least one bit")
    width = (nx + 7) // 8
    msg = nx.to_bytes(4, "little") + xv.to_bytes(width, "little") + yv.to_bytes(width, "little")
    h = hashlib.blake2b(msg, digest_size=8, key=_key(seed)).digest()
    return int.from_bytes(h, "little") % m


def eval_f_many(seed: int, xs, ys, m: int, n: int) -> np.ndarray:
    """``eval_f`` over aligned integer arrays."""
    return np.fromiter((eval_f(seed, int(a), int(b), m, n) for a, b in zip(xs, ys)), dtype=np.int64, count=len(xs))


def sample_input(n: int, rng: np.random.Generator) -> int:
    """Uniform ``n``-bit integer."""
    nbytes = (n + 7) // 8
    value = int.from_bytes(rng.bytes(nbytes), "little")
    return value & ((1 << n) - 1)


def sample_inputs(n: int, count: int, rng: np.random.Generator) -> list[int]:
    if n <= 62:
        return [int(v) for v in rng.integers(0, 1 << n, size=count)]
    return [sample_input(n, rng) for _ in range(count)]


def to_hex(value: int, n: int) -> str:
    return format(value, f"0{(n + 3) // 4}x")
