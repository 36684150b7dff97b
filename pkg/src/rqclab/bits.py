"""Bitstring labels and the bit-to-sign convention used everywhere.

A bitstring ``b_1 b_2 ... b_n`` is stored as the integer whose binary
expansion reads the same way, so qubit 1 is the most significant bit and
``int("10", 2) == 2`` labels the state with qubit 1 set.  Basis-state
indices of statevectors and phase vectors follow the same order.

Monomials use ``p_y(x) = (-1)^(y . x mod 2)``: bit 0 maps to +1 and bit 1
maps to -1.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering, lru_cache

import numpy as np

from .errors import InputError

MAX_QUBITS = 30


@total_ordering
@dataclass(frozen=True)
class BitString:
    value: int
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUBITS:
            raise InputError(f"bitstring length must be in [1, {MAX_QUBITS}], got {self.n}")
        if not 0 <= self.value < (1 << self.n):
            raise InputError(f"value {self.value} does not fit in {self.n} bits")

    @classmethod
    def parse(cls, s: str) -> "BitString":
        s = s.strip()
        if not s or set(s) - {"0", "1"}:
            raise InputError(f"not a bitstring: {s!r}")
        return cls(int(s, 2), len(s))

    def bit(self, qubit: int) -> int:
        """Bit of qubit ``qubit`` (1-based)."""
        return (self.value >> (self.n - qubit)) & 1

    def __str__(self) -> str:
        return format(self.value, f"0{self.n}b")

    def __lt__(self, other: "BitString") -> bool:
        if self.n != other.n:
            raise InputError("cannot compare bitstrings of different length")
        return self.value < other.value


def as_bitstring(x, n: int | None = None) -> BitString:
    """Coerce a BitString, a '0101' string, or an int (with ``n``) to BitString."""
    if isinstance(x, BitString):
        if n is not None and x.n != n:
            raise InputError(f"expected {n} bits, got {x.n}")
        return x
    if isinstance(x, str):
        b = BitString.parse(x)
        if n is not None and b.n != n:
            raise InputError(f"expected {n} bits, got {b.n}")
        return b
    if n is None:
        raise InputError("integer bitstrings need an explicit length")
    return BitString(int(x), n)


def dot_parity(y: int, x: int) -> int:
    return (y & x).bit_count() & 1


def monomial_eval(y, x) -> int:
    """Evaluate ``p_y(x) = (-1)^(y.x)`` for two bitstrings of equal length."""
    if isinstance(y, BitString) and isinstance(x, BitString) and y.n != x.n:
        raise InputError(f"length mismatch: {y.n} vs {x.n}")
    if isinstance(y, str) and isinstance(x, str) and len(y) != len(x):
        raise InputError(f"length mismatch: {len(y)} vs {len(x)}")
    y = as_bitstring(y, getattr(x, "n", None) if isinstance(x, BitString) else None)
    x = as_bitstring(x, y.n)
    return -1 if dot_parity(y.value, x.value) else 1


def parity_array(v: np.ndarray) -> np.ndarray:
    """Elementwise popcount parity of a non-negative integer array."""
    return (np.bitwise_count(v) & 1).astype(np.int8)


@lru_cache(maxsize=16)
def sign_matrix(n: int) -> np.ndarray:
    """The 2^n x 2^n matrix ``S[y, x] = p_y(x)`` (read-only, int8)."""
    if n > 14:
        raise InputError("dense sign matrix limited to n <= 14")
    idx = np.arange(1 << n, dtype=np.int64)
    s = 1 - 2 * parity_array(idx[:, None] & idx[None, :])
    s.setflags(write=False)
    return s


def qubit_signs(n: int, qubit: int) -> np.ndarray:
    """``(-1)^{x_qubit}`` over all basis labels x (qubit is 1-based)."""
    idx = np.arange(1 << n, dtype=np.int64)
    return 1 - 2 * ((idx >> (n - qubit)) & 1)
