"""
Domain models for packed binary codes.
"""

from dataclasses import dataclass

import numpy as np

from core.exceptions import ContractViolationException, InputValidationException


WORD_BITS = 8


def words_per_code(c: int) -> int:
    return (c + WORD_BITS - 1) // WORD_BITS


@dataclass(frozen=True, eq=False)
class PackedCodes:
    """
    n binary codes of c bits, stored as uint8 words.

    Bit j of code m lives in words[m, j // 8] at bit position j % 8
    (least significant bit first). Bits past c in the last word are zero.
    """

    words: np.ndarray
    c: int

    def __post_init__(self):
        words = np.asarray(self.words)
        if words.ndim == 1:
            words = words.reshape(1, -1)
        if words.ndim != 2 or words.dtype != np.uint8:
            raise ContractViolationException(f"packed codes must be a 2-D uint8 array, got {words.dtype} {words.shape}")
        if self.c < 1 or words.shape[1] != words_per_code(self.c):
            raise ContractViolationException(
                f"{words.shape[1]} words per code cannot hold exactly {self.c} bits"
            )
        spare = words.shape[1] * WORD_BITS - self.c
        if spare and np.any(words[:, -1] >> (WORD_BITS - spare)):
            raise InputValidationException("padding bits of packed codes must be zero")
        words = np.array(words, copy=True)
        words.setflags(write=False)
        object.__setattr__(self, 'words', words)

    @property
    def n(self) -> int:
        return self.words.shape[0]

    def row(self, m: int) -> 'PackedCodes':
        """Single-code PackedCodes holding code m."""
        return PackedCodes(self.words[m:m + 1], self.c)

    def take(self, rows) -> 'PackedCodes':
        return PackedCodes(self.words[np.asarray(rows, dtype=np.int64)], self.c)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other) -> bool:
        return isinstance(other, PackedCodes) and self.c == other.c and np.array_equal(self.words, other.words)

    __hash__ = None
