"""
Service layer for binary codes.

Packing, query encoding and Hamming-distance kernels. Distances are the
popcount of the XOR of packed words.
"""

import logging
from typing import Union

import numpy as np

from core.exceptions import ContractViolationException
from hashing.models import CodeMatrix, ViewMatrix, ViewParams
from hashing.services import sigmoid_embed
from .models import PackedCodes


logger = logging.getLogger(__name__)

_BYTE_POPCOUNT = np.array([bin(value).count('1') for value in range(256)], dtype=np.uint8)


def _popcount(words: np.ndarray) -> np.ndarray:
    if hasattr(np, 'bitwise_count'):
        return np.bitwise_count(words)
    return _BYTE_POPCOUNT[words]


def pack(bits: Union[CodeMatrix, np.ndarray]) -> PackedCodes:
    """
    Pack an n x c binary matrix, LSB first, zero padded.

    Args:
        bits: CodeMatrix or array of 0/1 values

    Returns:
        PackedCodes: n codes of c bits
    """
    matrix = bits if isinstance(bits, CodeMatrix) else CodeMatrix(bits)
    words = np.packbits(matrix.bits, axis=1, bitorder='little')
    return PackedCodes(words, matrix.c)


def unpack(packed: PackedCodes) -> CodeMatrix:
    """Inverse of pack."""
    bits = np.unpackbits(packed.words, axis=1, count=packed.c, bitorder='little')
    return CodeMatrix(bits)


def encode_bits(queries: ViewMatrix, params: ViewParams) -> CodeMatrix:
    """
    Binary codes of new samples: bit = 1 iff the sigmoid output is at least 0.5.

    Raises:
        ContractViolationException: If the feature dimension does not match W
    """
    if queries.d != params.d:
        raise ContractViolationException(
            f"view '{queries.view_id}' has {queries.d} features, parameters expect {params.d}"
        )
    values = sigmoid_embed(queries, params).values
    return CodeMatrix((values >= 0.5).astype(np.uint8))


def encode_view(queries: ViewMatrix, params: ViewParams) -> PackedCodes:
    """Packed binary codes of new samples (see encode_bits)."""
    return pack(encode_bits(queries, params))


def _check_lengths(a: PackedCodes, b: PackedCodes) -> None:
    if a.c != b.c:
        raise ContractViolationException(f"code lengths differ: {a.c} vs {b.c}")


def _single(code: PackedCodes, name: str) -> np.ndarray:
    if code.n != 1:
        raise ContractViolationException(f"{name} must hold exactly one code, got {code.n}")
    return code.words[0]


def hamming_distance(a: PackedCodes, b: PackedCodes) -> int:
    """Number of differing bits between two single codes."""
    _check_lengths(a, b)
    return int(_popcount(_single(a, 'a') ^ _single(b, 'b')).sum(dtype=np.int64))


def distances_to_all(query: PackedCodes, db: PackedCodes) -> np.ndarray:
    """Hamming distance from one code to every database code, in database order."""
    _check_lengths(query, db)
    word = _single(query, 'query')
    return _popcount(db.words ^ word).sum(axis=1, dtype=np.int64)


def rank_by_distance(distances: np.ndarray) -> np.ndarray:
    """Database indices by ascending distance; ties keep ascending index."""
    return np.argsort(distances, kind='stable')
