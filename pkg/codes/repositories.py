"""
Repository layer for packed code files.

Layout: magic "DMHC", u32 LE n, u32 LE c, then n codes of ceil(c / 8)
bytes each, bits LSB first, padding zero.
"""

import logging
import struct
from pathlib import Path

import numpy as np

from core.exceptions import ArtifactNotFoundException, DatasetFormatException, HashingToolkitException
from .models import PackedCodes, words_per_code


logger = logging.getLogger(__name__)

CODES_MAGIC = b'DMHC'
CODES_HEADER = struct.Struct('<4sII')


class PackedCodesRepository:
    """Repository for DMHC files."""

    @staticmethod
    def save(path, codes: PackedCodes) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('wb') as stream:
            stream.write(CODES_HEADER.pack(CODES_MAGIC, codes.n, codes.c))
            stream.write(np.ascontiguousarray(codes.words).tobytes())
        logger.debug("Wrote %d codes of %d bits to %s", codes.n, codes.c, path)
        return path

    @staticmethod
    def load(path) -> PackedCodes:
        """
        Read a DMHC file.

        Raises:
            ArtifactNotFoundException: If the file does not exist
            DatasetFormatException: On a bad magic, wrong size or non-zero padding
        """
        path = Path(path)
        if not path.is_file():
            raise ArtifactNotFoundException(str(path))
        buffer = path.read_bytes()
        if len(buffer) < CODES_HEADER.size:
            raise DatasetFormatException(str(path), f"{path}: truncated codes header")
        magic, n, c = CODES_HEADER.unpack_from(buffer)
        if magic != CODES_MAGIC:
            raise DatasetFormatException(str(path), f"{path}: bad magic {magic!r}, expected {CODES_MAGIC!r}")
        width = words_per_code(c)
        if c < 1 or len(buffer) != CODES_HEADER.size + n * width:
            raise DatasetFormatException(str(path), f"{path}: size does not match {n} codes of {c} bits")
        words = np.frombuffer(buffer, dtype=np.uint8, offset=CODES_HEADER.size).reshape(n, width)
        try:
            return PackedCodes(words, c)
        except HashingToolkitException as exc:
            raise DatasetFormatException(str(path), f"{path}: {exc.message}") from exc
