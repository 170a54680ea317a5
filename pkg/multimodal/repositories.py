"""
Repository layer for dataset files.
Reads and writes the little-endian float32 matrix format (magic "DMH1").
"""

import logging
import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from core.exceptions import ArtifactNotFoundException, DatasetFormatException


logger = logging.getLogger(__name__)

MATRIX_MAGIC = b'DMH1'
MATRIX_HEADER = struct.Struct('<4sII')
MATRIX_DTYPE = np.dtype('<f4')

PathLike = Union[str, Path]


def write_matrix_block(stream: BinaryIO, matrix: np.ndarray) -> None:
    """Write one DMH1 block (header plus row-major values) to an open stream."""
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    rows, cols = matrix.shape
    stream.write(MATRIX_HEADER.pack(MATRIX_MAGIC, rows, cols))
    stream.write(np.ascontiguousarray(matrix, dtype=MATRIX_DTYPE).tobytes(order='C'))


def read_matrix_block(buffer: bytes, offset: int = 0, source: str = '<buffer>'):
    """
    Parse one DMH1 block starting at offset.

    Returns:
        tuple: (float64 matrix, offset just past the block)

    Raises:
        DatasetFormatException: On a bad magic or a truncated payload
    """
    if len(buffer) - offset < MATRIX_HEADER.size:
        raise DatasetFormatException(source, f"{source}: truncated matrix header")
    magic, rows, cols = MATRIX_HEADER.unpack_from(buffer, offset)
    if magic != MATRIX_MAGIC:
        raise DatasetFormatException(source, f"{source}: bad magic {magic!r}, expected {MATRIX_MAGIC!r}")
    offset += MATRIX_HEADER.size
    size = rows * cols * MATRIX_DTYPE.itemsize
    if len(buffer) - offset < size:
        raise DatasetFormatException(
            source, f"{source}: expected {rows}x{cols} values, payload has {len(buffer) - offset} bytes"
        )
    values = np.frombuffer(buffer, dtype=MATRIX_DTYPE, count=rows * cols, offset=offset)
    return values.reshape(rows, cols).astype(np.float64), offset + size


class MatrixFileRepository:
    """Repository for single-matrix DMH1 files."""

    @staticmethod
    def save(path: PathLike, matrix: np.ndarray) -> Path:
        """Write a matrix, creating parent directories."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('wb') as stream:
            write_matrix_block(stream, matrix)
        logger.debug("Wrote %s matrix to %s", np.shape(matrix), path)
        return path

    @staticmethod
    def load(path: PathLike) -> np.ndarray:
        """
        Read a matrix.

        Raises:
            ArtifactNotFoundException: If the file does not exist
            DatasetFormatException: If the file is malformed or has trailing bytes
        """
        path = Path(path)
        if not path.is_file():
            raise ArtifactNotFoundException(str(path))
        buffer = path.read_bytes()
        matrix, end = read_matrix_block(buffer, 0, str(path))
        if end != len(buffer):
            raise DatasetFormatException(str(path), f"{path}: {len(buffer) - end} trailing bytes")
        return matrix
