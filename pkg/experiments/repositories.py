"""
Repository layer for experiment artifacts.

Model files (magic "DMHM"): u32 LE format version, u32 LE header length,
a UTF-8 JSON header, then for every view a W block and a 1 x c v block in
the DMH1 matrix format. Reports are JSON documents.
"""

import io
import logging
import struct
from pathlib import Path

from rest_framework.exceptions import ParseError
from rest_framework.parsers import JSONParser
from rest_framework.renderers import JSONRenderer

from core.exceptions import ArtifactNotFoundException, DatasetFormatException
from hashing.models import ViewParams
from multimodal.repositories import PathLike, read_matrix_block, write_matrix_block
from training.models import TrainConfig
from .models import MODEL_FORMAT_VERSION, HashingModel
from .serializers import ModelHeaderSerializer


logger = logging.getLogger(__name__)

MODEL_MAGIC = b'DMHM'
MODEL_PREAMBLE = struct.Struct('<4sII')


class ModelArtifactRepository:
    """Repository for trained model files."""

    @staticmethod
    def save(path: PathLike, model: HashingModel) -> Path:
        """
        Write a model file, creating parent directories.

        The same model always produces the same bytes.
        """
        path = Path(path)
        header = JSONRenderer().render(ModelHeaderSerializer(model).data)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('wb') as stream:
            stream.write(MODEL_PREAMBLE.pack(MODEL_MAGIC, model.format_version, len(header)))
            stream.write(header)
            for params in model.params:
                write_matrix_block(stream, params.W)
                write_matrix_block(stream, params.v)
        logger.info("Saved %d-bit model with views %s to %s", model.code_length, model.view_ids, path)
        return path

    @staticmethod
    def load(path: PathLike) -> HashingModel:
        """
        Read a model file.

        Raises:
            ArtifactNotFoundException: If the file does not exist
            DatasetFormatException: If the file is malformed, truncated or of another version
        """
        path = Path(path)
        if not path.is_file():
            raise ArtifactNotFoundException(str(path))
        source = str(path)
        buffer = path.read_bytes()
        if len(buffer) < MODEL_PREAMBLE.size:
            raise DatasetFormatException(source, f"{source}: truncated model preamble")
        magic, version, header_length = MODEL_PREAMBLE.unpack_from(buffer, 0)
        if magic != MODEL_MAGIC:
            raise DatasetFormatException(source, f"{source}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
        if version != MODEL_FORMAT_VERSION:
            raise DatasetFormatException(source, f"{source}: unsupported model format version {version}")
        offset = MODEL_PREAMBLE.size
        if len(buffer) - offset < header_length:
            raise DatasetFormatException(source, f"{source}: truncated model header")
        header_bytes = buffer[offset:offset + header_length]
        offset += header_length

        try:
            header = JSONParser().parse(io.BytesIO(header_bytes))
        except ParseError as exc:
            raise DatasetFormatException(source, f"{source}: unreadable model header ({exc.detail})")
        serializer = ModelHeaderSerializer(data=header)
        if not serializer.is_valid():
            raise DatasetFormatException(source, f"{source}: invalid model header {serializer.errors}")
        data = serializer.validated_data

        params = []
        for entry in data['view_entries']:
            W, offset = read_matrix_block(buffer, offset, source)
            v, offset = read_matrix_block(buffer, offset, source)
            if W.shape != (entry['d'], entry['c']) or v.shape != (1, entry['c']):
                raise DatasetFormatException(
                    source, f"{source}: view '{entry['view_id']}' blocks {W.shape} and {v.shape} "
                            f"do not match d={entry['d']}, c={entry['c']}"
                )
            params.append(ViewParams(
                W=W, v=v[0], alpha=entry['alpha'], beta=entry['beta'], gamma=entry['gamma'],
                prescaled=entry['prescaled'],
            ))
        if offset != len(buffer):
            raise DatasetFormatException(source, f"{source}: {len(buffer) - offset} trailing bytes")

        model = HashingModel(
            params=params,
            view_ids=[entry['view_id'] for entry in data['view_entries']],
            label_views=[entry['is_label_view'] for entry in data['view_entries']],
            config=TrainConfig(**data['config']),
            provenance=data['provenance'],
            format_version=version,
        )
        logger.debug("Loaded %d-bit model from %s", model.code_length, path)
        return model


class ReportRepository:
    """Repository for JSON reports."""

    @staticmethod
    def render(data) -> bytes:
        return JSONRenderer().render(data, renderer_context={'indent': 2})

    @classmethod
    def save(cls, path: PathLike, data) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(cls.render(data))
        logger.info("Wrote report %s", path)
        return path

    @staticmethod
    def load(path: PathLike):
        """
        Read a report back as plain data.

        Raises:
            ArtifactNotFoundException: If the file does not exist
        """
        path = Path(path)
        if not path.is_file():
            raise ArtifactNotFoundException(str(path))
        with path.open('rb') as stream:
            return JSONParser().parse(stream)
