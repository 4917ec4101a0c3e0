"""
Formato binário de checkpoint.

Layout (little-endian):
    magic b'UAGC' | u16 versão | u32 tamanho + cabeçalho JSON (configuração,
    padronização, sensores) | u32 número de parâmetros | por parâmetro:
    u16 tamanho + nome UTF-8, u8 rank, u32 por dimensão, valores float32 |
    u32 CRC32 de tudo o que vem antes
"""

import io
import json
import logging
import struct
import zlib
from dataclasses import dataclass, field
from typing import BinaryIO, Dict

import numpy as np

from ..exceptions import InputFormatError
from .config import ModelConfig

logger = logging.getLogger(__name__)

MAGIC = b'UAGC'
VERSION = 1


@dataclass
class Checkpoint:
    """Configuração, metadados e valores (float64 na memória) de um modelo salvo."""

    config: ModelConfig
    params: Dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)


def write_checkpoint(checkpoint: Checkpoint, stream: BinaryIO):
    header = json.dumps(
        {'model': checkpoint.config.to_dict(), 'metadata': checkpoint.metadata},
        sort_keys=True,
        separators=(',', ':'),
    ).encode('utf-8')

    payload = io.BytesIO()
    payload.write(MAGIC)
    payload.write(struct.pack('<H', VERSION))
    payload.write(struct.pack('<I', len(header)))
    payload.write(header)
    payload.write(struct.pack('<I', len(checkpoint.params)))
    for name, value in checkpoint.params.items():
        encoded = name.encode('utf-8')
        value = np.asarray(value)
        payload.write(struct.pack('<H', len(encoded)))
        payload.write(encoded)
        payload.write(struct.pack('<B', value.ndim))
        payload.write(struct.pack(f'<{value.ndim}I', *value.shape))
        payload.write(value.astype('<f4').tobytes(order='C'))

    data = payload.getvalue()
    stream.write(data)
    stream.write(struct.pack('<I', zlib.crc32(data) & 0xFFFFFFFF))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise InputFormatError("Checkpoint truncado")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(stream: BinaryIO) -> Checkpoint:
    """
    Lê e valida um checkpoint.

    Raises:
        InputFormatError: magic, versão ou CRC inválidos; arquivo truncado
    """
    data = stream.read()
    if len(data) < len(MAGIC) + 4 or data[:len(MAGIC)] != MAGIC:
        raise InputFormatError("Checkpoint inválido: magic ausente")
    payload, trailer = data[:-4], data[-4:]
    (expected_crc,) = struct.unpack('<I', trailer)
    if zlib.crc32(payload) & 0xFFFFFFFF != expected_crc:
        raise InputFormatError("Checkpoint corrompido: CRC32 não confere")

    reader = _Reader(payload)
    reader.take(len(MAGIC))
    (version,) = reader.unpack('<H')
    if version != VERSION:
        raise InputFormatError(f"Versão de checkpoint não suportada: {version}")
    (header_size,) = reader.unpack('<I')
    try:
        header = json.loads(reader.take(header_size).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputFormatError(f"Cabeçalho do checkpoint inválido: {e}") from None

    (count,) = reader.unpack('<I')
    params = {}
    for _ in range(count):
        (name_size,) = reader.unpack('<H')
        name = reader.take(name_size).decode('utf-8')
        (rank,) = reader.unpack('<B')
        shape = reader.unpack(f'<{rank}I') if rank else ()
        n_values = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(reader.take(4 * n_values), dtype='<f4')
        params[name] = values.astype(np.float64).reshape(shape)

    if reader.offset != len(payload):
        raise InputFormatError("Checkpoint com bytes extras após os parâmetros")

    return Checkpoint(
        config=ModelConfig.from_dict(header['model']),
        params=params,
        metadata=header.get('metadata', {}),
    )


def save_model(model, path, metadata: dict = None):
    checkpoint = Checkpoint(config=model.config, params=model.state_dict(), metadata=metadata or {})
    with open(path, 'wb') as stream:
        write_checkpoint(checkpoint, stream)
    logger.info(f"Checkpoint salvo em {path} ({len(checkpoint.params)} parâmetros)")


def load_checkpoint(path) -> Checkpoint:
    try:
        with open(path, 'rb') as stream:
            return read_checkpoint(stream)
    except FileNotFoundError:
        raise InputFormatError(f"Checkpoint não encontrado: {path}") from None
