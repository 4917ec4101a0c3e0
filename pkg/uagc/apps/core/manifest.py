"""
Manifesto de execução gravado ao lado de cada artefato produzido pela CLI.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional

from uagc.forecasting.exceptions import InputFormatError

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = 1
MANIFEST_SUFFIX = '.manifest.json'
CHUNK_SIZE = 1 << 20


def file_digest(path) -> str:
    """SHA-256 hexadecimal do conteúdo do arquivo."""
    digest = hashlib.sha256()
    try:
        with open(path, 'rb') as stream:
            for chunk in iter(lambda: stream.read(CHUNK_SIZE), b''):
                digest.update(chunk)
    except FileNotFoundError:
        raise InputFormatError(f"Arquivo de entrada não encontrado: {path}") from None
    except IsADirectoryError:
        raise InputFormatError(f"Entrada é um diretório, esperado arquivo: {path}") from None
    return digest.hexdigest()


def _plain(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass
class RunManifest:
    """
    Comando, flags resolvidas, digests das entradas, semente e versão do artefato.

    Não guarda horários: dois manifestos iguais descrevem execuções que produzem
    os mesmos bytes.
    """

    command: str
    flags: Dict[str, object]
    inputs: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    version: int = ARTIFACT_VERSION

    @classmethod
    def build(cls, command: str, flags: Mapping, inputs: Mapping[str, object], seed: Optional[int] = None):
        """
        Resolve o manifesto de uma execução.

        Args:
            command (str): Nome do subcomando (forma com hífen)
            flags: Valores resolvidos das flags
            inputs: Nome lógico -> caminho; entradas None são ignoradas

        Returns:
            RunManifest: Com o SHA-256 de cada entrada
        """
        digests = {name: file_digest(path) for name, path in sorted(inputs.items()) if path is not None}
        resolved = {key: _plain(value) for key, value in sorted(flags.items())}
        return cls(command=command, flags=resolved, inputs=digests, seed=seed)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'


def manifest_path(output) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


def write_manifest(manifest: RunManifest, output) -> Path:
    target = manifest_path(output)
    target.write_text(manifest.to_json(), encoding='utf-8')
    logger.info(f"Manifesto gravado em {target}")
    return target
