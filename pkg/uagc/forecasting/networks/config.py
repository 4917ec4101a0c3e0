"""
Configuração das arquiteturas de previsão.
"""

from dataclasses import asdict, dataclass, fields

from ..activity import TIMESTAMP_FEATURE_SIZE
from ..exceptions import InputFormatError

ARCHITECTURES = ('GCRN', 'GCTF', 'LSTM', 'TF')
GRAPH_ARCHITECTURES = ('GCRN', 'GCTF')
TRANSFORMER_ARCHITECTURES = ('GCTF', 'TF')
EMBEDDING_MODES = ('AE', 'TE', 'none')


@dataclass(frozen=True)
class ModelConfig:
    """
    Hiperparâmetros de um modelo.

    `n_layers`, `n_heads` e `d_key` só se aplicam às arquiteturas transformer;
    as recorrentes usam um único módulo codificador e um decodificador.
    """

    n_sensors: int
    hidden_dim: int = 64
    P: int = 12
    Q: int = 12
    k_diffusion: int = 1
    n_layers: int = 3
    n_heads: int = 8
    d_key: int = 8
    embedding_mode: str = 'AE'
    use_sensor_embedding: bool = True
    architecture: str = 'GCRN'
    n_activity: int = 9
    scheduled_sampling: bool = False
    sampling_decay: float = 2000.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise InputFormatError(f"Arquitetura desconhecida: {self.architecture}")
        if self.embedding_mode not in EMBEDDING_MODES:
            raise InputFormatError(f"Modo de embedding desconhecido: {self.embedding_mode}")
        if self.n_sensors < 1 or self.hidden_dim < 1:
            raise InputFormatError(f"N e D devem ser positivos (N={self.n_sensors}, D={self.hidden_dim})")
        if self.P < 1 or self.Q < 1:
            raise InputFormatError(f"Horizontes devem ser positivos (P={self.P}, Q={self.Q})")
        if self.k_diffusion < 1:
            raise InputFormatError(f"k_diffusion deve ser >= 1: {self.k_diffusion}")
        if self.embedding_mode == 'AE' and self.n_activity < 1:
            raise InputFormatError("Modo AE requer ao menos uma categoria de atividade")
        if self.is_transformer:
            if self.n_layers < 0:
                raise InputFormatError(f"n_layers não pode ser negativo: {self.n_layers}")
            if self.n_heads * self.d_key != self.hidden_dim:
                raise InputFormatError(
                    f"n_heads·d_key deve ser igual a D ({self.n_heads}·{self.d_key} != {self.hidden_dim})"
                )
        if self.sampling_decay <= 0:
            raise InputFormatError(f"sampling_decay deve ser positivo: {self.sampling_decay}")

    @property
    def uses_graph(self) -> bool:
        return self.architecture in GRAPH_ARCHITECTURES

    @property
    def is_transformer(self) -> bool:
        return self.architecture in TRANSFORMER_ARCHITECTURES

    @property
    def context_dim(self) -> int:
        """Largura da feature de contexto por passo (0 quando não há embedding temporal)."""
        if self.embedding_mode == 'AE':
            return self.n_activity
        if self.embedding_mode == 'TE':
            return TIMESTAMP_FEATURE_SIZE
        return 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'ModelConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InputFormatError(f"Configuração de modelo com campos desconhecidos: {sorted(unknown)}")
        return cls(**data)
