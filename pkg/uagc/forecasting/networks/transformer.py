"""
UAGCTransformer: atenção temporal por sensor com convolução de grafo em cada
camada do codificador e do decodificador.

Os tokens ficam no layout (B, N, L, D): a atenção opera no eixo L de cada
sensor; a convolução de grafo troca para (B, L, N, D) e mistura sensores em
cada passo de tempo.
"""

import numpy as np

from ..engine import (
    Tensor,
    add,
    relu,
    reshape,
    scaled_dot_attention,
    slice_tensor,
    stack,
    transpose,
)
from .base import BaseForecaster
from .layers import Dense, DualWalkGraphConv, LayerNorm, Module

PE_BASE = 10000.0


def positional_encoding(length: int, width: int, offset: int = 0) -> np.ndarray:
    """PE(pos, 2i) = sin(pos/10000^(2i/D)), PE(pos, 2i+1) = cos(pos/10000^(2i/D))."""
    positions = np.arange(offset, offset + length, dtype=np.float64)[:, None]
    even = np.arange(0, width, 2, dtype=np.float64)
    angles = positions / np.power(PE_BASE, even / width)
    encoding = np.zeros((length, width), dtype=np.float64)
    encoding[:, 0::2] = np.sin(angles)
    encoding[:, 1::2] = np.cos(angles[:, : width // 2])
    return encoding


class MultiHeadAttention(Module):
    def __init__(self, name: str, width: int, n_heads: int, d_key: int, rng: np.random.Generator):
        super().__init__(name)
        self.n_heads = n_heads
        self.d_key = d_key
        self.query = self.add_child(Dense(f"{name}.query", width, n_heads * d_key, rng))
        self.key = self.add_child(Dense(f"{name}.key", width, n_heads * d_key, rng))
        self.value = self.add_child(Dense(f"{name}.value", width, n_heads * d_key, rng))
        self.output = self.add_child(Dense(f"{name}.output", n_heads * d_key, width, rng))

    def _split(self, x: Tensor) -> Tensor:
        # (B, N, L, H·dk) -> (B, N, H, L, dk)
        B, N, L, _ = x.shape
        return transpose(reshape(x, (B, N, L, self.n_heads, self.d_key)), (0, 1, 3, 2, 4))

    def __call__(self, queries: Tensor, memory: Tensor, causal: bool = False) -> Tensor:
        q = self._split(self.query(queries))
        k = self._split(self.key(memory))
        v = self._split(self.value(memory))
        attended = scaled_dot_attention(q, k, v, causal=causal)
        B, N, _, L, _ = attended.shape
        merged = reshape(transpose(attended, (0, 1, 3, 2, 4)), (B, N, L, self.n_heads * self.d_key))
        return self.output(merged)


class SpatialBlock(Module):
    """Mistura entre sensores: convolução em passeio duplo (GCTF) ou densa por posição (TF)."""

    def __init__(self, name: str, width: int, k: int, use_graph: bool, rng: np.random.Generator):
        super().__init__(name)
        self.use_graph = use_graph
        if use_graph:
            self.layer = self.add_child(DualWalkGraphConv(f"{name}.gconv", width, width, k, rng))
        else:
            self.layer = self.add_child(Dense(f"{name}.dense", width, width, rng))

    def __call__(self, x: Tensor, operators) -> Tensor:
        if not self.use_graph:
            return self.layer(x)
        by_time = transpose(x, (0, 2, 1, 3))
        return transpose(self.layer(by_time, operators), (0, 2, 1, 3))


class FeedForward(Module):
    def __init__(self, name: str, width: int, rng: np.random.Generator):
        super().__init__(name)
        self.expand = self.add_child(Dense(f"{name}.expand", width, 4 * width, rng))
        self.contract = self.add_child(Dense(f"{name}.contract", 4 * width, width, rng))

    def __call__(self, x: Tensor) -> Tensor:
        return self.contract(relu(self.expand(x)))


class EncoderLayer(Module):
    def __init__(self, name: str, config, rng: np.random.Generator):
        super().__init__(name)
        D = config.hidden_dim
        self.attention = self.add_child(MultiHeadAttention(f"{name}.attention", D, config.n_heads, config.d_key, rng))
        self.norm1 = self.add_child(LayerNorm(f"{name}.norm1", D))
        self.spatial = self.add_child(SpatialBlock(f"{name}.spatial", D, config.k_diffusion, config.uses_graph, rng))
        self.norm2 = self.add_child(LayerNorm(f"{name}.norm2", D))
        self.feed_forward = self.add_child(FeedForward(f"{name}.ffn", D, rng))
        self.norm3 = self.add_child(LayerNorm(f"{name}.norm3", D))

    def __call__(self, x: Tensor, operators) -> Tensor:
        x = self.norm1(add(x, self.attention(x, x)))
        x = self.norm2(add(x, self.spatial(x, operators)))
        return self.norm3(add(x, self.feed_forward(x)))


class DecoderLayer(Module):
    def __init__(self, name: str, config, rng: np.random.Generator):
        super().__init__(name)
        D = config.hidden_dim
        self.self_attention = self.add_child(
            MultiHeadAttention(f"{name}.self_attention", D, config.n_heads, config.d_key, rng)
        )
        self.norm1 = self.add_child(LayerNorm(f"{name}.norm1", D))
        self.cross_attention = self.add_child(
            MultiHeadAttention(f"{name}.cross_attention", D, config.n_heads, config.d_key, rng)
        )
        self.norm2 = self.add_child(LayerNorm(f"{name}.norm2", D))
        self.spatial = self.add_child(SpatialBlock(f"{name}.spatial", D, config.k_diffusion, config.uses_graph, rng))
        self.norm3 = self.add_child(LayerNorm(f"{name}.norm3", D))
        self.feed_forward = self.add_child(FeedForward(f"{name}.ffn", D, rng))
        self.norm4 = self.add_child(LayerNorm(f"{name}.norm4", D))

    def __call__(self, x: Tensor, memory: Tensor, operators) -> Tensor:
        x = self.norm1(add(x, self.self_attention(x, x, causal=True)))
        x = self.norm2(add(x, self.cross_attention(x, memory)))
        x = self.norm3(add(x, self.spatial(x, operators)))
        return self.norm4(add(x, self.feed_forward(x)))


class UAGCTransformer(BaseForecaster):
    """
    Transformer codificador-decodificador por sensor.

    O token de partida do decodificador é o último valor observado; as posições
    do decodificador continuam a codificação posicional a partir de P. Com teacher
    forcing o decodificador roda em paralelo com máscara causal; sem ele, a
    decodificação é autorregressiva.
    """

    def build(self, rng: np.random.Generator):
        self.encoder_layers = [
            self.add_child(EncoderLayer(f"encoder.{i}", self.config, rng)) for i in range(self.config.n_layers)
        ]
        self.decoder_layers = [
            self.add_child(DecoderLayer(f"decoder.{i}", self.config, rng)) for i in range(self.config.n_layers)
        ]
        P, Q, D = self.config.P, self.config.Q, self.config.hidden_dim
        self.encoding = positional_encoding(P + Q, D)

    def _tokens(self, values: np.ndarray, context_vectors, sensor_vectors, start: int, values_tensor=None) -> Tensor:
        """Tokens (B, N, L, D) para os valores (B, L, N) nas posições start..start+L-1."""
        steps = []
        length = values.shape[1] if values_tensor is None else len(values_tensor)
        for position in range(length):
            x_t = values_tensor[position] if values_tensor is not None else Tensor(values[:, position, :, None])
            step = self.bank.step_input(x_t, self.bank.context_at(context_vectors, start + position), sensor_vectors)
            steps.append(step)
        tokens = stack(steps, axis=2)
        return add(tokens, self.encoding[start:start + length])

    def _decode(self, tokens: Tensor, memory: Tensor, operators) -> Tensor:
        for layer in self.decoder_layers:
            tokens = layer(tokens, memory, operators)
        return tokens

    def forward(self, history, context=None, teacher=None, iteration: int = 0, rng=None) -> Tensor:
        history, teacher = self.check_inputs(history, teacher)
        config = self.config
        operators = self.require_operators() if config.uses_graph else None
        P, Q = config.P, config.Q

        sensor_vectors = self.bank.sensor_vectors()
        context_vectors = self.bank.context_vectors(context)

        memory = self._tokens(history, context_vectors, sensor_vectors, 0)
        for layer in self.encoder_layers:
            memory = layer(memory, operators)

        start = history[:, P - 1:P, :]
        if teacher is not None:
            inputs = np.concatenate([start, teacher[:, :Q - 1, :]], axis=1)
            decoded = self._decode(self._tokens(inputs, context_vectors, sensor_vectors, P), memory, operators)
            outputs = self.bank.output_projection(decoded)
            return transpose(outputs, (0, 2, 1, 3))

        fed = [Tensor(start[:, 0, :, None])]
        predictions = []
        for q in range(Q):
            tokens = self._tokens(None, context_vectors, sensor_vectors, P, values_tensor=fed)
            decoded = self._decode(tokens, memory, operators)
            last = slice_tensor(decoded, (slice(None), slice(None), q))
            prediction = self.bank.output_projection(last)
            predictions.append(prediction)
            fed.append(prediction)
        return stack(predictions, axis=1)
