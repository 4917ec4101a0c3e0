"""
Operações diferenciáveis do motor.

Cada operação calcula o valor com numpy e registra na fita ativa uma função que
recebe o gradiente da saída e devolve o gradiente de cada entrada.
"""

import math
from functools import cached_property
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.special import expit

from ..exceptions import ShapeError
from .tensor import Tensor, record

ATTENTION_MASK_VALUE = -1e9
LAYER_NORM_EPS = 1e-5

TensorLike = Union[Tensor, np.ndarray, float, int]


def as_tensor(x: TensorLike) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=np.float64))


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Soma o gradiente sobre os eixos que foram expandidos por broadcast."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: shapes incompatíveis {a.shape} e {b.shape}") from None


def add(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('add', a, b)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return record('add', a.value + b.value, (a, b), grad_fn)


def sub(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('sub', a, b)

    def grad_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return record('sub', a.value - b.value, (a, b), grad_fn)


def mul(a: TensorLike, b: TensorLike) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape('mul', a, b)

    def grad_fn(g):
        return _unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)

    return record('mul', a.value * b.value, (a, b), grad_fn)


def matmul(a: TensorLike, b: TensorLike) -> Tensor:
    """
    Produto matricial nos dois últimos eixos, com broadcast nos eixos iniciais.

    Quando o operando direito é 2D (pesos), o gradiente dele é calculado com um
    único produto sobre as linhas achatadas.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: shapes incompatíveis {a.shape} e {b.shape}")
    try:
        value = np.matmul(a.value, b.value)
    except ValueError:
        raise ShapeError(f"matmul: shapes incompatíveis {a.shape} e {b.shape}") from None

    def grad_fn(g):
        grad_a = _unbroadcast(np.matmul(g, np.swapaxes(b.value, -1, -2)), a.shape)
        if b.ndim == 2:
            grad_b = a.value.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
        else:
            grad_b = _unbroadcast(np.matmul(np.swapaxes(a.value, -1, -2), g), b.shape)
        return grad_a, grad_b

    return record('matmul', value, (a, b), grad_fn)


class SparseOperator:
    """Matriz esparsa constante (CSR) com a transposta calculada uma única vez."""

    def __init__(self, matrix):
        self.matrix = sparse.csr_matrix(matrix, dtype=np.float64)

    @cached_property
    def transpose(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(self.matrix.T)

    @property
    def shape(self):
        return self.matrix.shape


def _apply_sparse(matrix: sparse.csr_matrix, x: np.ndarray) -> np.ndarray:
    # eixo -2 vira o primeiro para um único produto CSR
    moved = np.moveaxis(x, -2, 0)
    flat = moved.reshape(moved.shape[0], -1)
    product = np.asarray(matrix @ flat)
    return np.moveaxis(product.reshape((matrix.shape[0],) + moved.shape[1:]), 0, -2)


def sparse_dense_matmul(a: Union[SparseOperator, sparse.spmatrix], x: TensorLike) -> Tensor:
    """
    A·X aplicado sobre o eixo -2 de X (eixo dos sensores).

    A é constante; o gradiente flui só para X, via Aᵀ.
    """
    operator = a if isinstance(a, SparseOperator) else SparseOperator(a)
    x = as_tensor(x)
    if x.ndim < 2 or operator.shape[1] != x.shape[-2]:
        raise ShapeError(f"sparse_dense_matmul: shapes incompatíveis {operator.shape} e {x.shape}")

    def grad_fn(g):
        return (_apply_sparse(operator.transpose, g),)

    return record('sparse_dense_matmul', _apply_sparse(operator.matrix, x.value), (x,), grad_fn)


def sigmoid(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    value = expit(x.value)

    def grad_fn(g):
        return (g * value * (1.0 - value),)

    return record('sigmoid', value, (x,), grad_fn)


def tanh(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    value = np.tanh(x.value)

    def grad_fn(g):
        return (g * (1.0 - value * value),)

    return record('tanh', value, (x,), grad_fn)


def relu(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    positive = x.value > 0

    def grad_fn(g):
        return (g * positive,)

    return record('relu', np.where(positive, x.value, 0.0), (x,), grad_fn)


def abs_(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    sign = np.sign(x.value)

    def grad_fn(g):
        return (g * sign,)

    return record('abs', np.abs(x.value), (x,), grad_fn)


def softmax(x: TensorLike) -> Tensor:
    """Softmax no último eixo."""
    x = as_tensor(x)
    shifted = x.value - x.value.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    value = exp / exp.sum(axis=-1, keepdims=True)

    def grad_fn(g):
        return (value * (g - (g * value).sum(axis=-1, keepdims=True)),)

    return record('softmax', value, (x,), grad_fn)


def layer_norm(
    x: TensorLike,
    gain: Optional[Tensor] = None,
    bias: Optional[Tensor] = None,
    eps: float = LAYER_NORM_EPS,
) -> Tensor:
    """
    Normalização no último eixo: (x - média)/sqrt(var + eps), depois ganho e viés.
    """
    x = as_tensor(x)
    width = x.shape[-1]
    for name, param in (('gain', gain), ('bias', bias)):
        if param is not None and param.shape != (width,):
            raise ShapeError(f"layer_norm: {name} {param.shape} incompatível com {x.shape}")

    mean = x.value.mean(axis=-1, keepdims=True)
    centered = x.value - mean
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
    normalized = centered * inv_std
    value = normalized
    if gain is not None:
        value = value * gain.value
    if bias is not None:
        value = value + bias.value

    inputs = [x] + [p for p in (gain, bias) if p is not None]

    def grad_fn(g):
        grad_hat = g * gain.value if gain is not None else g
        grad_x = inv_std * (
            grad_hat
            - grad_hat.mean(axis=-1, keepdims=True)
            - normalized * (grad_hat * normalized).mean(axis=-1, keepdims=True)
        )
        grads = [grad_x]
        if gain is not None:
            grads.append((g * normalized).reshape(-1, width).sum(axis=0))
        if bias is not None:
            grads.append(g.reshape(-1, width).sum(axis=0))
        return grads

    return record('layer_norm', value, inputs, grad_fn)


def concat(tensors: Sequence[TensorLike], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        value = np.concatenate([t.value for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"concat: shapes incompatíveis {[t.shape for t in tensors]}") from None
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def grad_fn(g):
        return np.split(g, splits, axis=axis)

    return record('concat', value, tensors, grad_fn)


def stack(tensors: Sequence[TensorLike], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    try:
        value = np.stack([t.value for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(f"stack: shapes incompatíveis {[t.shape for t in tensors]}") from None

    def grad_fn(g):
        return [np.take(g, k, axis=axis) for k in range(len(tensors))]

    return record('stack', value, tensors, grad_fn)


def slice_tensor(x: TensorLike, key) -> Tensor:
    """Indexação básica (inteiros e fatias); o gradiente volta para as posições lidas."""
    x = as_tensor(x)
    try:
        value = x.value[key]
    except IndexError:
        raise ShapeError(f"slice: índice {key!r} inválido para shape {x.shape}") from None

    def grad_fn(g):
        grad = np.zeros_like(x.value)
        grad[key] += g
        return (grad,)

    return record('slice', np.array(value), (x,), grad_fn)


def reshape(x: TensorLike, shape) -> Tensor:
    x = as_tensor(x)
    try:
        value = x.value.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: {x.shape} não pode virar {shape}") from None

    def grad_fn(g):
        return (g.reshape(x.shape),)

    return record('reshape', value, (x,), grad_fn)


def transpose(x: TensorLike, axes: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    axes = tuple(axes)
    if sorted(a % x.ndim for a in axes) != list(range(x.ndim)):
        raise ShapeError(f"transpose: eixos {axes} inválidos para shape {x.shape}")
    inverse = tuple(np.argsort([a % x.ndim for a in axes]))

    def grad_fn(g):
        return (np.transpose(g, inverse),)

    return record('transpose', np.transpose(x.value, axes), (x,), grad_fn)


def swap_last(x: TensorLike) -> Tensor:
    x = as_tensor(x)
    axes = list(range(x.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return transpose(x, axes)


def sum_(x: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    value = x.value.sum(axis=axis, keepdims=keepdims)

    def grad_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return record('sum', np.asarray(value), (x,), grad_fn)


def mean(x: TensorLike, axis=None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    count = x.size if axis is None else np.prod([x.shape[a] for a in np.atleast_1d(axis)])
    return mul(sum_(x, axis=axis, keepdims=keepdims), 1.0 / float(count))


def embedding_lookup(table: Tensor, indices) -> Tensor:
    """Linhas da tabela nos índices informados (equivale a one-hot × tabela)."""
    indices = np.asarray(indices, dtype=np.int64)
    if table.ndim != 2:
        raise ShapeError(f"embedding_lookup: tabela deve ser 2D, recebido {table.shape}")
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        raise ShapeError(f"embedding_lookup: índice fora de 0..{table.shape[0] - 1}")

    def grad_fn(g):
        grad = np.zeros_like(table.value)
        np.add.at(grad, indices.ravel(), g.reshape(-1, table.shape[1]))
        return (grad,)

    return record('embedding_lookup', table.value[indices], (table,), grad_fn)


def causal_mask(length: int) -> np.ndarray:
    """Máscara aditiva: posição q só enxerga posições ≤ q."""
    upper = np.triu(np.ones((length, length), dtype=bool), k=1)
    return np.where(upper, ATTENTION_MASK_VALUE, 0.0)


def scaled_dot_attention(q: Tensor, k: Tensor, v: Tensor, causal: bool = False) -> Tensor:
    """
    softmax(QKᵀ/√d_k)·V nos dois últimos eixos.

    Args:
        q: (..., Lq, d_k)
        k: (..., Lk, d_k)
        v: (..., Lk, d_v)
        causal (bool): Aplica máscara triangular (exige Lq == Lk)
    """
    if q.shape[-1] != k.shape[-1] or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"scaled_dot_attention: shapes incompatíveis {q.shape}, {k.shape}, {v.shape}")
    scores = mul(matmul(q, swap_last(k)), 1.0 / math.sqrt(q.shape[-1]))
    if causal:
        if q.shape[-2] != k.shape[-2]:
            raise ShapeError(f"scaled_dot_attention: máscara causal requer Lq == Lk ({q.shape}, {k.shape})")
        scores = add(scores, causal_mask(q.shape[-2]))
    return matmul(softmax(scores), v)
