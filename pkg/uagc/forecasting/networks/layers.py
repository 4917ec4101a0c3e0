"""
Blocos básicos dos modelos: registro de parâmetros, camadas densas,
normalização e a convolução de grafo em passeio duplo.
"""

from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..engine import (
    Parameter,
    SparseOperator,
    Tensor,
    add,
    as_tensor,
    layer_norm,
    matmul,
    sparse_dense_matmul,
)
from ..exceptions import ShapeError


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class Module:
    """
    Contêiner de parâmetros nomeados e submódulos.

    Os nomes completos são `<prefixo>.<local>`, o que os torna únicos dentro de
    um modelo e estáveis entre execuções (usados pelo checkpoint e pelo Adam).
    """

    def __init__(self, name: str):
        self.name = name
        self._params: Dict[str, Parameter] = {}
        self._children: List['Module'] = []

    def add_param(self, local: str, value: np.ndarray, trainable: bool = True) -> Parameter:
        full = f"{self.name}.{local}" if self.name else local
        if local in self._params:
            raise ValueError(f"Parâmetro duplicado: {full}")
        param = Parameter(full, value, trainable=trainable)
        self._params[local] = param
        return param

    def add_child(self, module: 'Module') -> 'Module':
        self._children.append(module)
        return module

    def parameters(self) -> List[Parameter]:
        result = list(self._params.values())
        for child in self._children:
            result.extend(child.parameters())
        return result

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for param in self.parameters():
            yield param.name, param

    def zero_grad(self):
        for param in self.parameters():
            param.zero_grad()


class Dense(Module):
    """x·W + b no último eixo."""

    def __init__(self, name: str, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        super().__init__(name)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.weight = self.add_param('weight', glorot_uniform(rng, in_dim, out_dim))
        self.bias = self.add_param('bias', np.zeros(out_dim)) if bias else None

    def __call__(self, x) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.name}: entrada {x.shape}, esperado último eixo {self.in_dim}")
        out = matmul(x, self.weight)
        if self.bias is not None:
            out = add(out, self.bias)
        return out


class LayerNorm(Module):
    def __init__(self, name: str, width: int):
        super().__init__(name)
        self.gain = self.add_param('gain', np.ones(width))
        self.bias = self.add_param('bias', np.zeros(width))

    def __call__(self, x) -> Tensor:
        return layer_norm(x, self.gain, self.bias)


class GraphOperators:
    """Operadores de passeio para frente (D_out⁻¹A) e para trás (D_in⁻¹Aᵀ) como constantes esparsas."""

    def __init__(self, forward, backward):
        self.forward = forward if isinstance(forward, SparseOperator) else SparseOperator(forward)
        self.backward = backward if isinstance(backward, SparseOperator) else SparseOperator(backward)
        if self.forward.shape != self.backward.shape or self.forward.shape[0] != self.forward.shape[1]:
            raise ShapeError(f"Operadores de grafo incompatíveis: {self.forward.shape}, {self.backward.shape}")

    @classmethod
    def from_adjacency(cls, adjacency) -> 'GraphOperators':
        return cls(adjacency.a_fwd, adjacency.a_bwd)

    @property
    def n_sensors(self) -> int:
        return self.forward.shape[0]


def diffusion_terms(z, operators: GraphOperators, k: int) -> Tuple[List[Tensor], List[Tensor]]:
    """
    Potências aplicadas iterativamente: [A_fwd^1 Z, ..., A_fwd^K Z] e
    [A_bwd^1 Z, ..., A_bwd^K Z], sem materializar A^k.
    """
    z = as_tensor(z)
    forward_terms, backward_terms = [], []
    current_f, current_b = z, z
    for _ in range(k):
        current_f = sparse_dense_matmul(operators.forward, current_f)
        current_b = sparse_dense_matmul(operators.backward, current_b)
        forward_terms.append(current_f)
        backward_terms.append(current_b)
    return forward_terms, backward_terms


def dual_walk_gconv(
    z,
    operators: GraphOperators,
    w_fwd: Sequence[Tensor],
    w_bwd: Sequence[Tensor],
    w_self: Tensor,
    bias: Optional[Tensor] = None,
    terms: Optional[Tuple[List[Tensor], List[Tensor]]] = None,
) -> Tensor:
    """
    Convolução de grafo em passeio duplo com K passos de difusão.

    Soma Z·W_self + Σ_k (A_fwd^k Z)·W_fwd,k + (A_bwd^k Z)·W_bwd,k + bias, com K =
    len(w_fwd). Termos de difusão já calculados podem ser reaproveitados entre
    portas que recebem a mesma entrada.

    Args:
        z: Tensor (..., N, D)
        operators (GraphOperators): A_fwd e A_bwd
        w_fwd, w_bwd: K matrizes D×D' cada
        w_self: Matriz D×D'
        bias: Vetor D' opcional
        terms: Saída de diffusion_terms(z, operators, K)

    Returns:
        Tensor: (..., N, D')
    """
    z = as_tensor(z)
    k = len(w_fwd)
    if len(w_bwd) != k or k < 1:
        raise ShapeError(f"dual_walk_gconv: {len(w_fwd)} pesos forward e {len(w_bwd)} backward")
    if z.ndim < 2 or z.shape[-2] != operators.n_sensors:
        raise ShapeError(f"dual_walk_gconv: Z {z.shape} incompatível com N={operators.n_sensors}")
    if terms is None:
        terms = diffusion_terms(z, operators, k)
    forward_terms, backward_terms = terms

    out = matmul(z, w_self)
    for step in range(k):
        out = add(out, matmul(forward_terms[step], w_fwd[step]))
        out = add(out, matmul(backward_terms[step], w_bwd[step]))
    if bias is not None:
        out = add(out, bias)
    return out


class DualWalkGraphConv(Module):
    """Camada com pesos próprios para dual_walk_gconv."""

    def __init__(self, name: str, in_dim: int, out_dim: int, k: int, rng: np.random.Generator):
        super().__init__(name)
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.k = k
        self.w_self = self.add_param('w_self', glorot_uniform(rng, in_dim, out_dim))
        self.w_fwd = [self.add_param(f'w_fwd_{step + 1}', glorot_uniform(rng, in_dim, out_dim)) for step in range(k)]
        self.w_bwd = [self.add_param(f'w_bwd_{step + 1}', glorot_uniform(rng, in_dim, out_dim)) for step in range(k)]
        self.bias = self.add_param('bias', np.zeros(out_dim))

    def __call__(self, z, operators: GraphOperators, terms=None) -> Tensor:
        z = as_tensor(z)
        if z.shape[-1] != self.in_dim:
            raise ShapeError(f"{self.name}: entrada {z.shape}, esperado último eixo {self.in_dim}")
        return dual_walk_gconv(z, operators, self.w_fwd, self.w_bwd, self.w_self, self.bias, terms)
