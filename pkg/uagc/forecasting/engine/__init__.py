"""
Motor mínimo de diferenciação automática em modo reverso sobre numpy.
"""

from .tensor import Parameter, Tape, Tensor, active_tape, backward
from .ops import (
    SparseOperator,
    abs_,
    add,
    as_tensor,
    causal_mask,
    concat,
    embedding_lookup,
    layer_norm,
    matmul,
    mean,
    mul,
    relu,
    reshape,
    scaled_dot_attention,
    sigmoid,
    slice_tensor,
    softmax,
    sparse_dense_matmul,
    stack,
    sub,
    sum_,
    swap_last,
    tanh,
    transpose,
)
from .optim import Adam, adam_update
from .gradcheck import gradcheck, numerical_gradient

__all__ = [
    'Parameter',
    'Tape',
    'Tensor',
    'active_tape',
    'backward',
    'SparseOperator',
    'abs_',
    'add',
    'as_tensor',
    'causal_mask',
    'concat',
    'embedding_lookup',
    'layer_norm',
    'matmul',
    'mean',
    'mul',
    'relu',
    'reshape',
    'scaled_dot_attention',
    'sigmoid',
    'slice_tensor',
    'softmax',
    'sparse_dense_matmul',
    'stack',
    'sub',
    'sum_',
    'swap_last',
    'tanh',
    'transpose',
    'Adam',
    'adam_update',
    'gradcheck',
    'numerical_gradient',
]
