"""
Tensores, parâmetros e a fita de gravação do modo reverso.

A fita é dinâmica: cada operação executada dentro de um `with Tape()` cujo
resultado depende de algum tensor com `requires_grad` é registrada na ordem de
execução, e `backward` percorre os registros em ordem inversa.
"""

from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ShapeError

_active_tape: ContextVar[Optional['Tape']] = ContextVar('uagc_active_tape', default=None)


class Tensor:
    """Array float64 denso com buffer de gradiente opcional."""

    __array_priority__ = 100

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.ascontiguousarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    def numpy(self) -> np.ndarray:
        return self.value.copy()

    def zero_grad(self):
        self.grad = None

    def accumulate_grad(self, grad: np.ndarray):
        if grad.shape != self.value.shape:
            raise ShapeError(f"gradiente {grad.shape} não corresponde ao tensor {self.value.shape}")
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += grad

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # Operadores delegam para engine.ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, key):
        from . import ops
        return ops.slice_tensor(self, key)


class Parameter(Tensor):
    """Tensor nomeado de um modelo; só recebe gradiente quando `trainable`."""

    def __init__(self, name: str, value, trainable: bool = True):
        super().__init__(value, requires_grad=trainable)
        self.name = name
        self.trainable = trainable

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, trainable={self.trainable})"


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class TapeRecord:
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


class Tape:
    """Registro ordenado das operações executadas enquanto a fita está ativa."""

    def __init__(self):
        self.records: List[TapeRecord] = []
        self._token = None

    def __enter__(self) -> 'Tape':
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_tape.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self.records)


def active_tape() -> Optional[Tape]:
    return _active_tape.get()


def record(op: str, value: np.ndarray, inputs: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    """
    Cria o tensor de saída de uma operação e, se houver fita ativa e alguma
    entrada exigir gradiente, registra a função de retropropagação.
    """
    tape = _active_tape.get()
    needs_grad = tape is not None and any(t.requires_grad for t in inputs)
    output = Tensor(value, requires_grad=needs_grad)
    if needs_grad:
        tape.records.append(TapeRecord(op, tuple(inputs), output, backward))
    return output


def backward(tape: Tape, loss: Tensor):
    """
    Retropropaga a partir de uma perda escalar, acumulando (+=) nos `.grad`
    das folhas que exigem gradiente.

    Raises:
        ShapeError: perda não escalar
    """
    if loss.size != 1:
        raise ShapeError(f"backward requer perda escalar, recebido shape {loss.shape}")
    if not loss.requires_grad:
        return

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    tensors: Dict[int, Tensor] = {id(loss): loss}

    for entry in reversed(tape.records):
        grad_out = grads.pop(id(entry.output), None)
        tensors.pop(id(entry.output), None)
        if grad_out is None:
            continue
        input_grads = entry.backward(grad_out)
        for tensor, grad in zip(entry.inputs, input_grads):
            if grad is None or not tensor.requires_grad:
                continue
            if grad.shape != tensor.shape:
                raise ShapeError(
                    f"{entry.op}: gradiente {grad.shape} não corresponde à entrada {tensor.shape}"
                )
            key = id(tensor)
            if key in grads:
                grads[key] = grads[key] + grad
            else:
                grads[key] = grad
                tensors[key] = tensor

    # O que sobra são folhas
    for key, grad in grads.items():
        tensors[key].accumulate_grad(grad)
