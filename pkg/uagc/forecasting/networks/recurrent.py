"""
UAGCRN: codificador-decodificador recorrente com células GRU de convolução de
grafo (GCRN) ou, na variante só temporal, células LSTM densas.
"""

import math

import numpy as np

from ..engine import Tensor, add, concat, mul, sigmoid, slice_tensor, stack, sub, tanh
from .base import BaseForecaster
from .layers import Dense, DualWalkGraphConv, GraphOperators, Module, diffusion_terms


class GCGRUCell(Module):
    """
    r = σ(G_r([x ⊕ h])), u = σ(G_u([x ⊕ h])), c = tanh(G_c([x ⊕ r⊙h])),
    h' = u⊙h + (1-u)⊙c, com cada G uma convolução em passeio duplo 2D → D.
    """

    def __init__(self, name: str, hidden_dim: int, k: int, rng: np.random.Generator):
        super().__init__(name)
        self.hidden_dim = hidden_dim
        self.k = k
        self.reset_gate = self.add_child(DualWalkGraphConv(f"{name}.reset", 2 * hidden_dim, hidden_dim, k, rng))
        self.update_gate = self.add_child(DualWalkGraphConv(f"{name}.update", 2 * hidden_dim, hidden_dim, k, rng))
        self.candidate = self.add_child(DualWalkGraphConv(f"{name}.candidate", 2 * hidden_dim, hidden_dim, k, rng))

    def initial_state(self, batch: int, n_sensors: int):
        return Tensor(np.zeros((batch, n_sensors, self.hidden_dim)))

    def __call__(self, x, h, operators: GraphOperators):
        joined = concat([x, h])
        # r e u recebem a mesma entrada: difusão calculada uma vez
        terms = diffusion_terms(joined, operators, self.k)
        r = sigmoid(self.reset_gate(joined, operators, terms))
        u = sigmoid(self.update_gate(joined, operators, terms))
        c = tanh(self.candidate(concat([x, mul(r, h)]), operators))
        h_next = add(mul(u, h), mul(sub(1.0, u), c))
        return h_next, h_next


def gcgru_cell(cell: GCGRUCell, x, h_prev, operators: GraphOperators) -> Tensor:
    """Um passo da célula; devolve h_next (B, N, D)."""
    h_next, _ = cell(x, h_prev, operators)
    return h_next


class LSTMCell(Module):
    """LSTM com portas densas sobre [x ⊕ h]; sem mistura entre sensores."""

    def __init__(self, name: str, hidden_dim: int, rng: np.random.Generator):
        super().__init__(name)
        self.hidden_dim = hidden_dim
        self.gates = self.add_child(Dense(f"{name}.gates", 2 * hidden_dim, 4 * hidden_dim, rng))

    def initial_state(self, batch: int, n_sensors: int):
        zeros = np.zeros((batch, n_sensors, self.hidden_dim))
        return Tensor(zeros), Tensor(zeros.copy())

    def __call__(self, x, state, operators=None):
        h, c = state
        D = self.hidden_dim
        z = self.gates(concat([x, h]))
        i = sigmoid(slice_tensor(z, (Ellipsis, slice(0, D))))
        f = sigmoid(slice_tensor(z, (Ellipsis, slice(D, 2 * D))))
        o = sigmoid(slice_tensor(z, (Ellipsis, slice(2 * D, 3 * D))))
        g = tanh(slice_tensor(z, (Ellipsis, slice(3 * D, 4 * D))))
        c_next = add(mul(f, c), mul(i, g))
        h_next = mul(o, tanh(c_next))
        return h_next, (h_next, c_next)


def teacher_forcing_probability(iteration: int, decay: float) -> float:
    """Decaimento sigmoide inverso k/(k + exp(i/k))."""
    exponent = iteration / decay
    if exponent > 700:
        return 0.0
    return decay / (decay + math.exp(exponent))


class UAGCRN(BaseForecaster):
    """
    Codificador e decodificador recorrentes com células independentes.

    O decodificador parte do estado final do codificador com um valor "go" nulo;
    com teacher forcing recebe o valor verdadeiro anterior, senão a própria previsão.
    A arquitetura LSTM usa o mesmo fluxo com células LSTM densas.
    """

    def build(self, rng: np.random.Generator):
        D = self.config.hidden_dim
        if self.config.architecture == 'LSTM':
            self.encoder = self.add_child(LSTMCell('encoder', D, rng))
            self.decoder = self.add_child(LSTMCell('decoder', D, rng))
        else:
            self.encoder = self.add_child(GCGRUCell('encoder', D, self.config.k_diffusion, rng))
            self.decoder = self.add_child(GCGRUCell('decoder', D, self.config.k_diffusion, rng))

    def forward(self, history, context=None, teacher=None, iteration: int = 0, rng=None) -> Tensor:
        history, teacher = self.check_inputs(history, teacher)
        config = self.config
        operators = self.require_operators() if config.uses_graph else None
        batch, N = history.shape[0], config.n_sensors

        sensor_vectors = self.bank.sensor_vectors()
        context_vectors = self.bank.context_vectors(context)

        state = self.encoder.initial_state(batch, N)
        for t in range(config.P):
            x_t = Tensor(history[:, t, :, None])
            step = self.bank.step_input(x_t, self.bank.context_at(context_vectors, t), sensor_vectors)
            _, state = self.encoder(step, state, operators)

        sampling = config.scheduled_sampling and teacher is not None and rng is not None
        probability = teacher_forcing_probability(iteration, config.sampling_decay) if sampling else 1.0

        previous = Tensor(np.zeros((batch, N, 1)))
        predictions = []
        for q in range(config.Q):
            step = self.bank.step_input(
                previous, self.bank.context_at(context_vectors, config.P + q), sensor_vectors
            )
            output, state = self.decoder(step, state, operators)
            prediction = self.bank.output_projection(output)
            predictions.append(prediction)

            if teacher is None:
                previous = prediction
            elif sampling and rng.random() >= probability:
                previous = prediction
            else:
                previous = Tensor(teacher[:, q, :, None])

        return stack(predictions, axis=1)
