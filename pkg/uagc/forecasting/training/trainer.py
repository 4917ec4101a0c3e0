"""
Laço de treinamento com early stopping e redução da taxa de aprendizado.
"""

import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, TextIO

import numpy as np

from ..engine import Adam, Tape, backward
from ..exceptions import InputFormatError, NumericError
from ..networks import BaseForecaster
from .dataset import DatasetSplit, WindowDataset, window_starts
from .metrics import masked_mae_loss


@dataclass(frozen=True)
class TrainingOptions:
    batch_size: int = 32
    learning_rate: float = 0.01
    max_epochs: int = 100
    patience: int = 5
    lr_patience: int = 2
    lr_factor: float = 0.1
    seed: int = 0
    log_wall_time: bool = True


@dataclass
class TrainState:
    """Contadores do early stopping e do agendamento da taxa de aprendizado."""

    lr: float
    seed: int
    epoch: int = 0
    best_val: float = math.inf
    best_epoch: int = 0
    patience_counter: int = 0
    lr_counter: int = 0
    lr_reductions: int = 0
    global_batch: int = 0

    def register(self, val_mae: float, options: TrainingOptions) -> bool:
        """
        Atualiza os contadores com a validação da época corrente.

        Returns:
            bool: True quando a época melhorou a melhor validação
        """
        if val_mae < self.best_val:
            self.best_val = val_mae
            self.best_epoch = self.epoch
            self.patience_counter = 0
            self.lr_counter = 0
            return True
        self.patience_counter += 1
        self.lr_counter += 1
        if self.lr_counter >= options.lr_patience:
            self.lr *= options.lr_factor
            self.lr_counter = 0
            self.lr_reductions += 1
        return False

    def exhausted(self, options: TrainingOptions) -> bool:
        return self.patience_counter >= options.patience


@dataclass
class TrainResult:
    state: TrainState
    log: List[dict] = field(default_factory=list)
    best_params: Optional[dict] = None


def predict_windows(model: BaseForecaster, dataset: WindowDataset, starts: np.ndarray, batch_size: int) -> np.ndarray:
    """Previsões (B, Q, N) padronizadas para as janelas indicadas, sem teacher forcing."""
    outputs = []
    for offset in range(0, len(starts), batch_size):
        batch = dataset.batch(starts[offset:offset + batch_size])
        outputs.append(model.predict(batch['history'], batch['context']))
    if not outputs:
        return np.zeros((0, dataset.Q, dataset.series.n_sensors))
    return np.concatenate(outputs, axis=0)


def masked_mae_mph(pred_mph: np.ndarray, truth_mph: np.ndarray, mask: np.ndarray) -> float:
    if not mask.any():
        return float('nan')
    return float(np.abs(pred_mph[mask] - truth_mph[mask]).mean())


class Trainer:
    """
    Treina um modelo sobre as janelas de treino e seleciona a melhor época pela
    validação.

    A perda é o MAE mascarado em valores padronizados; os MAE registrados no log
    estão em mph.
    """

    def __init__(self, model: BaseForecaster, dataset: WindowDataset, split: DatasetSplit, options: TrainingOptions):
        self.model = model
        self.dataset = dataset
        self.split = split
        self.options = options
        self.logger = logging.getLogger(self.__class__.__name__)

        P, Q = model.config.P, model.config.Q
        self.train_starts = window_starts(split.train, P, Q)
        self.val_starts = window_starts(split.val, P, Q)
        if len(self.train_starts) == 0:
            raise InputFormatError(f"Partição de treino {split.train} curta demais para P+Q={P + Q}")
        if len(self.val_starts) == 0:
            raise InputFormatError(f"Partição de validação {split.val} curta demais para P+Q={P + Q}")

    def validate(self) -> float:
        pred = predict_windows(self.model, self.dataset, self.val_starts, self.options.batch_size)
        batch = self.dataset.batch(self.val_starts)
        return masked_mae_mph(self.split.scaler.inverse(pred), batch['target_mph'], batch['mask'])

    def run_epoch(self, state: TrainState, optimizer: Adam) -> float:
        """Uma passada pelas janelas de treino embaralhadas; devolve o MAE de treino em mph."""
        rng = np.random.default_rng([self.options.seed, state.epoch])
        order = rng.permutation(self.train_starts)
        total_error = 0.0
        total_count = 0.0

        for batch_index, offset in enumerate(range(0, len(order), self.options.batch_size)):
            batch = self.dataset.batch(order[offset:offset + self.options.batch_size])
            target = batch['target'][..., None]
            mask = batch['mask'][..., None]

            optimizer.zero_grad()
            with Tape() as tape:
                prediction = self.model.forward(
                    batch['history'],
                    batch['context'],
                    teacher=batch['target'],
                    iteration=state.global_batch,
                    rng=rng,
                )
                loss = masked_mae_loss(prediction, target, mask)
            value = float(loss.value)
            if not math.isfinite(value):
                raise NumericError(f"Perda não finita na época {state.epoch}, lote {batch_index}")
            backward(tape, loss)
            optimizer.step(state.lr)
            state.global_batch += 1

            count = float(mask.sum())
            total_error += value * count
            total_count += count

        if total_count == 0:
            return float('nan')
        return total_error / total_count * self.split.scaler.std

    def fit(self, log_stream: Optional[TextIO] = None) -> TrainResult:
        """
        Treina até esgotar a paciência ou o limite de épocas e restaura a melhor época.

        Args:
            log_stream: Destino das linhas JSON do log de treino

        Returns:
            TrainResult: Estado final, registros do log e os melhores parâmetros
        """
        options = self.options
        state = TrainState(lr=options.learning_rate, seed=options.seed)
        optimizer = Adam(self.model.parameters(), lr=options.learning_rate)
        result = TrainResult(state=state, best_params=self.model.state_dict())

        self.logger.info(
            f"Treinando {self.model.__class__.__name__}: {len(self.train_starts)} janelas de treino, "
            f"{len(self.val_starts)} de validação"
        )
        for epoch in range(1, options.max_epochs + 1):
            state.epoch = epoch
            lr_used = state.lr
            started = time.perf_counter()
            train_mae = self.run_epoch(state, optimizer)
            val_mae = self.validate()
            seconds = time.perf_counter() - started if options.log_wall_time else 0.0

            if state.register(val_mae, options):
                result.best_params = self.model.state_dict()

            record = {
                'epoch': epoch,
                'train_mae': train_mae,
                'val_mae': val_mae,
                'lr': lr_used,
                'seconds': seconds,
            }
            result.log.append(record)
            if log_stream is not None:
                log_stream.write(json.dumps(record) + '\n')
            self.logger.info(
                f"Época {epoch}: train_mae={train_mae:.4f} val_mae={val_mae:.4f} lr={lr_used:g}"
            )

            if state.exhausted(options):
                self.logger.info(f"Early stopping na época {epoch} (melhor época {state.best_epoch})")
                break

        self.model.load_state_dict(result.best_params)
        return result
