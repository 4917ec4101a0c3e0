from .series import STEP_MINUTES, TrafficSeries, load_traffic_csv, write_traffic_csv
from .dataset import (
    SPLIT_RATIOS,
    DatasetSplit,
    Scaler,
    WindowDataset,
    chronological_ranges,
    context_for_bins,
    make_split,
    standardize,
    window_starts,
)
from .metrics import HorizonMetrics, masked_mae_loss, masked_metrics, report_horizons
from .baselines import last_repeat
from .trainer import TrainResult, TrainState, Trainer, TrainingOptions, masked_mae_mph, predict_windows
from .synthetic import (
    SyntheticDataset,
    make_synthetic_dataset,
    read_pulses_csv,
    replay_speeds,
    write_pulses_csv,
)

__all__ = [
    'STEP_MINUTES',
    'TrafficSeries',
    'load_traffic_csv',
    'write_traffic_csv',
    'SPLIT_RATIOS',
    'DatasetSplit',
    'Scaler',
    'WindowDataset',
    'chronological_ranges',
    'context_for_bins',
    'make_split',
    'standardize',
    'window_starts',
    'HorizonMetrics',
    'masked_mae_loss',
    'masked_metrics',
    'report_horizons',
    'last_repeat',
    'TrainResult',
    'TrainState',
    'Trainer',
    'TrainingOptions',
    'masked_mae_mph',
    'predict_windows',
    'SyntheticDataset',
    'make_synthetic_dataset',
    'read_pulses_csv',
    'replay_speeds',
    'write_pulses_csv',
]
