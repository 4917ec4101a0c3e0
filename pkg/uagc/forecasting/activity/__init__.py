from .table import (
    BINS_PER_DAY,
    BINS_PER_WEEK,
    DEFAULT_LABELS,
    TIMESTAMP_FEATURE_SIZE,
    ActivityTable,
    build_histogram,
    normalize_activity,
    slice_window,
    smooth_histogram,
    timestamp_feature,
    timestamp_features,
    weekly_bin,
    window_bins,
)
from .files import read_activity_csv, read_survey_csv, write_activity_csv, write_survey_csv

__all__ = [
    'BINS_PER_DAY',
    'BINS_PER_WEEK',
    'DEFAULT_LABELS',
    'TIMESTAMP_FEATURE_SIZE',
    'ActivityTable',
    'build_histogram',
    'normalize_activity',
    'slice_window',
    'smooth_histogram',
    'timestamp_feature',
    'timestamp_features',
    'weekly_bin',
    'window_bins',
    'read_activity_csv',
    'read_survey_csv',
    'write_activity_csv',
    'write_survey_csv',
]
