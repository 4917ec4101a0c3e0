"""
Arquivos da pesquisa de atividades e da tabela semanal.
"""

import logging
from typing import List, Tuple

import numpy as np
import pandas as pd

from ..exceptions import InputFormatError
from ..geodata.parsers import read_strict_csv
from .table import BINS_PER_WEEK, SURVEY_COLUMNS, ActivityTable

logger = logging.getLogger(__name__)


def read_survey_csv(source) -> List[Tuple[str, str, str]]:
    """Lê `category,weekday,start_minute`; a validação dos intervalos fica em build_histogram."""
    frame = read_strict_csv(source, SURVEY_COLUMNS, 'survey.csv')
    return list(frame.itertuples(index=False, name=None))


def write_survey_csv(rows, target):
    frame = pd.DataFrame(list(rows), columns=SURVEY_COLUMNS)
    frame.to_csv(target, index=False, lineterminator='\n')


def write_activity_csv(table: ActivityTable, target):
    """Escreve `bin,<rótulos>` com as 2016 linhas de frequência (valores de ida e volta)."""
    frame = pd.DataFrame({'bin': np.arange(BINS_PER_WEEK)})
    for k, label in enumerate(table.labels):
        frame[label] = [repr(float(v)) for v in table.raw[k]]
    frame.to_csv(target, index=False, lineterminator='\n')


def read_activity_csv(source) -> ActivityTable:
    """
    Lê a tabela semanal; os rótulos vêm do cabeçalho.

    Raises:
        InputFormatError: número de bins diferente de 2016, bins fora de ordem
            ou frequências negativas/não finitas
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, encoding='utf-8')
    except pd.errors.EmptyDataError:
        raise InputFormatError("activity.csv: arquivo vazio") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputFormatError(f"activity.csv: linha malformada ({e})") from None

    columns = list(frame.columns)
    if len(columns) < 2 or columns[0] != 'bin':
        raise InputFormatError(f"activity.csv: cabeçalho inválido {columns}")
    if len(frame) != BINS_PER_WEEK:
        raise InputFormatError(f"activity.csv: esperado {BINS_PER_WEEK} bins, encontrado {len(frame)}")
    try:
        bins = frame['bin'].astype(np.int64).to_numpy()
        values = frame[columns[1:]].astype(np.float64).to_numpy().T
    except ValueError as e:
        raise InputFormatError(f"activity.csv: valor inválido ({e})") from None
    if not np.array_equal(bins, np.arange(BINS_PER_WEEK)):
        raise InputFormatError("activity.csv: coluna bin deve ser 0..2015 em ordem")
    if not np.isfinite(values).all() or (values < 0).any():
        raise InputFormatError("activity.csv: frequências devem ser finitas e não negativas")
    return ActivityTable(labels=tuple(columns[1:]), raw=np.ascontiguousarray(values))
