"""
Leitura e escrita de matrizes esparsas no formato texto `uagc-sparse`.
"""

import math
import logging
import re
from typing import TextIO

import numpy as np
from scipy import sparse

from ..exceptions import InputFormatError

logger = logging.getLogger(__name__)

SPARSE_HEADER = re.compile(r'^# uagc-sparse v1 rows=(\d+) cols=(\d+)$')


def canonical(matrix) -> sparse.csr_matrix:
    """CSR com índices ordenados, sem duplicatas e sem zeros explícitos."""
    result = sparse.csr_matrix(matrix, dtype=np.float64, copy=True)
    result.sum_duplicates()
    result.eliminate_zeros()
    result.sort_indices()
    return result


def write_sparse(matrix, stream: TextIO):
    """
    Escreve a matriz: cabeçalho com as dimensões e uma linha `i,j,valor` por entrada
    não nula, ordenada por (i, j). Valores em representação decimal de ida e volta.
    """
    matrix = canonical(matrix)
    rows, cols = matrix.shape
    stream.write(f"# uagc-sparse v1 rows={rows} cols={cols}\n")
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    for k in order:
        stream.write(f"{int(coo.row[k])},{int(coo.col[k])},{float(coo.data[k])!r}\n")


def read_sparse(stream: TextIO, label: str = 'sparse') -> sparse.csr_matrix:
    """
    Lê uma matriz escrita por write_sparse.

    Raises:
        InputFormatError: cabeçalho inválido, índice fora do intervalo, entrada
            duplicada ou valor não finito (com o número da linha)
    """
    header = stream.readline().rstrip('\n')
    match = SPARSE_HEADER.match(header)
    if not match:
        raise InputFormatError(f"{label}: cabeçalho inválido {header!r}")
    n_rows, n_cols = int(match.group(1)), int(match.group(2))
    if n_rows < 1 or n_cols < 1:
        raise InputFormatError(f"{label}: dimensões devem ser positivas ({n_rows}x{n_cols})")

    rows, cols, values = [], [], []
    seen = set()
    for line_number, line in enumerate(stream, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(',')
        if len(parts) != 3:
            raise InputFormatError(f"{label}: linha {line_number} malformada")
        try:
            i, j, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise InputFormatError(f"{label}: linha {line_number} malformada") from None
        if not (0 <= i < n_rows and 0 <= j < n_cols):
            raise InputFormatError(f"{label}: índice fora do intervalo na linha {line_number}: ({i},{j})")
        if not math.isfinite(value):
            raise InputFormatError(f"{label}: valor não finito na linha {line_number}")
        if (i, j) in seen:
            raise InputFormatError(f"{label}: entrada duplicada na linha {line_number}: ({i},{j})")
        seen.add((i, j))
        rows.append(i)
        cols.append(j)
        values.append(value)

    matrix = sparse.csr_matrix(
        (np.array(values, dtype=np.float64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(n_rows, n_cols),
    )
    return canonical(matrix)
