"""
Hierarquia de erros do pipeline.

Cada erro carrega um código curto (usado no prefixo das mensagens da CLI) e o
código de saída do processo.
"""


class UAGCError(Exception):
    """Erro base do pipeline."""

    code = 'E_PIPELINE'
    exit_code = 1

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class InputFormatError(UAGCError, ValueError):
    """Arquivo ou valor de entrada fora do formato esperado."""

    code = 'E_INPUT'
    exit_code = 3


class ShapeError(InputFormatError):
    """Dimensões incompatíveis entre tensores, matrizes ou artefatos."""

    code = 'E_SHAPE'


class NumericError(UAGCError, ArithmeticError):
    """Falha numérica (perda ou gradiente não finito, desvio padrão nulo)."""

    code = 'E_NUMERIC'
    exit_code = 4
