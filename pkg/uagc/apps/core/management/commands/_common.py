"""
Base dos comandos do pipeline: flags compartilhadas, chamada ao serviço e
conversão do resultado em código de saída.
"""

import argparse
import sys

from django.core.management.base import BaseCommand, CommandError, handle_default_options
from django.db import connections

from uagc.apps.core import services
from uagc.forecasting.networks import ARCHITECTURES, EMBEDDING_MODES

BASE_OPTIONS = {
    'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks',
}


def float_list(value: str) -> list:
    """`1.0,0.9,0.8` -> [1.0, 0.9, 0.8]"""
    try:
        values = [float(item) for item in value.split(',') if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de números inválida: {value!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("lista vazia")
    return values


class PipelineCommand(BaseCommand):
    """
    Comando que delega a um serviço de `services.py`.

    Falhas viram CommandError com `returncode` igual ao código de saída do erro e
    mensagem de uma linha `<código> stage=<etapa>: <mensagem>`.
    """

    service_name = None

    def defaults(self) -> dict:
        return services.defaults()

    def add_road_arguments(self, parser):
        defaults = self.defaults()
        parser.add_argument('--nodes', help='CSV de nós (node_id,lat,lon)')
        parser.add_argument('--edges', help='CSV de arestas (edge_id,from_node,to_node,length_miles,is_freeway)')
        parser.add_argument('--osm', help='Extrato OSM XML, alternativa a --nodes/--edges')
        parser.add_argument('--highways', default=defaults['highways'], help='Valores da tag highway mantidos do OSM')
        parser.add_argument('--sensors', required=True, help='CSV de sensores (sensor_id,lat,lon)')

    def add_path_arguments(self, parser):
        defaults = self.defaults()
        parser.add_argument('--cell-miles', type=float, default=defaults['cell_miles'])
        parser.add_argument('--padding-miles', type=float, default=defaults['padding_miles'])
        parser.add_argument('--coeffs', type=float_list, default=defaults['coeffs'], help='Coeficientes de freeway')
        parser.add_argument('--reps', type=int, default=defaults['reps'], help='Sorteios por par de células')
        parser.add_argument('--seed', type=int, default=defaults['seed'])
        parser.add_argument('--threads', type=int, default=defaults['threads'])

    def add_trained_arguments(self, parser):
        parser.add_argument('--checkpoint', required=True)
        parser.add_argument('--adjacency', help='Adjacência (.sparse); obrigatória para GCRN/GCTF')
        parser.add_argument('--activity', help='Tabela de atividades; obrigatória no modo AE')

    def service_options(self, options: dict) -> dict:
        return {key: value for key, value in options.items() if key not in BASE_OPTIONS}

    def report(self, result: dict):
        for key, value in result.get('diagnostics', {}).items():
            self.stdout.write(f"{key}: {value}")

    def handle(self, *args, **options):
        result = getattr(services, self.service_name)(self.service_options(options))
        if not result['success']:
            message = ' '.join(str(result['error']).split())
            raise CommandError(
                f"{result['code']} stage={result['stage']}: {message}",
                returncode=result['exit_code'],
            )
        self.report(result)
        self.stdout.write(self.style.SUCCESS(f"{result['command']}: {result['output']}"))

    def run_from_argv(self, argv):
        # como o BaseCommand, mas a mensagem de erro começa pelo código
        self._called_from_command_line = True
        parser = self.create_parser(argv[0], argv[1])
        options = parser.parse_args(argv[2:])
        cmd_options = vars(options)
        args = cmd_options.pop('args', ())
        handle_default_options(options)
        try:
            self.execute(*args, **cmd_options)
        except CommandError as e:
            if options.traceback:
                raise
            self.stderr.write(str(e))
            sys.exit(e.returncode)
        finally:
            connections.close_all()


def add_model_arguments(parser, defaults: dict):
    parser.add_argument('--arch', choices=ARCHITECTURES, default=defaults['arch'])
    parser.add_argument('--embedding', choices=EMBEDDING_MODES, default=defaults['embedding'])
    parser.add_argument('--no-sensor-embedding', action='store_true')
    parser.add_argument('--hidden-dim', type=int, default=defaults['hidden_dim'])
    parser.add_argument('--history', type=int, default=defaults['history'], help='P, passos de histórico')
    parser.add_argument('--horizon', type=int, default=defaults['horizon'], help='Q, passos previstos')
    parser.add_argument('--k-diffusion', type=int, default=defaults['k_diffusion'])
    parser.add_argument('--layers', type=int, default=defaults['layers'], help='Camadas do transformer')
    parser.add_argument('--heads', type=int, default=defaults['heads'])
    parser.add_argument('--key-dim', type=int, default=defaults['key_dim'])
    parser.add_argument('--scheduled-sampling', action='store_true')
    parser.add_argument('--no-center', action='store_true', help='Normaliza a atividade só pelo desvio padrão')
