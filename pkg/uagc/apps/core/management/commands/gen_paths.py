from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Gera o conjunto de trajetos com A* ponderado por coeficientes de freeway'
    service_name = 'gen_paths'

    def add_arguments(self, parser):
        self.add_road_arguments(parser)
        self.add_path_arguments(parser)
        parser.add_argument('--out', required=True, help='Arquivo de trajetos de saída')
