from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Prevê os Q passos seguintes ao histórico que começa em --start'
    service_name = 'predict'

    def add_arguments(self, parser):
        self.add_trained_arguments(parser)
        parser.add_argument('--traffic', required=True)
        parser.add_argument('--start', required=True, help='Primeiro passo do histórico (ISO-8601)')
        parser.add_argument('--out', required=True)
        parser.add_argument('--keep-zeros', action='store_true')
