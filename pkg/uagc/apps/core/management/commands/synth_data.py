from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Gera o conjunto sintético em anel (rede, sensores, tráfego, pesquisa e pulsos)'
    service_name = 'synth_data'

    def add_arguments(self, parser):
        defaults = self.defaults()
        parser.add_argument('--out', required=True, help='Diretório de saída')
        parser.add_argument('--sensors', dest='sensors_count', type=int, default=defaults['sensors_count'])
        parser.add_argument('--days', type=int, default=defaults['days'])
        parser.add_argument('--seed', type=int, default=defaults['seed'])
