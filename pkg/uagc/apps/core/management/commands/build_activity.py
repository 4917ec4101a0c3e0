from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Constrói a tabela semanal de atividades a partir da pesquisa'
    service_name = 'build_activity'

    def add_arguments(self, parser):
        parser.add_argument('--in', dest='input', required=True, help='survey.csv (category,weekday,start_minute)')
        parser.add_argument('--out', required=True)
        parser.add_argument('--sigma', type=float, default=self.defaults()['sigma'], help='Suavização em bins de 5 min')
        parser.add_argument('--labels', help='Rótulos das categorias separados por vírgula')
