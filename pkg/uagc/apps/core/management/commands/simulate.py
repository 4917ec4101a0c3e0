from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Simula a resposta à atividade com histórico constante de 30 mph em duas janelas'
    service_name = 'simulate'

    def add_arguments(self, parser):
        defaults = self.defaults()
        self.add_trained_arguments(parser)
        parser.add_argument('--out', required=True)
        parser.add_argument('--window1', default=defaults['window1'], help='Cenário 1, HH:MM-HH:MM')
        parser.add_argument('--window2', default=defaults['window2'], help='Cenário 2, HH:MM-HH:MM')
        parser.add_argument('--weekday', type=int, default=defaults['weekday'], help='0 = segunda')
        parser.add_argument('--ahead-minutes', type=int, default=defaults['ahead_minutes'])

    def report(self, result):
        self.stdout.write(f"Max |delta| (mph): {result['diagnostics']['max_abs_delta_mph']:.4f}")
