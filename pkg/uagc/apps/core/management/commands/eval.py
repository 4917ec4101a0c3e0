from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Avalia um checkpoint com MAE/RMSE/MAPE mascarados nos passos 3, 6 e último'
    service_name = 'evaluate'

    def add_arguments(self, parser):
        defaults = self.defaults()
        self.add_trained_arguments(parser)
        parser.add_argument('--traffic', required=True)
        parser.add_argument('--out', required=True, help='Relatório CSV')
        parser.add_argument('--split', choices=('train', 'val', 'test'), default=defaults['split'])
        parser.add_argument('--baseline', choices=('last-repeat',))
        parser.add_argument('--batch-size', type=int, default=defaults['batch_size'])
        parser.add_argument('--keep-zeros', action='store_true')

    def report(self, result):
        for row in result['diagnostics']['rows']:
            self.stdout.write(
                f"{row['model']} step {row['horizon_step']}: MAE {row['mae']:.4f} "
                f"RMSE {row['rmse']:.4f} MAPE {row['mape_percent']:.2f}%"
            )
