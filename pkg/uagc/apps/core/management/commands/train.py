from ._common import PipelineCommand, add_model_arguments


class Command(PipelineCommand):
    help = 'Treina UAGCRN, UAGCTransformer ou uma variante de ablação'
    service_name = 'train'

    def add_arguments(self, parser):
        defaults = self.defaults()
        parser.add_argument('--traffic', required=True)
        parser.add_argument('--sensors', help='sensors.csv para conferir a ordem das colunas')
        parser.add_argument('--adjacency')
        parser.add_argument('--activity')
        parser.add_argument('--out', required=True, help='Checkpoint de saída')
        parser.add_argument('--log', help='Log JSON por época (padrão: <out>.log.jsonl)')
        add_model_arguments(parser, defaults)
        parser.add_argument('--batch-size', type=int, default=defaults['batch_size'])
        parser.add_argument('--lr', type=float, default=defaults['lr'])
        parser.add_argument('--max-epochs', type=int, default=defaults['max_epochs'])
        parser.add_argument('--patience', type=int, default=defaults['patience'])
        parser.add_argument('--lr-patience', type=int, default=defaults['lr_patience'])
        parser.add_argument('--lr-factor', type=float, default=defaults['lr_factor'])
        parser.add_argument('--seed', type=int, default=defaults['seed'])
        parser.add_argument('--keep-zeros', action='store_true', help='Velocidade 0 é um valor válido')
        parser.add_argument('--no-wall-time', action='store_true', help='Grava seconds=0 no log')
