from ._common import PipelineCommand


class Command(PipelineCommand):
    help = 'Constrói A^(D), A^(S) e a adjacência final A a partir da rede viária e dos trajetos gerados'
    service_name = 'build_graph'

    def add_arguments(self, parser):
        defaults = self.defaults()
        self.add_road_arguments(parser)
        self.add_path_arguments(parser)
        parser.add_argument('--paths', help='Arquivo de trajetos existente (pula a geração)')
        parser.add_argument('--out-dir', required=True)
        parser.add_argument('--sigma-miles', type=float, default=defaults['sigma_miles'])
        parser.add_argument('--kappa-miles', type=float, default=defaults['kappa_miles'])

    def report(self, result):
        d = result['diagnostics']
        self.stdout.write(f"N: {d['n_sensors']}")
        self.stdout.write(f"NNZ: {d['nnz']} ({d['nnz_percent']:.1f}%)")
        self.stdout.write(f"Mean B.C.: {d['mean_bc']:.4f}")
        self.stdout.write(f"Legacy NNZ: {d['legacy_nnz']} (mean B.C. {d['legacy_mean_bc']:.4f})")
        self.stdout.write(f"Distance std (mi): {d['distance_std_miles']:.3f}")
        self.stdout.write(f"Paths: {d['paths']}  Grid: {d['grid']}  Roads: {d['roads']}")
