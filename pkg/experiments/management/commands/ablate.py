"""Sweep hyperparameters against a gamma=0 reference."""

from ...forms import AblationGridForm
from ...repositories import ReportRepository
from ...serializers import AblationReportSerializer
from ...services import CODE_LENGTH_SWEEP, GAMMA_SWEEP, AblationService
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Train paired models over alpha, beta, gamma and code-length grids and compare them'

    def add_arguments(self, parser):
        self.add_dataset_arguments(parser)
        self.add_run_arguments(parser)
        group = parser.add_argument_group('grids')
        group.add_argument('--alpha-grid', help='Comma separated label-view alpha values')
        group.add_argument('--beta-grid', help='Comma separated feature-view beta values')
        group.add_argument('--gamma-grid', help='Comma separated gamma values')
        group.add_argument('--gamma-sweep', action='store_true', help='gamma over the powers of ten 1e-5 to 10')
        group.add_argument('--code-length-grid', help='Comma separated code lengths')
        group.add_argument('--code-length-sweep', action='store_true', help='Code lengths 16, 32, 64, 96 and 128')
        group.add_argument('--seeds', help='Comma separated seeds, the run seed by default')
        parser.add_argument('--name', default='ablation', help='Base name of the report file')
        self.add_output_argument(parser)

    def run(self, **options):
        dataset = self.dataset_from_options(options)
        run = self.run_config_from_options(options, view_count=len(dataset.views))
        data = {
            name: options[name]
            for name in ('alpha_grid', 'beta_grid', 'gamma_grid', 'code_length_grid', 'seeds')
            if options.get(name)
        }
        if options['gamma_sweep']:
            data['gamma_grid'] = ','.join(repr(value) for value in GAMMA_SWEEP)
        if options['code_length_sweep']:
            data['code_length_grid'] = ','.join(str(value) for value in CODE_LENGTH_SWEEP)
        grid = AblationGridForm(data).to_grid(default_seed=run.train.seed)

        rows = AblationService().run(dataset, run, grid)
        document = AblationReportSerializer({
            'dataset': dict(dataset.provenance),
            'train_config': run.train,
            'seeds': list(grid.seeds),
            'rows': rows,
        }).data
        path = ReportRepository.save(self.output_dir(options) / f"{options['name']}.json", document)

        for row in rows:
            maps = ' '.join(f'{report.map:.4f}' for report in row.reports)
            deltas = ' '.join(f'{delta:+.4f}' for delta in row.delta_map)
            self.stdout.write(
                f'{row.parameter:<12} {row.value:<10g} seed={row.seed:<3} c={row.code_length:<4} '
                f'MAP {maps}  dMAP {deltas or "-"}  decorrelation {row.decorrelation:.4f}  '
                f'embedding correlation {row.embedding_correlation:.6f}'
            )
        self.stdout.write(self.style.SUCCESS(f'report: {path}'))
