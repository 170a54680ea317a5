"""Evaluate trained models in every cross-modal direction."""

from ...repositories import ModelArtifactRepository, ReportRepository
from ...serializers import EvaluationFileSerializer
from ...services import QUERY_SPLITS, ExperimentService
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Report MAP and hash lookup F1 of one or more models, one report per code length'

    def add_arguments(self, parser):
        parser.add_argument('--model', nargs='+', required=True, dest='models', help='Model files')
        parser.add_argument('--query-split', choices=QUERY_SPLITS, default='test',
                            help="Rows used as queries; 'train' measures self-retrieval")
        self.add_dataset_arguments(parser)
        self.add_run_arguments(parser)
        self.add_output_argument(parser)

    def run(self, **options):
        dataset = self.dataset_from_options(options)
        run = self.run_config_from_options(options, view_count=len(dataset.views))
        service = ExperimentService()
        out = self.output_dir(options)
        written = set()

        for model_path in options['models']:
            model = ModelArtifactRepository.load(model_path)
            reports = service.evaluate(model, dataset, run, query_split=options['query_split'])
            name = f'eval_c{model.code_length}'
            suffix = 1
            while name in written:
                suffix += 1
                name = f'eval_c{model.code_length}_{suffix}'
            written.add(name)
            document = EvaluationFileSerializer({
                'model': str(model_path),
                'code_length': model.code_length,
                'variant': model.variant,
                'query_split': options['query_split'],
                'directions': reports,
            }).data
            path = ReportRepository.save(out / f'{name}.json', document)
            for report in reports:
                self.stdout.write(
                    f'c={report.code_length:<4} {report.task:<20} MAP {report.map:.4f}  '
                    f'F1@{report.radius} {report.f1:.4f}'
                )
            self.stdout.write(self.style.SUCCESS(f'report: {path}'))
