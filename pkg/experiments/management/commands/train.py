"""Train a model and write the model file and its trace."""

from ...models import HashingModel
from ...repositories import ModelArtifactRepository, ReportRepository
from ...serializers import TraceSerializer
from ...services import ExperimentService
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Train hashing functions for every view and save the model'

    def add_arguments(self, parser):
        self.add_dataset_arguments(parser)
        self.add_run_arguments(parser)
        parser.add_argument('--name', default='model', help='Base name of the model and trace files')
        self.add_output_argument(parser)

    def run(self, **options):
        dataset = self.dataset_from_options(options)
        run = self.run_config_from_options(options, view_count=len(dataset.views))
        model, result = ExperimentService().train(dataset, run)

        out = self.output_dir(options)
        model_path = ModelArtifactRepository.save(out / f"{options['name']}.dmhm", model)
        trace_path = ReportRepository.save(out / f"{options['name']}_trace.json", self.trace_report(model, result))

        trace = result.trace
        self.stdout.write(f'model: {model_path}')
        self.stdout.write(f'trace: {trace_path}')
        self.stdout.write(self.style.SUCCESS(
            f'final objective {trace.final_objective:.10g} after {trace.iterations_run} iterations '
            f'(converged: {trace.converged}, variant: {model.variant})'
        ))

    @staticmethod
    def trace_report(model: HashingModel, result) -> dict:
        return {
            'views': model.view_ids,
            'code_length': model.code_length,
            'variant': model.variant,
            'trace': TraceSerializer(result.trace).data,
        }
