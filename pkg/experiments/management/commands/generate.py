"""Write a synthetic multimodal dataset as DMH1 matrix files."""

from multimodal.factories import generate_synthetic
from multimodal.services import save_dataset
from ...forms import SyntheticSpecForm
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Generate a synthetic multimodal dataset with Gaussian class centroids'

    def add_arguments(self, parser):
        parser.add_argument('--n-per-class', type=int, help='Samples per class')
        parser.add_argument('--classes', type=int, dest='n_classes', help='Number of classes')
        parser.add_argument('--dims', help='Comma separated feature dimension per view')
        parser.add_argument('--noise', type=float, help='Standard deviation of the per-sample noise')
        parser.add_argument('--seed', type=int, help='Generator seed')
        self.add_output_argument(parser)

    def run(self, **options):
        data = {
            name: options[name] for name in ('n_per_class', 'n_classes', 'dims', 'noise', 'seed')
            if options.get(name) is not None
        }
        spec = SyntheticSpecForm(data).to_spec()
        dataset = generate_synthetic(spec)
        paths = save_dataset(dataset, self.output_dir(options))
        for view_id, path in zip(paths.view_ids, paths.view_paths):
            self.stdout.write(f'{view_id}: {path}')
        self.stdout.write(f'labels: {paths.labels_path}')
        self.stdout.write(self.style.SUCCESS(
            f'Generated {dataset.n} rows, {spec.n_classes} classes, views of dimension {list(spec.dims)}'
        ))
