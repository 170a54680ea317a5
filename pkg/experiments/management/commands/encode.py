"""Encode the rows of one view file into a packed code file."""

from codes.repositories import PackedCodesRepository
from hashing.models import ViewMatrix
from multimodal.repositories import MatrixFileRepository
from ...repositories import ModelArtifactRepository
from ...services import encode_with_model
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Encode a DMH1 view file with a trained model into DMHC codes'

    def add_arguments(self, parser):
        parser.add_argument('--model', required=True, help='Model file')
        parser.add_argument('--view', required=True, help='DMH1 matrix of raw view rows')
        parser.add_argument('--view-id', required=True, help='Which of the model views the rows belong to')
        parser.add_argument('--codes', help='Output DMHC file, <out>/<view-id>.dmhc by default')
        self.add_output_argument(parser)

    def run(self, **options):
        model = ModelArtifactRepository.load(options['model'])
        view = ViewMatrix(MatrixFileRepository.load(options['view']), view_id=options['view_id'])
        codes = encode_with_model(model, view, options['view_id'])
        path = options.get('codes') or self.output_dir(options) / f"{options['view_id']}.dmhc"
        path = PackedCodesRepository.save(path, codes)
        self.stdout.write(self.style.SUCCESS(f'Encoded {codes.n} rows into {codes.c}-bit codes: {path}'))
