"""Check the geometric properties of the orthogonality penalty and the embedding."""

from django.core.management.base import CommandError

from ...repositories import ReportRepository
from ...serializers import PropositionCheckTableSerializer
from ...services import check_table, run_proposition_checks
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Run the penalty and rank checks; exits nonzero on any failure'

    def add_arguments(self, parser):
        parser.add_argument('--seed', type=int, default=0, help='Base seed of the instances')
        parser.add_argument('--report', help='Write the table as JSON to this file')

    def run(self, **options):
        rows = run_proposition_checks(options['seed'])
        table = check_table(rows)
        for row in rows:
            status = 'info' if row.informational else ('ok' if row.passed else 'FAIL')
            self.stdout.write(
                f'{status:<4} {row.check:<22} seed={row.seed:<4} value {row.value:.6g} '
                f'threshold {row.threshold:.3g}  {row.detail}'
            )
        if options.get('report'):
            ReportRepository.save(options['report'], PropositionCheckTableSerializer(table).data)
        if not table['passed']:
            failed = [(row.check, row.seed) for row in rows if row.passed is False]
            raise CommandError(f"{table['failures']} checks failed: {failed}")
        self.stdout.write(self.style.SUCCESS(f'All {len(rows)} checks passed'))
