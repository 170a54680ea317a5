"""Compare the analytic gradients with central finite differences."""

from django.core.management.base import CommandError

from ...repositories import ReportRepository
from ...serializers import GradientCheckTableSerializer
from ...services import check_table, run_gradient_checks
from ..base import ToolkitCommand


class Command(ToolkitCommand):
    help = 'Run the finite-difference gradient checks; exits nonzero on any failure'

    # Replaced in tests to inject a broken gradient.
    service = None

    def add_arguments(self, parser):
        parser.add_argument('--instances', type=int, default=20, help='Random instances per regularizer form')
        parser.add_argument('--seed', type=int, default=0, help='Seed of the first instance')
        parser.add_argument('--report', help='Write the table as JSON to this file')

    def run(self, **options):
        rows = run_gradient_checks(options['instances'], options['seed'], service=self.service)
        table = check_table(rows)
        for row in rows:
            status = 'ok' if row.passed else 'FAIL'
            self.stdout.write(
                f'{status:<4} seed={row.seed:<4} {row.target:<7} {row.regularizer:<10} gamma={row.gamma:<6g} '
                f'n={row.n} d={row.d} c={row.c} max rel error {row.max_rel_error:.3g}'
            )
        if options.get('report'):
            ReportRepository.save(options['report'], GradientCheckTableSerializer(table).data)
        if not table['passed']:
            seeds = sorted({row.seed for row in rows if not row.passed})
            raise CommandError(f"{table['failures']} gradient checks failed; instance seeds {seeds}")
        self.stdout.write(self.style.SUCCESS(f'All {len(rows)} gradient checks passed'))
