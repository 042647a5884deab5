from django.core.management.base import CommandError

from lab.commandline import LabCommand, parse_params
from lab.theorems import THEOREMS, run_theorem
from serverlab.exceptions import ServerLabError


class Command(LabCommand):
    help = 'Run a canned experiment and check its acceptance conditions; exits 0 only if all hold'

    config_keys = ('seed', 'csv', 'json')
    path_keys = ('csv', 'json')

    def add_arguments(self, parser):
        parser.add_argument('theorem', choices=sorted(THEOREMS))
        super().add_arguments(parser)
        parser.add_argument('--param', action='append', default=[], help='override a parameter, key=value')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--csv', help='write the ratio rows here instead of stdout')
        parser.add_argument('--json', help='also write the ratio rows as JSON')

    def handle(self, *args, **options):
        values = self.resolve(options)
        params = parse_params(options['param'])
        seed = int(values.get('seed') or 0)

        try:
            result = run_theorem(options['theorem'], params, seed=seed)
        except ServerLabError as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}")
        except ValueError as exc:
            raise CommandError(str(exc))

        if result.reports:
            self.emit_reports(result.reports, values.get('csv'), values.get('json'))
            if options.get('store'):
                self.store_reports(result.reports, f"theorem {result.theorem}")
        for note in result.notes:
            self.stdout.write(self.style.WARNING(f"note: {note}"))
        for check in result.checks:
            mark = self.style.SUCCESS('ok  ') if check.passed else self.style.ERROR('FAIL')
            self.stdout.write(f"{mark} {check.name}: {check.detail}")

        if not result.passed:
            raise CommandError(f"{result.theorem}: {sum(not c.passed for c in result.checks)} checks failed")
        self.stdout.write(self.style.SUCCESS(f"{result.theorem}: all {len(result.checks)} checks hold"))
