from django.core.management.base import BaseCommand, CommandError

from lab.verification import SUITES, run_suite


class Command(BaseCommand):
    help = 'Run a property suite: ' + ', '.join(SUITES)

    def add_arguments(self, parser):
        parser.add_argument('suite', choices=sorted(SUITES))
        parser.add_argument('--seed', type=int, default=0)
        parser.add_argument('--workers', type=int, help='worker threads (default SERVERLAB_VERIFY_WORKERS)')

    def handle(self, *args, **options):
        result = run_suite(options['suite'], seed=options['seed'], workers=options['workers'])
        for note in result.notes:
            self.stdout.write(note)
        for failure in result.failures[:20]:
            self.stdout.write(self.style.ERROR(failure))
        if len(result.failures) > 20:
            self.stdout.write(self.style.ERROR(f"... and {len(result.failures) - 20} more"))
        summary = f"{result.name}: {result.passed}/{result.cases} passed"
        if not result.ok:
            raise CommandError(f"{summary} FAIL")
        self.stdout.write(self.style.SUCCESS(f"{summary} PASS"))
