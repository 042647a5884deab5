from django.core.management.base import CommandError

from lab.commandline import LabCommand
from lab.experiments import OFFLINE_CHOICES, execute
from lab.forms import ExperimentSpecForm
from serverlab.exceptions import ServerLabError


class Command(LabCommand):
    help = 'Run a policy against a request sequence or adversary and report its competitive ratio'

    config_keys = (
        'metric', 'policy', 'wrap', 'source', 'adversary', 'max_requests', 'max_spawns',
        'max_cost', 'offline', 'h', 'seed', 'trace', 'csv', 'json',
    )
    path_keys = ('trace', 'csv', 'json')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--metric', help='metric descriptor, e.g. line or uniform:n=5')
        parser.add_argument('--policy', help='policy descriptor, e.g. sdc:speeds=g:1.5')
        parser.add_argument('--wrap', help='wrapper chain, e.g. local+lazy or weak:h=2,eps=1,k=4')
        parser.add_argument('--source', help='file:path=<file> or random:m=<count>')
        parser.add_argument('--adversary', help='adversary descriptor; replaces --metric and --source')
        parser.add_argument('--max-requests', dest='max_requests', type=int)
        parser.add_argument('--max-spawns', dest='max_spawns', type=int)
        parser.add_argument('--max-cost', dest='max_cost', type=float)
        parser.add_argument('--offline', choices=OFFLINE_CHOICES)
        parser.add_argument('--h', type=int, help='offline fleet size for --offline h')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--trace', help='write the trace JSON here')
        parser.add_argument('--csv', help='write the ratio row here instead of stdout')
        parser.add_argument('--json', help='also write the ratio row as JSON')

    def handle(self, *args, **options):
        values = self.resolve(options)
        form = ExperimentSpecForm(data={key: value for key, value in values.items() if value is not None})
        if not form.is_valid():
            raise self.form_errors(form)
        spec = form.cleaned_data['spec']

        try:
            result = execute(spec)
        except ServerLabError as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}")
        except ValueError as exc:
            raise CommandError(str(exc))

        if spec.trace_path:
            self.stdout.write(self.style.SUCCESS(f"Wrote trace to {spec.trace_path}"))
        if result.report is not None:
            self.emit_reports([result.report], values.get('csv'), values.get('json'))
            if options.get('store'):
                self.store_reports([result.report], 'run')
        else:
            self.stdout.write(f"online cost {result.trace.total_cost:.12g} ({result.trace.stop_reason})")
        if result.budget_stop:
            raise self.budget_stop(result.trace)
