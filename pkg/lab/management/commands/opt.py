import json

from django.core.management.base import CommandError

from lab.commandline import LabCommand
from lab.descriptors import build_metric, build_source
from offline.oracles import brute_force_plan, opt_h, opt_infinite
from serverlab.exceptions import ServerLabError


class Command(LabCommand):
    help = 'Compute the offline optimum of a request sequence with h servers or unboundedly many'

    config_keys = ('metric', 'source', 'h', 'seed', 'json')
    path_keys = ('json',)

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--metric', help='metric descriptor')
        parser.add_argument('--source', help='file:path=<file> or random:m=<count>')
        parser.add_argument('--h', type=int, help='offline servers; omit for unboundedly many')
        parser.add_argument('--brute-force', dest='brute_force', action='store_true',
                            help='exhaustive search instead of the flow/assignment oracle (m <= 8)')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--json', help='write the plan (chains and points) here')

    def handle(self, *args, **options):
        values = self.resolve(options)
        if not values['metric'] or not values['source']:
            raise CommandError("opt needs --metric and --source")
        h = int(values['h']) if values['h'] is not None else None
        try:
            metric = build_metric(values['metric'])
            sequence = build_source(values['source'], metric, int(values['seed'] or 0)).points
            if options['brute_force']:
                plan = brute_force_plan(metric, sequence, h)
            elif h is None:
                plan = opt_infinite(metric, sequence)
            else:
                plan = opt_h(metric, sequence, h)
        except (ServerLabError, ValueError) as exc:
            raise CommandError(str(exc))

        self.stdout.write(
            f"{plan.kind}: cost {plan.total_cost:.12g} with {plan.server_count} servers "
            f"on {len(sequence)} requests"
        )
        if values['json']:
            with open(values['json'], 'w') as handle:
                json.dump(plan.as_dict(metric, sequence), handle, indent=2)
            self.stdout.write(self.style.SUCCESS(f"Wrote plan to {values['json']}"))
