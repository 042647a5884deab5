import json

from django.core.management.base import CommandError

from adversaries.registry import build_adversary
from engine.runner import Budget, run
from lab.commandline import LabCommand
from reductions.registry import split_wraps, wrapped_factory
from serverlab.exceptions import ServerLabError


class Command(LabCommand):
    help = 'Play an adversary against a policy and dump the generated requests and its offline witness'

    config_keys = ('adversary', 'policy', 'wrap', 'max_requests', 'out', 'witness')
    path_keys = ('out', 'witness')

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--adversary', help='adversary descriptor')
        parser.add_argument('--policy', help='policy the adversary plays against (default spawn_always)')
        parser.add_argument('--wrap', help='wrapper chain for the policy')
        parser.add_argument('--max-requests', dest='max_requests', type=int)
        parser.add_argument('--out', help='write the requests here, one point per line')
        parser.add_argument('--witness', help='write the offline witness plan here as JSON')

    def handle(self, *args, **options):
        values = self.resolve(options)
        if not values['adversary']:
            raise CommandError("adversary_dump needs --adversary")
        try:
            policy = wrapped_factory(values['policy'] or 'spawn_always', split_wraps(values['wrap']))()
            metric, source = build_adversary(values['adversary'], policy)
            max_requests = values['max_requests']
            budget = Budget(max_requests=int(max_requests) if max_requests is not None else None)
            trace = run(policy, metric, source, budget=budget)
            witness = source.witness() if values['witness'] else None
        except (ServerLabError, ValueError) as exc:
            raise CommandError(str(exc))

        lines = [str(metric.encode(p)) for p in trace.requests]
        if values['out']:
            with open(values['out'], 'w') as handle:
                handle.write('\n'.join(lines) + '\n')
            self.stdout.write(self.style.SUCCESS(f"Wrote {len(lines)} requests to {values['out']}"))
        else:
            self.stdout.write('\n'.join(lines))
        if witness is not None:
            with open(values['witness'], 'w') as handle:
                json.dump(witness.as_dict(metric, trace.requests), handle, indent=2)
            self.stdout.write(self.style.SUCCESS(f"Wrote witness ({witness.total_cost:.12g}) to {values['witness']}"))
        elif values['witness']:
            self.stdout.write(self.style.WARNING(f"{source.describe()} builds no offline witness"))
        self.stdout.write(
            f"{trace.policy} vs {trace.source}: {trace.request_count} requests, "
            f"cost {trace.total_cost:.12g}, stop {trace.stop_reason}"
        )
        if trace.budget_stop:
            raise self.budget_stop(trace)
