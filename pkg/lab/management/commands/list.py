from django.core.management.base import BaseCommand

from adversaries.registry import ADVERSARIES
from lab.descriptors import METRICS
from lab.theorems import THEOREMS
from lab.verification import SUITES
from policies.registry import POLICIES
from reductions.registry import WRAPPERS

SECTIONS = {
    'metrics': METRICS,
    'policies': POLICIES,
    'wrappers': WRAPPERS,
    'adversaries': ADVERSARIES,
    'theorems': THEOREMS,
    'suites': SUITES,
}


class Command(BaseCommand):
    help = 'List metrics, policies, wrappers, adversaries, theorems and verify suites'

    def add_arguments(self, parser):
        parser.add_argument('section', nargs='?', choices=sorted(SECTIONS))

    def handle(self, *args, **options):
        names = [options['section']] if options['section'] else list(SECTIONS)
        for section in names:
            self.stdout.write(self.style.MIGRATE_HEADING(section))
            for name, (_, description) in sorted(SECTIONS[section].items()):
                self.stdout.write(f"  {name:<18} {description}")
