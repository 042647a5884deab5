"""Shared plumbing for the lab management commands."""

import logging
from pathlib import Path

from decouple import Config, RepositoryEnv
from django.core.management.base import BaseCommand, CommandError

from analysis.reports import to_csv, to_json
from serverlab.conf import lab_setting

from .models import ExperimentRecord

logger = logging.getLogger(__name__)

BUDGET_STOP_EXIT = 2


class LabCommand(BaseCommand):
    """Adds `--config`: a key=value file whose entries fill options not given as flags."""

    config_keys = ()
    # options naming files to write; relative paths land under SERVERLAB_OUTPUT_DIR
    path_keys = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value file with defaults for the options below')
        parser.add_argument('--store', action='store_true', help='save the ratio rows as ExperimentRecord entries')

    def resolve(self, options):
        values = {key: options.get(key) for key in self.config_keys}
        path = options.get('config')
        if path:
            try:
                config = Config(RepositoryEnv(path))
            except OSError as exc:
                raise CommandError(f"config: {exc}")
            for key in self.config_keys:
                if values[key] is None:
                    values[key] = config.get(key, default=None)
            logger.debug("options after %s: %s", path, values)
        for key in self.path_keys:
            if values.get(key):
                values[key] = output_path(values[key])
        return values

    def form_errors(self, form):
        lines = [f"{name}: {'; '.join(errors)}" for name, errors in form.errors.items()]
        return CommandError("invalid experiment: " + ' | '.join(lines))

    def emit_reports(self, reports, csv_path=None, json_path=None):
        text = to_csv(reports, csv_path)
        if csv_path:
            self.stdout.write(self.style.SUCCESS(f"Wrote {len(reports)} rows to {csv_path}"))
        else:
            self.stdout.write(text, ending='')
        if json_path:
            to_json(reports, json_path)
            self.stdout.write(self.style.SUCCESS(f"Wrote JSON report to {json_path}"))
        return text

    def store_reports(self, reports, command):
        records = ExperimentRecord.objects.bulk_create(
            [ExperimentRecord.from_report(report, command=command) for report in reports]
        )
        self.stdout.write(self.style.SUCCESS(f"Stored {len(records)} experiment records"))
        return records

    def budget_stop(self, trace):
        self.stdout.write(self.style.WARNING(f"Budget stop: {trace.stop_reason}"))
        return CommandError(f"run stopped on budget: {trace.stop_reason}", returncode=BUDGET_STOP_EXIT)


def parse_params(pairs):
    """['k=50', 'n=3'] -> {'k': '50', 'n': '3'}."""
    params = {}
    for pair in pairs or ():
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise CommandError(f"param: expected key=value, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def output_path(path):
    target = Path(path)
    if not target.is_absolute():
        target = Path(lab_setting('SERVERLAB_OUTPUT_DIR', 'output')) / target
    target.parent.mkdir(parents=True, exist_ok=True)
    return str(target)
