import io
import os
import tempfile

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.urls import reverse

from engine.base import SequenceSource
from engine.runner import run_sequence
from metrics.spaces import make_line, make_uniform
from offline.plans import ORACLE_H, ORACLE_INFINITE, WITNESS
from policies.basic import spawn_always
from serverlab.exceptions import ConstructionError, DescriptorError

from .commandline import output_path, parse_params
from .descriptors import build_metric, build_source, random_sequence, request_pool
from .experiments import ExperimentSpec, execute, offline_for
from .forms import ExperimentSpecForm
from .models import ExperimentRecord
from .theorems import THEOREMS, run_theorem
from .verification import SUITES, lambda_suite, run_suite


def sequence_file(tokens):
    handle = tempfile.NamedTemporaryFile('w', suffix='.txt', delete=False)
    handle.write(' '.join(tokens))
    handle.close()
    return handle.name


def read_rows(text):
    return pd.read_csv(io.StringIO(text))


class DescriptorTests(SimpleTestCase):
    def test_metrics(self):
        self.assertEqual(build_metric('uniform:n=3').labels, ['p1', 'p2', 'p3'])
        self.assertEqual(build_metric('line').distance(-1.0, 2.0), 3)
        self.assertEqual(build_metric('cluster:n=4,gap=100,diameter=0.01').describe(),
                         'cluster:n=4,gap=100,diameter=0.01')

    def test_metric_errors_name_the_field(self):
        for descriptor in ('nope', 'uniform:n=3,bogus=1', 'uniform:n=x'):
            with self.assertRaises(DescriptorError) as raised:
                build_metric(descriptor)
            self.assertEqual(raised.exception.field, 'metric')

    def test_request_pool(self):
        self.assertEqual(request_pool(make_uniform(n=2)), ['p1', 'p2'])
        self.assertIsNone(request_pool(make_line()))
        pool = request_pool(build_metric('block:D=3,k=1'))
        self.assertEqual(len(pool), 1 + 3 + 2)

    def test_random_sources_follow_the_seed(self):
        metric = make_line()
        first = build_source('random:m=5,lo=1,hi=2', metric, seed=3)
        again = build_source('random:m=5,lo=1,hi=2', metric, seed=3)
        self.assertEqual(first.points, again.points)
        self.assertEqual(len(first.points), 5)
        self.assertTrue(all(1 <= x <= 2 for x in first.points))

    def test_random_points_come_from_the_pool(self):
        metric = make_uniform(n=4)
        points = random_sequence(metric, 20, np.random.default_rng(0))
        self.assertTrue(set(points) <= set(metric.labels))

    def test_file_source(self):
        path = sequence_file(['p1', 'p2', 'p1'])
        self.addCleanup(os.remove, path)
        source = build_source(f"file:path={path}", make_uniform(n=2))
        self.assertEqual(list(source.points), ['p1', 'p2', 'p1'])

    def test_source_errors(self):
        metric = make_uniform(n=2)
        for descriptor in ('file', 'file:path=/no/such/file', 'zipf:m=3', 'random:m=3,bogus=1'):
            with self.assertRaises(DescriptorError) as raised:
                build_source(descriptor, metric)
            self.assertEqual(raised.exception.field, 'source')

    def test_parse_params(self):
        self.assertEqual(parse_params(['k=50', ' n = 3 ']), {'k': '50', 'n': '3'})
        with self.assertRaises(CommandError):
            parse_params(['k'])

    def test_relative_output_paths_land_in_the_output_dir(self):
        with tempfile.TemporaryDirectory() as directory, override_settings(SERVERLAB_OUTPUT_DIR=directory):
            target = output_path('runs/a.csv')
            self.assertEqual(target, os.path.join(directory, 'runs', 'a.csv'))
            self.assertTrue(os.path.isdir(os.path.join(directory, 'runs')))
            self.assertEqual(output_path('/tmp/b.csv'), '/tmp/b.csv')


class ExperimentSpecFormTests(SimpleTestCase):
    def test_builds_a_spec(self):
        path = sequence_file(['p1', 'p2'])
        self.addCleanup(os.remove, path)
        form = ExperimentSpecForm(data={
            'metric': 'uniform:n=2', 'policy': 'spawn_always', 'source': f"file:path={path}", 'max_spawns': 5,
        })
        self.assertTrue(form.is_valid(), form.errors)
        spec = form.cleaned_data['spec']
        self.assertEqual(spec.budget.max_spawns, 5)
        self.assertEqual(spec.offline, 'auto')
        self.assertEqual(spec.policy.describe(), 'spawn_always')

    def test_adversary_replaces_metric_and_source(self):
        form = ExperimentSpecForm(data={'policy': 'balance', 'adversary': 'balance_descent:eps=0.25,n=3'})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['spec'].source.points(), [1, 0.75, 0.5, 0.25])

    def test_wrapped_policy(self):
        form = ExperimentSpecForm(data={
            'metric': 'line', 'policy': 'greedy_nearest', 'wrap': 'ring:r=2', 'source': 'random:m=3',
        })
        self.assertTrue(form.is_valid(), form.errors)
        self.assertTrue(form.cleaned_data['spec'].policy.describe().startswith('ring['))

    def test_errors(self):
        cases = [
            ({'policy': 'nope', 'metric': 'line', 'source': 'random:m=3'}, 'policy'),
            ({'policy': 'moo', 'metric': 'nope', 'source': 'random:m=3'}, 'metric'),
            ({'policy': 'moo', 'source': 'random:m=3'}, 'metric'),
            ({'policy': 'moo', 'metric': 'line'}, 'source'),
            ({'policy': 'moo', 'metric': 'line', 'source': 'random:m=3', 'wrap': 'nope'}, 'wrap'),
            ({'policy': 'moo', 'adversary': 'nope'}, 'adversary'),
            ({'policy': 'moo', 'metric': 'line', 'source': 'random:m=3', 'offline': 'h'}, 'h'),
            ({'policy': 'moo', 'metric': 'line', 'source': 'random:m=3', 'max_cost': -1}, 'max_cost'),
        ]
        for data, field in cases:
            with self.subTest(data=data):
                form = ExperimentSpecForm(data=data)
                self.assertFalse(form.is_valid())
                self.assertIn(field, form.errors)


class ExperimentTests(SimpleTestCase):
    def test_auto_uses_the_oracle(self):
        metric = make_uniform(n=2)
        spec = ExperimentSpec(metric=metric, policy=spawn_always(), source=SequenceSource(['p1', 'p2', 'p1']))
        result = execute(spec)
        self.assertEqual(result.report.online, 2)
        self.assertEqual(result.report.offline_kind, ORACLE_INFINITE)
        self.assertEqual(result.report.ratio, 1.0)
        self.assertFalse(result.budget_stop)

    def test_offline_modes(self):
        metric = make_uniform(n=3)
        source = SequenceSource(['p1', 'p2', 'p3'])
        trace = run_sequence(spawn_always(), metric, source.points)
        self.assertEqual(offline_for(trace, source, 'h', h=1).kind, ORACLE_H)
        self.assertEqual(offline_for(trace, source, 'h', h=1).total_cost, 3)
        with self.assertRaises(ValueError):
            offline_for(trace, source, 'h')
        with self.assertRaises(ConstructionError):
            offline_for(trace, source, 'witness')
        with self.assertRaises(ConstructionError):
            offline_for(trace, source, 'ensemble')

    def test_witness_for_adversaries(self):
        form = ExperimentSpecForm(data={
            'policy': 'balance', 'adversary': 'balance_descent:eps=0.01,n=20', 'offline': 'witness',
        })
        self.assertTrue(form.is_valid(), form.errors)
        result = execute(form.cleaned_data['spec'])
        self.assertEqual(result.report.offline_kind, WITNESS)
        self.assertAlmostEqual(result.report.offline, 1.2)
        self.assertGreater(result.report.ratio, 15)

    def test_offline_none_skips_the_report(self):
        spec = ExperimentSpec(metric=make_line(), policy=spawn_always(), source=SequenceSource([1.0]), offline='none')
        self.assertIsNone(execute(spec).report)


class VerificationTests(SimpleTestCase):
    def test_lambda(self):
        result = lambda_suite()
        self.assertTrue(result.ok, result.failures)
        self.assertEqual(result.passed, 4)

    def test_metric_axioms(self):
        result = run_suite('metric-axioms', workers=2)
        self.assertTrue(result.ok, result.failures)

    def test_small_identity_run(self):
        sdc_identity, _ = SUITES['sdc-identity']
        result = sdc_identity(seed=1, workers=2, runs=20)
        self.assertEqual(result.cases, 20)
        self.assertTrue(result.ok, result.failures)


class TheoremTests(SimpleTestCase):
    def test_every_theorem_is_listed(self):
        self.assertEqual(len(THEOREMS), 12)

    def test_moo_lower_bound_small(self):
        result = run_theorem('moo-lb', {'D': '3', 'k': '3', 'n': '3', 'min_ratio': '1.5'})
        self.assertTrue(result.passed, result.checks)
        self.assertEqual(result.reports[0].online, 45)
        self.assertEqual(result.reports[0].offline, 27)

    def test_failed_checks_fail_the_theorem(self):
        result = run_theorem('moo-lb', {'D': '3', 'k': '3', 'n': '3', 'min_ratio': '100'})
        self.assertFalse(result.passed)
        self.assertEqual([check.passed for check in result.checks], [True, True, False])

    def test_balance_small(self):
        result = run_theorem('balance', {
            'eps': '0.01', 'n': '20', 'min_online': '18', 'max_opt': '1.2', 'min_ratio': '15',
        })
        self.assertTrue(result.passed, result.checks)

    def test_ring_and_tracker_small(self):
        self.assertTrue(run_theorem('ring', {'instances': '20', 'm': '15'}, seed=4).passed)
        self.assertTrue(run_theorem('tracker', {'instances': '5', 'm': '10'}, seed=4).passed)

    def test_weak_reduction_small(self):
        result = run_theorem('weak-reduction', {'instances': '10', 'm': '20', 'points': '6'}, seed=2)
        self.assertTrue(result.passed, result.checks)
        self.assertEqual(len(result.reports), 10)

    def test_wfa_at_defaults(self):
        result = run_theorem('wfa')
        self.assertTrue(result.passed, result.checks)
        report = result.reports[0]
        self.assertEqual(report.stop_reason, 'ratio-reached')
        self.assertEqual(report.offline_kind, WITNESS)
        self.assertGreaterEqual(report.ratio, 3.0)

    def test_uncovered_policies_small(self):
        result = run_theorem('3146', {
            'gap': '1', 'diameter': '0.01', 'k': '4', 'policies': 'spawn_always,greedy_nearest',
        })
        self.assertTrue(result.passed, result.checks)
        names = [check.name for check in result.checks]
        self.assertEqual(names, [
            'spawn_always ratio >= 2.5', 'spawn_always ensemble >= OPT', 'greedy_nearest ratio >= 2.5',
        ])
        spawning, greedy = result.reports
        self.assertEqual(spawning.offline_kind, ORACLE_INFINITE)
        self.assertEqual(greedy.stop_reason, 'ratio-reached')
        self.assertGreaterEqual(greedy.ratio, 2.5)

    def test_unfinished_uncovered_run_fails(self):
        result = run_theorem('3146', {
            'gap': '1', 'diameter': '0.01', 'k': '4', 'policies': 'greedy_nearest', 'max_requests': '50',
        })
        self.assertFalse(result.passed)
        [check] = result.checks
        self.assertFalse(check.passed)
        self.assertIn('50 requests', check.detail)

    def test_sdc_scale_notes(self):
        slow = run_theorem('sdc-slow', {'n': '10', 'min_ratio': '0'})
        self.assertTrue(any('full-scale n=400' in note for note in slow.notes), slow.notes)
        fast = run_theorem('sdc-fast', {'n': '2', 'delta': '0.01', 'reps': '3', 'min_ratio': '0'})
        self.assertTrue(any('full-scale delta=1e-06' in note for note in fast.notes), fast.notes)

    def test_unknown_parameter(self):
        with self.assertRaises(ValueError):
            run_theorem('ring', {'instances': '1', 'bogus': '1'})


class CommandTests(TestCase):
    def setUp(self):
        self.path = sequence_file(['p1', 'p2', 'p1'])
        self.addCleanup(os.remove, self.path)

    def call(self, *args, **options):
        out = io.StringIO()
        call_command(*args, stdout=out, stderr=io.StringIO(), **options)
        return out.getvalue()

    def test_run_prints_a_ratio_row(self):
        out = self.call('run', metric='uniform:n=2', policy='spawn_always', source=f"file:path={self.path}")
        row = read_rows(out).iloc[0]
        self.assertEqual(row['algorithm'], 'spawn_always')
        self.assertEqual(row['online'], 2)
        self.assertEqual(row['ratio'], 1.0)
        self.assertEqual(row['offline_kind'], ORACLE_INFINITE)

    def test_run_stores_records(self):
        self.call('run', metric='uniform:n=2', policy='spawn_always', source=f"file:path={self.path}", store=True)
        record = ExperimentRecord.objects.get()
        self.assertEqual(record.command, 'run')
        self.assertEqual(record.ratio, 1.0)
        self.assertFalse(record.is_infinite)
        self.assertEqual(record.ratio_display, '1')

    def test_budget_stop_exits_with_two(self):
        with self.assertRaises(CommandError) as raised:
            self.call('run', metric='uniform:n=2', policy='spawn_always', source=f"file:path={self.path}", max_spawns=0)
        self.assertEqual(raised.exception.returncode, 2)

    def test_bad_descriptor_names_the_field(self):
        with self.assertRaises(CommandError) as raised:
            self.call('run', metric='uniform:n=2', policy='nope', source=f"file:path={self.path}")
        self.assertIn('policy', str(raised.exception))

    def test_config_file_fills_missing_options(self):
        handle = tempfile.NamedTemporaryFile('w', suffix='.env', delete=False)
        handle.write(f"metric=uniform:n=2\npolicy=greedy_nearest\nsource=file:path={self.path}\n")
        handle.close()
        self.addCleanup(os.remove, handle.name)
        out = self.call('run', config=handle.name, policy='spawn_always')
        self.assertEqual(read_rows(out).iloc[0]['algorithm'], 'spawn_always')

    def test_opt(self):
        out = self.call('opt', metric='uniform:n=2', source=f"file:path={self.path}", h=1)
        self.assertIn('cost 3', out)

    def test_verify(self):
        out = self.call('verify', 'lambda')
        self.assertIn('lambda: 4/4 passed PASS', out)

    def test_theorem(self):
        out = self.call('theorem', 'moo-lb', param=['D=3', 'k=3', 'n=3', 'min_ratio=1.5'], store=True)
        self.assertIn('all 3 checks hold', out)
        self.assertEqual(ExperimentRecord.objects.get().command, 'theorem moo-lb')
        with self.assertRaises(CommandError):
            self.call('theorem', 'moo-lb', param=['D=3', 'k=3', 'n=3', 'min_ratio=100'])

    def test_list(self):
        out = self.call('list', 'theorems')
        for name in THEOREMS:
            self.assertIn(name, out)
        self.assertIn('moo_rounds', self.call('list'))


class AdminSiteTests(TestCase):
    def test_admin_login_renders_with_static_files(self):
        self.assertIn('django.contrib.staticfiles', settings.INSTALLED_APPS)
        self.assertTrue(settings.STATIC_URL.endswith('static/'))
        response = self.client.get(reverse('admin:login'))
        self.assertEqual(response.status_code, 200)
        self.assertContains(response, settings.STATIC_URL)
