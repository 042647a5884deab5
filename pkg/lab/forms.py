from django import forms

from adversaries.registry import build_adversary
from engine.runner import Budget
from policies.registry import build_policy
from reductions.registry import split_wraps, wrapped_factory
from serverlab.exceptions import ServerLabError

from .descriptors import build_metric, build_source
from .experiments import OFFLINE_CHOICES, ExperimentSpec


class ExperimentSpecForm(forms.Form):
    """Resolves the descriptors of one run; `cleaned_data['spec']` holds the ExperimentSpec."""

    metric = forms.CharField(required=False)
    policy = forms.CharField()
    wrap = forms.CharField(required=False)
    source = forms.CharField(required=False)
    adversary = forms.CharField(required=False)
    max_requests = forms.IntegerField(required=False, min_value=0)
    max_spawns = forms.IntegerField(required=False, min_value=0)
    max_cost = forms.FloatField(required=False, min_value=0)
    offline = forms.ChoiceField(choices=[(c, c) for c in OFFLINE_CHOICES], required=False)
    h = forms.IntegerField(required=False, min_value=1)
    seed = forms.IntegerField(required=False)
    trace = forms.CharField(required=False)

    def clean_policy(self):
        descriptor = self.cleaned_data.get('policy')
        try:
            build_policy(descriptor)
        except ServerLabError as exc:
            raise forms.ValidationError(str(exc))
        return descriptor

    def clean_metric(self):
        descriptor = self.cleaned_data.get('metric')
        if not descriptor:
            return None
        try:
            return build_metric(descriptor)
        except ServerLabError as exc:
            raise forms.ValidationError(str(exc))

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        try:
            make = wrapped_factory(cleaned_data['policy'], split_wraps(cleaned_data.get('wrap')))
        except ServerLabError as exc:
            self.add_error('wrap', str(exc))
            return cleaned_data
        policy = make()
        seed = cleaned_data.get('seed') or 0
        metric = cleaned_data.get('metric')

        if cleaned_data.get('adversary'):
            try:
                metric, source = build_adversary(cleaned_data['adversary'], policy)
            except ServerLabError as exc:
                self.add_error('adversary', str(exc))
                return cleaned_data
        else:
            if metric is None:
                self.add_error('metric', 'A metric is required unless an adversary is given')
                return cleaned_data
            if not cleaned_data.get('source'):
                self.add_error('source', 'A request source is required unless an adversary is given')
                return cleaned_data
            try:
                source = build_source(cleaned_data['source'], metric, seed)
            except ServerLabError as exc:
                self.add_error('source', str(exc))
                return cleaned_data

        offline = cleaned_data.get('offline') or 'auto'
        if offline == 'h' and cleaned_data.get('h') is None:
            self.add_error('h', 'offline=h needs h')
            return cleaned_data
        cleaned_data['spec'] = ExperimentSpec(
            metric=metric,
            policy=policy,
            source=source,
            budget=Budget(
                max_requests=cleaned_data.get('max_requests'),
                max_spawns=cleaned_data.get('max_spawns'),
                max_cost=cleaned_data.get('max_cost'),
            ),
            offline=offline,
            h=cleaned_data.get('h'),
            seed=seed,
            trace_path=cleaned_data.get('trace') or None,
        )
        return cleaned_data
