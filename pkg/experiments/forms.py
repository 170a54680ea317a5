"""Forms validating command-line flags before any work starts."""

from django import forms
from django.conf import settings

from core.exceptions import ConfigurationException
from hashing.strategies.regularizers import regularizer_factory
from multimodal.models import SyntheticSpec
from training.builders import TrainConfigBuilder
from .models import AblationGrid, RunConfig


AUTO = 'auto'

# Form field -> setting used when the flag is absent.
RUN_DEFAULTS = {
    'code_length': 'DMH_CODE_LENGTH',
    'ks': 'DMH_KS',
    'ke': 'DMH_KE',
    'max_iter': 'DMH_MAX_ITER',
    'convergence_rtol': 'DMH_CONVERGENCE_RTOL',
    'seed': 'DMH_SEED',
    'radius': 'DMH_RADIUS',
    'test_fraction': 'DMH_TEST_FRACTION',
    'regularizer': 'DMH_REGULARIZER',
    'workers': 'DMH_WORKERS',
}


def parse_number_list(raw, allow_auto: bool = False):
    """
    Split a comma separated flag into floats ('auto' kept as is when allowed).

    Raises:
        forms.ValidationError: On an entry that is not a number
    """
    if raw in (None, ''):
        return ()
    items = raw if isinstance(raw, (list, tuple)) else str(raw).split(',')
    values = []
    for item in items:
        item = str(item).strip()
        if allow_auto and item.lower() == AUTO:
            values.append(AUTO)
            continue
        try:
            values.append(float(item))
        except ValueError:
            raise forms.ValidationError(f"'{item}' is not a number")
    return tuple(values)


def form_errors(form: forms.Form) -> dict:
    return {field: [str(message) for message in messages] for field, messages in form.errors.items()}


class RunConfigForm(forms.Form):
    """
    Flags shared by train, evaluate and ablate.

    Absent flags fall back to the DMH_* settings. When ``view_count`` is
    given, per-view lists must hold one entry or exactly one per view.
    """

    code_length = forms.IntegerField(required=False, min_value=1)
    alpha = forms.CharField(required=False, help_text='One value for every view, or one per view')
    beta = forms.CharField(required=False, help_text="Positive values or 'auto'")
    gamma = forms.CharField(required=False)
    ks = forms.FloatField(required=False)
    ke = forms.FloatField(required=False)
    max_iter = forms.IntegerField(required=False, min_value=1)
    convergence_rtol = forms.FloatField(required=False, min_value=0)
    seed = forms.IntegerField(required=False, min_value=0)
    radius = forms.IntegerField(required=False, min_value=0)
    test_fraction = forms.FloatField(required=False)
    regularizer = forms.ChoiceField(
        required=False,
        choices=[('', 'default')] + [(name, name) for name in regularizer_factory.get_registered_types()],
    )
    workers = forms.IntegerField(required=False, min_value=1)
    cutoff = forms.IntegerField(required=False, min_value=1)

    def __init__(self, *args, view_count: int = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.view_count = view_count

    def clean_alpha(self):
        values = parse_number_list(self.cleaned_data.get('alpha'))
        if any(value <= 0 for value in values):
            raise forms.ValidationError('alpha must be positive')
        return values

    def clean_beta(self):
        values = parse_number_list(self.cleaned_data.get('beta'), allow_auto=True)
        if any(value != AUTO and value <= 0 for value in values):
            raise forms.ValidationError("beta must be positive or 'auto'")
        return values

    def clean_gamma(self):
        values = parse_number_list(self.cleaned_data.get('gamma'))
        if any(value < 0 for value in values):
            raise forms.ValidationError('gamma must be non-negative')
        return values

    def clean(self):
        """Fill defaults and validate values that depend on each other."""
        cleaned_data = super().clean()
        for name, setting in RUN_DEFAULTS.items():
            if name not in self.errors and cleaned_data.get(name) in (None, ''):
                cleaned_data[name] = getattr(settings, setting)

        ks, ke = cleaned_data.get('ks'), cleaned_data.get('ke')
        if ke is not None and ke <= 0:
            self.add_error('ke', 'The last step size must be positive')
        elif ks is not None and ke is not None and ks < ke:
            self.add_error('ks', 'The first step size cannot be smaller than the last')

        fraction = cleaned_data.get('test_fraction')
        if fraction is not None and not 0 < fraction < 1:
            self.add_error('test_fraction', 'The test fraction must lie strictly between 0 and 1')

        if self.view_count:
            for name in ('alpha', 'beta', 'gamma'):
                values = cleaned_data.get(name) or ()
                if len(values) not in (0, 1, self.view_count):
                    self.add_error(
                        name, f'Expected one value or {self.view_count} values, got {len(values)}'
                    )
        return cleaned_data

    def to_run_config(self) -> RunConfig:
        """
        Build the run configuration.

        Raises:
            ConfigurationException: If the form is invalid
        """
        if not self.is_valid():
            raise ConfigurationException('Invalid run flags', form_errors(self))
        data = self.cleaned_data
        train = (
            TrainConfigBuilder()
            .with_code_length(data['code_length'])
            .with_step_sizes(data['ks'], data['ke'])
            .with_max_iterations(data['max_iter'])
            .with_convergence_rtol(data['convergence_rtol'])
            .with_seed(data['seed'])
            .with_regularizer(data['regularizer'])
            .with_workers(data['workers'])
            .build()
        )
        return RunConfig(
            train=train,
            alpha=data['alpha'],
            beta=data['beta'],
            gamma=data['gamma'],
            radius=data['radius'],
            test_fraction=data['test_fraction'],
            cutoff=data.get('cutoff'),
        )


class AblationGridForm(forms.Form):
    """Grid flags of the ablate command."""

    alpha_grid = forms.CharField(required=False)
    beta_grid = forms.CharField(required=False)
    gamma_grid = forms.CharField(required=False)
    code_length_grid = forms.CharField(required=False)
    seeds = forms.CharField(required=False)

    def _positive(self, name):
        values = parse_number_list(self.cleaned_data.get(name))
        if any(value <= 0 for value in values):
            raise forms.ValidationError('grid values must be positive')
        return values

    def clean_alpha_grid(self):
        return self._positive('alpha_grid')

    def clean_beta_grid(self):
        return self._positive('beta_grid')

    def clean_gamma_grid(self):
        values = parse_number_list(self.cleaned_data.get('gamma_grid'))
        if any(value < 0 for value in values):
            raise forms.ValidationError('gamma values must be non-negative')
        return values

    def clean_code_length_grid(self):
        values = self._positive('code_length_grid')
        if any(value != int(value) for value in values):
            raise forms.ValidationError('code lengths must be integers')
        return tuple(int(value) for value in values)

    def clean_seeds(self):
        values = parse_number_list(self.cleaned_data.get('seeds'))
        if any(value < 0 or value != int(value) for value in values):
            raise forms.ValidationError('seeds must be non-negative integers')
        return tuple(int(value) for value in values)

    def to_grid(self, default_seed: int = 0) -> AblationGrid:
        if not self.is_valid():
            raise ConfigurationException('Invalid ablation grid', form_errors(self))
        data = self.cleaned_data
        return AblationGrid(
            alpha=data['alpha_grid'],
            beta=data['beta_grid'],
            gamma=data['gamma_grid'],
            code_length=data['code_length_grid'],
            seeds=data['seeds'] or (default_seed,),
        )


class SyntheticSpecForm(forms.Form):
    """Flags of the generate command."""

    n_per_class = forms.IntegerField(required=False, min_value=1)
    n_classes = forms.IntegerField(required=False, min_value=1)
    dims = forms.CharField(required=False, help_text='Feature dimension per view, comma separated')
    noise = forms.FloatField(required=False, min_value=0)
    seed = forms.IntegerField(required=False, min_value=0)

    def clean_dims(self):
        raw = self.cleaned_data.get('dims')
        if not raw:
            return tuple(settings.DMH_SYNTH_DIMS)
        values = parse_number_list(raw)
        if any(value < 1 or value != int(value) for value in values):
            raise forms.ValidationError('dimensions must be positive integers')
        return tuple(int(value) for value in values)

    def to_spec(self) -> SyntheticSpec:
        if not self.is_valid():
            raise ConfigurationException('Invalid synthetic data flags', form_errors(self))
        data = self.cleaned_data

        def pick(name, setting):
            return getattr(settings, setting) if data.get(name) is None else data[name]

        return SyntheticSpec(
            n_per_class=pick('n_per_class', 'DMH_SYNTH_PER_CLASS'),
            n_classes=pick('n_classes', 'DMH_SYNTH_CLASSES'),
            dims=data['dims'],
            noise_sigma=pick('noise', 'DMH_SYNTH_NOISE'),
            seed=pick('seed', 'DMH_SEED'),
        )
