from django import forms

from ozone_network.exceptions import ConfigError
from alarms.thresholds import Thresholds


class ThresholdsForm(forms.Form):
    """Every field is optional; blanks keep the indicative-monitoring defaults."""

    p_ks_min = forms.FloatField(required=False, min_value=0, max_value=1)
    a1_low = forms.FloatField(required=False)
    a1_high = forms.FloatField(required=False)
    a0_low = forms.FloatField(required=False)
    a0_high = forms.FloatField(required=False)
    t_d = forms.IntegerField(required=False, min_value=1)
    t_f = forms.IntegerField(required=False, min_value=1)
    completeness_min = forms.FloatField(required=False, min_value=0, max_value=1)
    correction_alarm_count = forms.IntegerField(required=False, min_value=1, max_value=3)
    trend_refit_hours = forms.IntegerField(required=False, min_value=1)

    def to_thresholds(self, base=None):
        base = base or Thresholds()
        return base.updated(**self.cleaned_data)


def parse_thresholds(data, base=None):
    unknown = set(data) - set(Thresholds.field_names())
    if unknown:
        raise ConfigError(f'thresholds: unknown keys {sorted(unknown)}')
    form = ThresholdsForm(data)
    if not form.is_valid():
        errors = '; '.join(f'{field}: {" ".join(msgs)}' for field, msgs in form.errors.items())
        raise ConfigError(f'thresholds: {errors}')
    return form.to_thresholds(base)
