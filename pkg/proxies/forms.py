from django import forms

from ozone_network.exceptions import ConfigError
from proxies.selection import STRATEGIES
from proxies.sites import ROLES, SiteRecord


def form_errors(form):
    return '; '.join(
        f'{field}: {" ".join(messages)}' for field, messages in form.errors.items()
    )


class SiteRecordForm(forms.Form):
    site_id = forms.CharField(max_length=64)
    name = forms.CharField(max_length=200, required=False)
    role = forms.ChoiceField(choices=[(r, r) for r in ROLES])
    latitude = forms.FloatField(min_value=-90, max_value=90)
    longitude = forms.FloatField(min_value=-180, max_value=180)
    elevation = forms.FloatField(required=False)
    aadt_5km = forms.FloatField(required=False, min_value=0)
    land_use = forms.CharField(max_length=100, required=False)

    def to_record(self):
        data = self.cleaned_data
        return SiteRecord(
            site_id=data['site_id'],
            name=data['name'] or data['site_id'],
            role=data['role'],
            latitude=data['latitude'],
            longitude=data['longitude'],
            elevation=data['elevation'],
            aadt_5km=data['aadt_5km'],
            land_use=data['land_use'] or None,
        )


class ProxySettingsForm(forms.Form):
    strategy = forms.ChoiceField(choices=[(s, s) for s in STRATEGIES], initial='nearest', required=False)
    exclude_self_from_median = forms.BooleanField(required=False)

    def clean_strategy(self):
        return self.cleaned_data['strategy'] or 'nearest'


def parse_site(data):
    form = SiteRecordForm(data)
    if not form.is_valid():
        raise ConfigError(f'site {data.get("site_id", "?")!s}: {form_errors(form)}')
    return form.to_record()
