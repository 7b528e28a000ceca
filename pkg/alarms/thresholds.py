from dataclasses import asdict, dataclass, fields, replace

from ozone_network.exceptions import ConfigError


@dataclass(frozen=True)
class Thresholds:
    """Control-chart limits.

    Defaults are the indicative-monitoring bounds: a0 = 0 +/- 5 ppb,
    a1 = 1 +/- 0.3, KS p >= 0.05, over 3-day windows with a 5-day
    persistence rule. The pass region of every test is the open interval.
    """

    p_ks_min: float = 0.05
    a1_low: float = 0.7
    a1_high: float = 1.3
    a0_low: float = -5.0
    a0_high: float = 5.0
    t_d: int = 72
    t_f: int = 120
    completeness_min: float = 0.75
    # 1 corrects on any latched alarm; 2 requires two alarms at once.
    correction_alarm_count: int = 1
    trend_refit_hours: int = 1

    def __post_init__(self):
        problems = []
        if not self.a1_low < 1.0 < self.a1_high:
            problems.append('a1 bounds must straddle 1')
        if not self.a0_low < 0.0 < self.a0_high:
            problems.append('a0 bounds must straddle 0')
        if not 0.0 < self.p_ks_min < 1.0:
            problems.append('p_ks_min must lie in (0, 1)')
        if self.t_d <= 0 or self.t_f <= 0:
            problems.append('t_d and t_f must be positive')
        if not 0.0 <= self.completeness_min <= 1.0:
            problems.append('completeness_min must lie in [0, 1]')
        if self.correction_alarm_count < 1:
            problems.append('correction_alarm_count must be at least 1')
        if self.trend_refit_hours < 1:
            problems.append('trend_refit_hours must be at least 1')
        if problems:
            raise ConfigError('invalid thresholds: ' + '; '.join(problems))

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict:
        return asdict(self)

    def updated(self, **overrides) -> 'Thresholds':
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **overrides)
