"""
Series CSV files.

Input files have the header ``timestamp,site_id,value_ppb``. Timestamps are
ISO-8601 UTC with a ``Z`` suffix; readings need not be hourly and are
averaged into hours on load. Rows may come in any order, but a (site,
timestamp) pair may appear only once across all files read together.

Output files are sorted by (site_id, timestamp) and write values with six
decimals so reruns produce identical bytes.
"""

import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd

from ozone_network.exceptions import SeriesFormatError
from alarms.ledger import CHART_COLUMNS, ChartRow
from timeseries.series import (
    SECONDS_PER_HOUR, VALUE_MAX, VALUE_MIN, RawReadings, TimeSeries, resample_hourly,
)

logger = logging.getLogger(__name__)

SERIES_COLUMNS = ['timestamp', 'site_id', 'value_ppb']
CORRECTED_COLUMNS = ['timestamp', 'raw', 'output', 'corrected_flag']
TIMESTAMP_FORMAT = '%Y-%m-%dT%H:%M:%SZ'
UTC_STAMP = r'\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z'
# Well-formed but carrying an offset or no zone at all.
ZONED_STAMP = re.compile(r'\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?([+-]\d{2}:?\d{2})?')
FLOAT_FORMAT = '%.6f'
# pandas tokenizer messages end with "Expected N fields in line L, saw M".
PARSER_LINE = re.compile(r'line (\d+)')


def _check_header(path: Path, columns: List[str]):
    if list(columns) != SERIES_COLUMNS:
        raise SeriesFormatError(
            f'expected header {",".join(SERIES_COLUMNS)}, found {",".join(map(str, columns))}',
            path=path, line=1,
        )


def _parser_error(path: Path, exc: Exception) -> SeriesFormatError:
    match = PARSER_LINE.search(str(exc))
    line = int(match.group(1)) if match else None
    return SeriesFormatError(f'malformed row ({str(exc).strip()})', path=path, line=line)


def _first(mask: pd.Series, frame: pd.DataFrame) -> int:
    return int(frame.loc[mask[mask].index[0], 'line'])


def read_series_frame(path) -> pd.DataFrame:
    """Validated readings of one file: line, site_id, seconds (UTC epoch), value."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=False)
    except FileNotFoundError:
        raise SeriesFormatError('file not found', path=path)
    except pd.errors.EmptyDataError:
        raise SeriesFormatError('file is empty', path=path, line=1)
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc)
    except UnicodeDecodeError as exc:
        raise SeriesFormatError(f'not valid UTF-8 text ({exc.reason} at byte {exc.start})', path=path)
    except OSError as exc:
        raise SeriesFormatError(f'cannot read file ({exc.strerror or exc})', path=path)
    _check_header(path, frame.columns)

    # Header is line 1.
    frame.insert(0, 'line', np.arange(2, len(frame) + 2))
    frame = frame.fillna('')
    blank = (frame[SERIES_COLUMNS] == '').all(axis=1)
    frame = frame[~blank]

    for column in SERIES_COLUMNS:
        missing = frame[column].str.strip() == ''
        if missing.any():
            raise SeriesFormatError('missing value', path=path, line=_first(missing, frame), column=column)

    stamps = frame['timestamp'].str.strip()
    malformed = ~stamps.str.fullmatch(UTC_STAMP)
    if malformed.any():
        line = _first(malformed, frame)
        text = stamps[malformed].iloc[0]
        if ZONED_STAMP.fullmatch(text):
            reason = 'timestamp is not UTC (expected a Z suffix)'
        else:
            reason = 'malformed timestamp'
        raise SeriesFormatError(f'{reason}: {text!r}', path=path, line=line, column='timestamp')
    parsed = pd.to_datetime(stamps, format=TIMESTAMP_FORMAT, utc=True, errors='coerce')
    if parsed.isna().any():
        bad = parsed.isna()
        raise SeriesFormatError(f'invalid date {stamps[bad].iloc[0]!r}', path=path,
                                line=_first(bad, frame), column='timestamp')

    values = pd.to_numeric(frame['value_ppb'].str.strip(), errors='coerce')
    not_numeric = values.isna() | ~np.isfinite(values)
    if not_numeric.any():
        raise SeriesFormatError(f'value {frame["value_ppb"][not_numeric].iloc[0]!r} is not a number',
                                path=path, line=_first(not_numeric, frame), column='value_ppb')
    out_of_range = (values < VALUE_MIN) | (values > VALUE_MAX)
    if out_of_range.any():
        raise SeriesFormatError(
            f'value {values[out_of_range].iloc[0]:g} outside [{VALUE_MIN:g}, {VALUE_MAX:g}] ppb',
            path=path, line=_first(out_of_range, frame), column='value_ppb',
        )

    return pd.DataFrame({
        'path': str(path),
        'line': frame['line'].to_numpy(),
        'site_id': frame['site_id'].str.strip().to_numpy(),
        'seconds': ((parsed - pd.Timestamp(0, tz='UTC')) // pd.Timedelta(seconds=1)).to_numpy(np.int64),
        'value': values.to_numpy(np.float64),
    })


def _check_duplicates(frame: pd.DataFrame):
    dup = frame.duplicated(['site_id', 'seconds'], keep=False)
    if not dup.any():
        return
    first = frame[dup].sort_values(['site_id', 'seconds', 'path', 'line']).iloc[:2]
    a, b = first.iloc[0], first.iloc[1]
    stamp = pd.Timestamp(int(a['seconds']), unit='s', tz='UTC').strftime(TIMESTAMP_FORMAT)
    if a['path'] == b['path']:
        raise SeriesFormatError(f'duplicate reading for {a["site_id"]} at {stamp}',
                                path=a['path'], line=int(a['line']), other_line=int(b['line']))
    raise SeriesFormatError(
        f'duplicate reading for {a["site_id"]} at {stamp}, also in {b["path"]} line {int(b["line"])}',
        path=a['path'], line=int(a['line']),
    )


def read_readings(paths: Sequence) -> pd.DataFrame:
    frames = [read_series_frame(p) for p in paths]
    if not frames:
        return pd.DataFrame(columns=['path', 'line', 'site_id', 'seconds', 'value'])
    frame = pd.concat(frames, ignore_index=True)
    _check_duplicates(frame)
    return frame


def read_series(paths: Sequence) -> Dict[str, TimeSeries]:
    """Hourly series per site from one or more series files."""
    frame = read_readings(paths)
    series = {}
    for site_id, group in frame.sort_values(['site_id', 'seconds'], kind='stable').groupby('site_id', sort=True):
        raw = RawReadings(site_id, group['seconds'].to_numpy(), group['value'].to_numpy())
        series[site_id] = resample_hourly(raw)
    logger.info('read %d readings for %d sites from %d files', len(frame), len(series), len(paths))
    return series


def coverage_table(series: Dict[str, TimeSeries]) -> pd.DataFrame:
    rows = []
    for site_id in sorted(series):
        s = series[site_id]
        if not len(s):
            rows.append({'site_id': site_id, 'first': '', 'last': '', 'hours': 0, 'span_hours': 0,
                         'coverage_pct': 0.0})
            continue
        span = s.end - s.start + 1
        rows.append({
            'site_id': site_id,
            'first': format_stamps([s.start])[0],
            'last': format_stamps([s.end])[0],
            'hours': len(s),
            'span_hours': span,
            'coverage_pct': 100.0 * len(s) / span,
        })
    return pd.DataFrame(rows, columns=['site_id', 'first', 'last', 'hours', 'span_hours', 'coverage_pct'])


def format_stamps(hours: Iterable[int]) -> List[str]:
    seconds = np.asarray(list(hours), dtype=np.int64) * SECONDS_PER_HOUR
    return list(pd.to_datetime(seconds, unit='s', utc=True).strftime(TIMESTAMP_FORMAT))


def _write(frame: pd.DataFrame, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, na_rep='', lineterminator='\n')


def write_series(path, series: Iterable[TimeSeries]):
    frames = [
        pd.DataFrame({'hour': s.hours, 'site_id': s.site_id, 'value_ppb': s.values})
        for s in series if len(s)
    ]
    if frames:
        frame = pd.concat(frames, ignore_index=True).sort_values(['site_id', 'hour'], kind='stable')
        frame.insert(0, 'timestamp', format_stamps(frame.pop('hour')))
    else:
        frame = pd.DataFrame(columns=SERIES_COLUMNS)
    _write(frame[SERIES_COLUMNS], path)


def write_corrected(path, hours, raw, output, corrected):
    frame = pd.DataFrame({
        'timestamp': format_stamps(hours),
        'raw': np.asarray(raw, dtype=np.float64),
        'output': np.asarray(output, dtype=np.float64),
        'corrected_flag': np.asarray(corrected, dtype=np.int8),
    }, columns=CORRECTED_COLUMNS)
    _write(frame, path)


def chart_frame(rows: Sequence[ChartRow]) -> pd.DataFrame:
    frame = pd.DataFrame([row.as_row() for row in rows], columns=CHART_COLUMNS)
    for column in CHART_COLUMNS:
        if column.startswith(('breach_', 'alarm_')) or column == 'corrected_flag':
            frame[column] = frame[column].astype(np.int8)
    frame['timestamp'] = format_stamps(frame['timestamp']) if len(frame) else frame['timestamp']
    return frame


def write_chart(path, rows: Sequence[ChartRow]):
    _write(chart_frame(rows), path)


def write_table(path, frame: pd.DataFrame):
    _write(frame, path)


def read_corrected(path, site_id: str) -> TimeSeries:
    """Output column of a corrected file written by ``write_corrected``."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype={'timestamp': str})
    except pd.errors.ParserError as exc:
        raise _parser_error(path, exc)
    except (OSError, UnicodeDecodeError, pd.errors.EmptyDataError) as exc:
        raise SeriesFormatError(f'cannot read corrected series ({exc})', path=path)
    if list(frame.columns) != CORRECTED_COLUMNS:
        raise SeriesFormatError(f'expected header {",".join(CORRECTED_COLUMNS)}', path=path, line=1)
    frame = frame.dropna(subset=['output'])
    parsed = pd.to_datetime(frame['timestamp'], format=TIMESTAMP_FORMAT, utc=True)
    hours = (parsed - pd.Timestamp(0, tz='UTC')) // pd.Timedelta(hours=1)
    return TimeSeries(site_id, hours.to_numpy(np.int64), frame['output'].to_numpy(np.float64))
