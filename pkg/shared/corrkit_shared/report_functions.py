'''
Report output: JSON with the resolved run configuration as header, a CSV
summary with one row per report, and plain-text tables for stdout.

Nothing time-dependent is written, so equal runs give byte-identical files.
'''
import os
import json
import logging

import numpy as np
import pandas as pd

from corrkit_shared.errors import InvalidStateError

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['monotone', 'condition', 'dims', 'trials', 'seed', 'skipped',
                   'worst_margin', 'verdict']


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        # JSON has no infinities
        return value if np.isfinite(value) else str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def summary_frame(reports):
    rows = []
    for report in reports:
        data = report.to_dict() if hasattr(report, 'to_dict') else report
        rows.append({'monotone': data['monotone'],
                     'condition': data['condition'],
                     'dims': ','.join(map(str, data['dims'])),
                     'trials': data['trials'],
                     'seed': data['seed'],
                     'skipped': data['skipped'],
                     'worst_margin': data['worst_margin'],
                     'verdict': data['verdict']})
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def write_report(reports, config, filepath):
    '''
    Write {"config": config, "reports": [...]} to filepath and the summary
    CSV next to it (same name, .csv extension).
    '''
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)
    payload = {'config': _jsonable(config),
               'reports': [_jsonable(r.to_dict() if hasattr(r, 'to_dict') else r)
                           for r in reports]}
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(payload, f, indent=2)
        f.write('\n')
    csv_path = os.path.splitext(filepath)[0] + '.csv'
    summary_frame(reports).to_csv(csv_path, index=False, float_format='%.17g')
    log.info('Wrote %s and %s', filepath, csv_path)
    return csv_path


def write_json(payload, filepath):
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(_jsonable(payload), f, indent=2)
        f.write('\n')


def load_report(filepath):
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidStateError(f'cannot read report {filepath}: {e}') from e


def print_table(frame):
    print(frame.to_string(index=False))
