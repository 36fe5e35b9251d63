'''
Run the randomized suites listed in config.json, plus the maximality scans
and the filtering demonstration, and save one report for all of them.

Usage:
    From the top-level repository, after running config.py:
        python verification/run_verification.py [-c CONFIG_JSON_FILEPATH]

Outputs <output_dir>/verification.json and verification.csv. Exits 1 when
any suite fails, 4 when none fails but some are inconclusive.
'''
import os
import sys
import json
import logging
import argparse
import datetime

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                'shared'))

from corrkit_shared import monotone_functions as mf  # noqa: E402
from corrkit_shared import construction_functions as cf  # noqa: E402
from corrkit_shared import harness_functions as hf  # noqa: E402
from corrkit_shared import report_functions as rf  # noqa: E402
from corrkit_shared import bell_functions as bf  # noqa: E402

CONFIG_FILE = 'config.json'  # Filepath to generated verification configuration
SUITE_KEYS = {'monotone', 'condition', 'dims', 'trials', 'seed', 'rank', 'efficient',
              'preserve_dims'}


def run_suites(config):
    reports = []
    tolerances = config['tolerances']
    num_processes = config['parallelization']['num_processes']
    for suite in config['suites']:
        unknown = set(suite) - SUITE_KEYS
        if unknown:
            raise ValueError(f'unknown suite keys {sorted(unknown)}')
        handle = mf.resolve_monotone(suite['monotone'],
                                     {**config['seesaw'], 'seed': suite['seed']})
        reports.append(hf.check_condition(handle, suite['condition'], suite['dims'],
                                          suite['trials'], suite['seed'],
                                          rank=suite.get('rank'),
                                          efficient=suite.get('efficient', False),
                                          preserve_dims=suite.get('preserve_dims', False),
                                          num_processes=num_processes,
                                          tolerances=tolerances))
    return reports


def run_demonstrations(config):
    '''Maximality scans around the Bell state and the tilted-CHSH filter.'''
    tolerances = config['tolerances']
    num_processes = config['parallelization']['num_processes']
    bell = cf.bell_state(2)
    reports = [
        hf.maximality_scan(mf.resolve_monotone('I'), bell, 1000, 7,
                           num_processes=num_processes, tolerances=tolerances),
        hf.maximality_scan(mf.resolve_monotone('ef'), bell, 1000, 7, rank=1,
                           num_processes=num_processes, tolerances=tolerances),
        hf.filtering_demo(mf.resolve_monotone('entropy:q=1'), 2, (0.8, 0.2),
                          tolerances=tolerances),
    ]
    tilted = mf.resolve_monotone('bell:tilted_chsh', {**config['seesaw'], 'seed': 7})
    reports.append(hf.filtering_demo(tilted, 2, bf.tilted_chsh_optimal_schmidt(1.0),
                                     tolerances=tolerances))
    return reports


def main(argv=None):
    logging.basicConfig(format='%(asctime)s [corrkit]: %(message)s',
                        datefmt='%H:%M', level=logging.INFO, stream=sys.stdout)
    parser = argparse.ArgumentParser()
    parser.add_argument('-c', '--config_json_filepath', required=False,
                        help='Filepath to a config.json created by config.py')
    args = parser.parse_args(argv)

    config_file = args.config_json_filepath or CONFIG_FILE
    with open(config_file, 'r') as f:
        config = json.loads(f.read())

    print(f'Start time: {datetime.datetime.now()}')
    reports = run_suites(config) + run_demonstrations(config)
    rf.print_table(rf.summary_frame(reports))

    out = os.path.join(config['output_dir'], 'verification.json')
    rf.write_report(reports, config, out)
    print(f'End time: {datetime.datetime.now()}')

    verdicts = {r.verdict for r in reports}
    if 'fail' in verdicts:
        return 1
    if 'inconclusive' in verdicts:
        return 4
    return 0


if __name__ == '__main__':
    sys.exit(main())
