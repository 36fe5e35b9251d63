'''
Tests for the run_corrkit.py command line: exit codes, report files and
configuration handling

To run:
    In command line, type python3 test_cli.py
    For more verbose testing, include the -v flag
'''
import os
import sys
import json
import tempfile
import unittest
from unittest import mock

import numpy as np

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, 'shared'))

import run_corrkit  # noqa: E402
from corrkit_shared import qstate_functions as qs  # noqa: E402
from corrkit_shared import cli_functions  # noqa: E402


class CliTestCase(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def construct(self, name, *args):
        out = self.path(name)
        self.assertEqual(run_corrkit.main(['construct', *args, '--out', out]), 0)
        return out

    def read(self, name):
        with open(self.path(name), 'rb') as f:
            return f.read()


class TestCommands(CliTestCase):

    def test_construct_and_eval(self):
        state = self.construct('bell.json', 'bell')
        self.assertEqual(qs.load_state(state).dims, (2, 2))
        out = self.path('eval.json')
        self.assertEqual(run_corrkit.main(['eval', state, 'I', 'ef', '--out', out]), 0)
        with open(out) as f:
            values = {row['monotone']: row['value'] for row in json.load(f)['values']}
        self.assertAlmostEqual(values['total_mutual_information'], 2 * np.log(2), places=9)
        self.assertAlmostEqual(values['ef'], np.log(2), places=9)

    def test_mps_construction(self):
        state = self.construct('mps.json', 'mps', '--d1', '2', '--d2', '4', '--Q', '2',
                               '--p', '0.5,0.5')
        self.assertEqual(run_corrkit.main(['eval', state, 'ef']), 0)

    def test_check_pass_and_identical_reports(self):
        args = ['check', '1', 'I', '--dims', '2,2', '--trials', '20', '--seed', '7',
                '--out', self.path('check.json')]
        self.assertEqual(run_corrkit.main(args), 0)
        first_json, first_csv = self.read('check.json'), self.read('check.csv')
        self.assertEqual(run_corrkit.main(args), 0)
        self.assertEqual(self.read('check.json'), first_json)
        self.assertEqual(self.read('check.csv'), first_csv)
        report = json.loads(first_json)
        self.assertEqual(report['config']['seed'], 7)
        self.assertEqual(report['reports'][0]['verdict'], 'pass')

    def test_check_violation(self):
        out = self.path('fixture.json')
        code = run_corrkit.main(['check', '1', 'neg-I-fixture', '--dims', '2,2',
                                 '--trials', '20', '--seed', '7', '--out', out])
        self.assertEqual(code, 1)
        with open(out) as f:
            witness = json.load(f)['reports'][0]['witness']
        self.assertIn('scenario', witness)

    def test_inconclusive(self):
        code = run_corrkit.main(['check', '1', 'ef', '--dims', '3,3', '--trials', '10',
                                 '--seed', '1'])
        self.assertEqual(code, 4)

    def test_unsupported_regime(self):
        state = self.path('mixed.json')
        qs.save_state(qs.sample_state((3, 3), 4, 6), state)
        self.assertEqual(run_corrkit.main(['eval', state, 'ef']), 3)

    def test_reductions(self):
        good = self.construct('npartite.json', 'npartite_max', '--dims', '2,2,4')
        self.assertEqual(run_corrkit.main(['reductions', good]), 0)
        bad = self.construct('product.json', 'product', '--dims', '2,2,2,2')
        self.assertEqual(run_corrkit.main(['reductions', bad]), 1)

    def test_filter(self):
        out = self.path('filter.json')
        code = run_corrkit.main(['filter', 'entropy:q=1', '--d1', '2', '--lambda', '0.8,0.2',
                                 '--out', out])
        self.assertEqual(code, 0)
        self.assertEqual(run_corrkit.main(['check', '3', 'entropy:q=1', '--demo-filter',
                                           '--d1', '2', '--lambda', '0.8,0.2']), 0)

    def test_bell(self):
        state = self.construct('bell.json', 'bell')
        out = self.path('bell_value.json')
        code = run_corrkit.main(['bell', state, '--seed', '0', '--restarts', '6',
                                 '--iters', '200', '--out', out])
        self.assertEqual(code, 0)
        with open(out) as f:
            result = json.load(f)
        self.assertGreater(result['value'], 2.8)
        self.assertEqual(len(result['restart_values']), 6)


class TestInvalidInput(CliTestCase):

    def test_missing_state_file(self):
        self.assertEqual(run_corrkit.main(['eval', self.path('nope.json'), 'I']), 2)

    def test_unknown_monotone(self):
        state = self.construct('bell.json', 'bell')
        self.assertEqual(run_corrkit.main(['eval', state, 'no-such-measure']), 2)

    def test_bad_construction(self):
        code = run_corrkit.main(['construct', 'mps', '--d1', '3', '--d2', '2', '--Q', '1',
                                 '--p', '1'])
        self.assertEqual(code, 2)

    def test_seed_is_required(self):
        with mock.patch.dict(os.environ):
            os.environ.pop(cli_functions.SEED_ENV, None)
            code = run_corrkit.main(['check', '1', 'I', '--dims', '2,2', '--trials', '5'])
        self.assertEqual(code, 2)

    def test_demo_filter_needs_no_seed(self):
        with mock.patch.dict(os.environ):
            os.environ.pop(cli_functions.SEED_ENV, None)
            code = run_corrkit.main(['check', '3', 'entropy:q=1', '--demo-filter',
                                     '--d1', '2', '--lambda', '0.8,0.2'])
        self.assertEqual(code, 0)

    def test_seed_from_environment(self):
        out = self.path('env.json')
        with mock.patch.dict(os.environ, {cli_functions.SEED_ENV: '5'}):
            code = run_corrkit.main(['check', '2', 'I', '--dims', '2,2', '--trials', '5',
                                     '--out', out])
        self.assertEqual(code, 0)
        with open(out) as f:
            self.assertEqual(json.load(f)['config']['seed'], 5)

    def test_argparse_rejects_unknown_condition(self):
        with self.assertRaises(SystemExit):
            run_corrkit.main(['check', '5', 'I'])


class TestRunConfiguration(CliTestCase):

    def write_config(self, data):
        path = self.path('run.json')
        with open(path, 'w') as f:
            json.dump(data, f)
        return path

    def test_config_file_with_flag_override(self):
        out = self.path('from_config.json')
        path = self.write_config({'command': 'check', 'condition': '3', 'monotones': ['I'],
                                  'dims': [2, 2], 'trials': 10, 'seed': 3, 'out': out})
        self.assertEqual(run_corrkit.main(['-c', path]), 0)
        self.assertEqual(run_corrkit.main(['-c', path, 'check', '3', 'I', '--seed', '4']), 0)
        with open(out) as f:
            self.assertEqual(json.load(f)['config']['seed'], 4)

    def test_unknown_key(self):
        path = self.write_config({'command': 'eval', 'bogus': 1})
        self.assertEqual(run_corrkit.main(['-c', path]), 2)

    def test_state_tol_is_fixed(self):
        path = self.write_config({'command': 'eval', 'tolerances': {'state_tol': 1e-6}})
        self.assertEqual(run_corrkit.main(['-c', path]), 2)

    def test_round_trip(self):
        config = cli_functions.RunConfig.from_dict({'command': 'filter', 'lambda': [0.8, 0.2],
                                                    'seesaw': {'restarts': 3}})
        self.assertEqual(config.lam, [0.8, 0.2])
        self.assertEqual(config.seesaw['restarts'], 3)
        self.assertEqual(config.seesaw['iters'], 500)
        data = config.to_dict()
        self.assertEqual(data['lambda'], [0.8, 0.2])
        self.assertNotIn('lam', data)


if __name__ == '__main__':
    unittest.main()
