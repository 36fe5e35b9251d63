'''
Command implementations behind run_corrkit.py.

Each cmd_* function takes a resolved RunConfig and returns a process exit
code. run_command is the only place where library errors become exit codes:

    0 - success (suite passed, or advisory only)
    1 - violation witness found / reduction check failed
    2 - invalid input, parameters or configuration
    3 - unsupported monotone regime
    4 - inconclusive suite (more than half the trials skipped)
'''
import os
import json
import logging
import dataclasses
from dataclasses import dataclass, field

import pandas as pd

from corrkit_shared.errors import CorrkitError, ConfigError, UnsupportedRegimeError
from corrkit_shared import qstate_functions as qs
from corrkit_shared import monotone_functions as mf
from corrkit_shared import bell_functions as bf
from corrkit_shared import construction_functions as cf
from corrkit_shared import harness_functions as hf
from corrkit_shared import report_functions as rf

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3
EXIT_INCONCLUSIVE = 4

VERDICT_EXIT = {'pass': EXIT_OK, 'advisory': EXIT_OK, 'fail': EXIT_VIOLATION,
                'inconclusive': EXIT_INCONCLUSIVE}

COMMANDS = ('eval', 'construct', 'check', 'scan', 'bell', 'reductions', 'filter')
STOCHASTIC_COMMANDS = ('check', 'scan', 'bell')
CONSTRUCT_KINDS = ('mps', 'npartite_max', 'bell', 'ghz', 'pure_schmidt', 'product')
SEED_ENV = 'CORRKIT_SEED'
PROBABILITY_TOL = 1e-9

# JSON spellings of fields whose names are Python keywords
KEY_ALIASES = {'lambda': 'lam'}


def default_tolerances():
    return {**hf.default_tolerances(),
            'state_tol': qs.STATE_TOL,
            'reduction_tol': cf.REDUCTION_TOL}


def default_seesaw():
    return {'restarts': bf.DEFAULT_RESTARTS, 'iters': bf.DEFAULT_ITERS, 'tol': bf.DEFAULT_TOL}


@dataclass
class RunConfig:
    '''Everything one command needs; built from a JSON file and/or flags.'''
    command: str = None
    state: str = None
    out: str = None
    output_dir: str = ''
    monotones: list = field(default_factory=list)
    dims: tuple = None
    seed: int = None
    trials: int = 100
    condition: str = None
    rank: int = None
    efficient: bool = False
    preserve_dims: bool = False
    demo_filter: bool = False
    kind: str = None
    d1: int = None
    d2: int = None
    Q: int = None
    p: list = None
    lam: list = None
    d: int = None
    n_sites: int = None
    functional: str = 'CHSH'
    tolerances: dict = field(default_factory=default_tolerances)
    seesaw: dict = field(default_factory=default_seesaw)
    threads: int = None
    num_processes: int = 1

    @classmethod
    def from_dict(cls, data):
        '''Build a config, rejecting unknown keys at any level.'''
        if not isinstance(data, dict):
            raise ConfigError('a run configuration must be a JSON object')
        known = {f.name for f in dataclasses.fields(cls)}
        values = {}
        for key, value in data.items():
            name = KEY_ALIASES.get(key, key)
            if name not in known:
                raise ConfigError(f'unknown configuration key {key!r}')
            values[name] = value
        config = cls(**{k: v for k, v in values.items()
                        if k not in ('tolerances', 'seesaw')})
        config.tolerances = _merge(default_tolerances(), values.get('tolerances'), 'tolerances')
        config.seesaw = _merge(default_seesaw(), values.get('seesaw'), 'seesaw')
        return config

    def to_dict(self):
        data = dataclasses.asdict(self)
        data['lambda'] = data.pop('lam')
        if data['dims'] is not None:
            data['dims'] = list(data['dims'])
        return data


def _merge(defaults, overrides, section):
    overrides = overrides or {}
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ConfigError(f'unknown {section} keys {sorted(unknown)}')
    if section == 'tolerances' and overrides.get('state_tol', qs.STATE_TOL) != qs.STATE_TOL:
        raise ConfigError(f'state_tol is fixed at {qs.STATE_TOL:g}')
    return {**defaults, **overrides}


def load_run_config(filepath):
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f'cannot read run configuration {filepath}: {e}') from e
    return RunConfig.from_dict(data)


def parse_list(text, kind=float):
    '''Comma-separated decimals (or ints) as a list.'''
    if text is None or isinstance(text, (list, tuple)):
        return text
    try:
        return [kind(x) for x in str(text).split(',') if x.strip()]
    except ValueError as e:
        raise ConfigError(f'cannot parse {text!r} as a comma-separated list') from e


def resolve_seed(config):
    '''
    Seed from the config, else CORRKIT_SEED. Mandatory for stochastic commands;
    check --demo-filter is deterministic and runs without one.
    '''
    if config.seed is not None:
        return int(config.seed)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            return int(env_seed)
        except ValueError as e:
            raise ConfigError(f'{SEED_ENV} must be an integer, got {env_seed!r}') from e
    demo = config.command == 'check' and config.demo_filter
    if config.command in STOCHASTIC_COMMANDS and not demo:
        raise ConfigError(f'{config.command} needs a seed (--seed or {SEED_ENV})')
    return None


def _require(config, *names):
    missing = [n for n in names if getattr(config, n) in (None, [], '')]
    if missing:
        raise ConfigError(f'{config.command} needs {", ".join(missing)}')


def _out_path(config, default_name):
    if config.out:
        return config.out
    if config.output_dir:
        return os.path.join(config.output_dir, default_name)
    return None


def _seesaw_options(config):
    return {**config.seesaw, 'seed': config.seed if config.seed is not None else 0}


def _print_report(report):
    rf.print_table(rf.summary_frame([report]))
    if report.witness is not None:
        print(f'Witness from trial {report.witness["trial"]}, margin {report.witness["margin"]:.6e}')


### Commands ------------------------------------------------------------------

def cmd_eval(config):
    '''Evaluate each requested monotone on a state file.'''
    _require(config, 'state', 'monotones')
    rho = qs.load_state(config.state)
    rows = []
    for name in config.monotones:
        handle = mf.resolve_monotone(name, _seesaw_options(config))
        rows.append({'monotone': handle.name, 'value': float(handle(rho))})
    frame = pd.DataFrame(rows, columns=['monotone', 'value'])
    print(frame.to_string(index=False, float_format=lambda x: f'{x:.10g}'))
    out = _out_path(config, 'eval.json')
    if out:
        rf.write_json({'config': config.to_dict(), 'values': rows}, out)
    return EXIT_OK


def build_state(config):
    '''The state a construct command describes.'''
    kind = config.kind
    if kind == 'mps':
        _require(config, 'd1', 'd2', 'Q', 'p')
        spec = cf.MpsSpec.from_dict({'d1': config.d1, 'd2': config.d2, 'Q': config.Q,
                                     'p': parse_list(config.p),
                                     'weights': parse_list(config.lam)},
                                    tol=PROBABILITY_TOL)
        return cf.build_mps(spec)
    if kind == 'npartite_max':
        _require(config, 'dims')
        return cf.build_npartite_max(config.dims).density()
    if kind == 'bell':
        return cf.bell_state(config.d or 2)
    if kind == 'ghz':
        return cf.ghz_state(config.n_sites or 3, config.d or 2)
    if kind == 'pure_schmidt':
        _require(config, 'lam')
        return cf.pure_schmidt_state(parse_list(config.lam), config.d)
    if kind == 'product':
        _require(config, 'dims')
        return cf.product_state(config.dims)
    raise ConfigError(f'unknown construction {kind!r}; use one of {CONSTRUCT_KINDS}')


def cmd_construct(config):
    _require(config, 'kind')
    rho = build_state(config)
    out = _out_path(config, f'{config.kind}.json')
    if out:
        directory = os.path.dirname(out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        qs.save_state(rho, out)
        print(f'Wrote {config.kind} state with dims {list(rho.dims)} to {out}')
    else:
        print(json.dumps(qs.state_to_dict(rho)))
    return EXIT_OK


def _filter_report(config, name):
    _require(config, 'd1', 'lam')
    handle = mf.resolve_monotone(name, _seesaw_options(config))
    report = hf.filtering_demo(handle, int(config.d1), parse_list(config.lam),
                               tolerances=config.tolerances)
    table = pd.DataFrame({'outcome': range(1, len(report.details['probabilities']) + 1),
                          'probability': report.details['probabilities'],
                          'value': report.details['outcome_values']})
    print(f'{handle.name} before filtering: {report.details["value_before"]:.10g}')
    print(table.to_string(index=False, float_format=lambda x: f'{x:.10g}'))
    return report


def cmd_check(config):
    '''Run a condition suite (or, with demo_filter, the filtering demonstration).'''
    _require(config, 'monotones')
    if config.demo_filter:
        report = _filter_report(config, config.monotones[0])
    else:
        _require(config, 'condition', 'dims')
        handle = mf.resolve_monotone(config.monotones[0], _seesaw_options(config))
        report = hf.check_condition(handle, str(config.condition), config.dims,
                                    int(config.trials), config.seed, rank=config.rank,
                                    efficient=config.efficient,
                                    preserve_dims=config.preserve_dims,
                                    num_processes=config.num_processes,
                                    threads=config.threads,
                                    tolerances=config.tolerances)
    _print_report(report)
    out = _out_path(config, f'check_{report.condition}.json')
    if out:
        rf.write_report([report], config.to_dict(), out)
    return VERDICT_EXIT[report.verdict]


def cmd_filter(config):
    _require(config, 'monotones')
    report = _filter_report(config, config.monotones[0])
    _print_report(report)
    out = _out_path(config, 'filter.json')
    if out:
        rf.write_report([report], config.to_dict(), out)
    return VERDICT_EXIT[report.verdict]


def cmd_scan(config):
    _require(config, 'state', 'monotones')
    candidate = qs.load_state(config.state)
    handle = mf.resolve_monotone(config.monotones[0], _seesaw_options(config))
    report = hf.maximality_scan(handle, candidate, int(config.trials), config.seed,
                                rank=config.rank, num_processes=config.num_processes,
                                threads=config.threads, tolerances=config.tolerances)
    print(f'Candidate value {report.details["candidate_value"]:.10g}, '
          f'max sampled {report.details["max_sampled_value"]}')
    _print_report(report)
    out = _out_path(config, 'scan.json')
    if out:
        rf.write_report([report], config.to_dict(), out)
    return VERDICT_EXIT[report.verdict]


def cmd_bell(config):
    _require(config, 'state')
    rho = qs.load_state(config.state)
    name = config.functional
    handle = mf.resolve_monotone(name if name.startswith('bell:') else f'bell:{name}')
    functional = handle.evaluator.keywords['functional']
    result = bf.bell_value(rho, functional, restarts=int(config.seesaw['restarts']),
                           iters=int(config.seesaw['iters']), tol=float(config.seesaw['tol']),
                           seed=config.seed, num_processes=config.num_processes)
    print(f'{handle.name}: {result.value:.10g} (local bound {functional.local_bound}, '
          f'best restart {result.best_restart})')
    if result.possibly_not_converged:
        log.warning('The last restart improved the value; more restarts may help')
    out = _out_path(config, 'bell.json')
    if out:
        rf.write_json({'config': config.to_dict(),
                       'functional': functional.to_dict(),
                       'value': result.value,
                       'restart_values': list(result.restart_values),
                       'possibly_not_converged': result.possibly_not_converged,
                       'a_povms': [[qs.encode_matrix(e) for e in setting]
                                   for setting in result.a_povms],
                       'b_povms': [[qs.encode_matrix(e) for e in setting]
                                   for setting in result.b_povms]}, out)
    return EXIT_OK


def cmd_reductions(config):
    _require(config, 'state')
    rho = qs.load_state(config.state)
    report = cf.check_reductions(rho, tol=config.tolerances['reduction_tol'])
    rf.print_table(report.rows)
    print(f'Purity forced: {report.purity_forced}, state pure: {report.is_pure}')
    print(report.verdict)
    out = _out_path(config, 'reductions.json')
    if out:
        rf.write_json({'config': config.to_dict(),
                       'subsets': report.rows.to_dict(orient='records'),
                       'purity_forced': report.purity_forced,
                       'is_pure': report.is_pure,
                       'verdict': report.verdict}, out)
    return EXIT_OK if report.passed else EXIT_VIOLATION


COMMAND_FUNCTIONS = {'eval': cmd_eval, 'construct': cmd_construct, 'check': cmd_check,
                     'scan': cmd_scan, 'bell': cmd_bell, 'reductions': cmd_reductions,
                     'filter': cmd_filter}


def run_command(config):
    '''
    Resolve the seed, dispatch, and translate library errors into exit codes.
    '''
    try:
        if config.command not in COMMAND_FUNCTIONS:
            raise ConfigError(f'unknown command {config.command!r}; use one of {COMMANDS}')
        config.seed = resolve_seed(config)
        if config.dims is not None:
            config.dims = tuple(parse_list(config.dims, int))
        if isinstance(config.monotones, str):
            config.monotones = [config.monotones]
        config.monotones = [m for m in (config.monotones or []) if m]
        log.info('Running %s', config.command)
        return COMMAND_FUNCTIONS[config.command](config)
    except UnsupportedRegimeError as e:
        log.error('Unsupported regime: %s', e)
        return EXIT_UNSUPPORTED
    except (CorrkitError, ValueError, TypeError) as e:
        log.error('%s: %s', type(e).__name__, e)
        return EXIT_INVALID
