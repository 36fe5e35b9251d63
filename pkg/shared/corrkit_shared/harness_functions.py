'''
Randomized property suites for correlation monotones.

Suites:
    - check_condition1: C(Lambda(rho)) <= C(rho) for local channels
    - check_condition2: sum_q p_q C(rho_q) <= C(rho) for local measurements
    - check_condition3: min_q C(rho_q) <= C(rho) for local measurements
    - check_oneway_locc: C(sum_q Lambda_q(K_q rho K_q^†)) <= C(rho) for an
        efficient site-1 measurement followed by outcome-dependent site-2
        channels
    - maximality_scan: sampled states never exceed a candidate's value
    - filtering_demo: the cyclic filter applied to a maximally entangled state

Trial t of a suite with master seed s draws everything from
SeedSequence([s, t]), so a report does not depend on how trials are
scheduled across processes.
'''
import math
import logging
from dataclasses import dataclass, field
from functools import partial
from multiprocessing import Pool
from collections import namedtuple

import numpy as np
import psutil
from threadpoolctl import threadpool_limits

from corrkit_shared.errors import (CorrkitError, UnsupportedRegimeError,
                                   ConstructionError)
from corrkit_shared import qstate_functions as qs
from corrkit_shared import construction_functions as cf
from corrkit_shared.qstate_functions import DensityOperator

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8
SEESAW_ALLOWANCE = 1e-4
SKIP_LIMIT = 0.5
EQUAL_VALUES_TOL = 1e-9

CONDITIONS = ('1', '2', '3', 'oneway')

TrialResult = namedtuple('TrialResult', ['trial', 'margin', 'scenario'])


def default_tolerances():
    return {'violation_tol': VIOLATION_TOL, 'seesaw_allowance': SEESAW_ALLOWANCE}


def default_num_processes():
    return psutil.cpu_count(logical=False) or 1


@dataclass
class MonotoneReport:
    '''
    Outcome of a suite. worst_margin is the largest left-minus-right value
    over evaluated trials (None when nothing was evaluated); witness holds
    the serialized scenario that produced it.
    '''
    monotone: str
    condition: str
    dims: tuple
    trials: int
    seed: int
    worst_margin: float
    verdict: str
    skipped: int = 0
    witness: dict = None
    details: dict = field(default_factory=dict)

    @property
    def evaluated(self):
        return self.trials - self.skipped

    def to_dict(self):
        return {'monotone': self.monotone,
                'condition': self.condition,
                'dims': list(self.dims),
                'trials': self.trials,
                'seed': self.seed,
                'skipped': self.skipped,
                'worst_margin': self.worst_margin,
                'verdict': self.verdict,
                'details': self.details,
                'witness': self.witness}


### Scenario sampling ---------------------------------------------------------

def _child_seed(rng):
    return int(rng.integers(2 ** 32))


def _sample_rank(rng, handle, dims, rank):
    if handle.pure_only:
        return 1
    if rank is not None:
        return rank
    return int(rng.integers(1, math.prod(dims) + 1))


def _sample_out_dim(rng, d, n_kraus, preserve_dims):
    if preserve_dims:
        return d
    out_dim = int(rng.integers(1, d + 3))
    return max(out_dim, math.ceil(d / n_kraus))


def _random_composition(rng, total, parts):
    '''Split total into parts positive integers.'''
    if parts == 1:
        return [total]
    cuts = np.sort(rng.choice(np.arange(1, total), size=parts - 1, replace=False))
    bounds = [0] + [int(c) for c in cuts] + [total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def _sample_channel(rng, dims, site, preserve_dims):
    d = dims[site - 1]
    n_kraus = int(rng.integers(1, d * d + 1))
    out_dim = _sample_out_dim(rng, d, n_kraus, preserve_dims)
    return qs.sample_local_channel(dims, site, out_dim, n_kraus, _child_seed(rng))


def _sample_measurement(rng, dims, site, efficient, preserve_dims):
    d = dims[site - 1]
    k = int(rng.integers(1, d * d + 1))
    if efficient:
        terms = [1] * k
    else:
        terms = _random_composition(rng, k, int(rng.integers(1, k + 1)))
    floor = math.ceil(d / k)
    out_dims = [_sample_out_dim(rng, d, k, preserve_dims) for _ in terms]
    out_dims = [max(o, floor) for o in out_dims]
    return qs.sample_local_measurement(dims, site, len(terms), terms,
                                       _child_seed(rng), out_dims=out_dims)


def _sample_oneway(rng, dims, preserve_dims):
    d1, d2 = dims[0], dims[1]
    k = int(rng.integers(1, d1 * d1 + 1))
    out1 = _sample_out_dim(rng, d1, k, preserve_dims)
    measurement = qs.sample_local_measurement(dims, 1, k, 1, _child_seed(rng),
                                              out_dims=[out1] * k)
    out2 = d2 if preserve_dims else int(rng.integers(1, d2 + 3))
    after = (out1,) + dims[1:]
    channels = []
    for _ in range(k):
        n_kraus = max(int(rng.integers(1, d2 * d2 + 1)), math.ceil(d2 / out2))
        channels.append(qs.sample_local_channel(after, 2, out2, n_kraus, _child_seed(rng)))
    return measurement, tuple(channels)


def sample_scenario(rng, handle, condition, dims, rank=None, efficient=False,
                    preserve_dims=False):
    '''
    Draw the state and local operation(s) for one trial.

    Returns a dict with "state" and either "operation" (conditions 1-3) or
    "measurement" and "channels" (oneway)
    '''
    rank = _sample_rank(rng, handle, dims, rank)
    state = qs.sample_state(dims, rank, _child_seed(rng))
    if condition == 'oneway':
        measurement, channels = _sample_oneway(rng, dims, preserve_dims)
        return {'state': state, 'measurement': measurement, 'channels': channels}
    site = int(rng.integers(1, len(dims) + 1))
    if condition == '1':
        return {'state': state, 'operation': _sample_channel(rng, dims, site, preserve_dims)}
    efficient = efficient or handle.pure_only
    return {'state': state,
            'operation': _sample_measurement(rng, dims, site, efficient, preserve_dims)}


### Margins -------------------------------------------------------------------

def oneway_output(rho, measurement, channels):
    '''sum_q p_q Lambda_q(rho_q) over non-null outcomes.'''
    matrix = None
    factorization = None
    for (p, state), channel in zip(qs.measure(rho, measurement), channels):
        if state is None:
            continue
        out = qs.apply_channel(state, channel)
        matrix = p * out.matrix if matrix is None else matrix + p * out.matrix
        factorization = out.factorization
    return DensityOperator(factorization, matrix)


def condition_margin(handle, condition, scenario):
    '''
    Left side minus right side of the tested inequality for one scenario.
    Null outcomes (probability below qs.P_FLOOR) are left out.
    '''
    rho = scenario['state']
    before = handle(rho)
    if condition == '1':
        return handle(qs.apply_channel(rho, scenario['operation'])) - before
    if condition == 'oneway':
        after = oneway_output(rho, scenario['measurement'], scenario['channels'])
        return handle(after) - before
    outcomes = [(p, state) for p, state in qs.measure(rho, scenario['operation'])
                if state is not None]
    values = [handle(state) for _, state in outcomes]
    if condition == '2':
        return float(sum(p * v for (p, _), v in zip(outcomes, values))) - before
    if condition == '3':
        return min(values) - before
    raise ConstructionError(f'unknown condition {condition!r}; use one of {CONDITIONS}')


def run_trial(handle, condition, dims, seed, trial, rank=None, efficient=False,
              preserve_dims=False):
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    scenario = sample_scenario(rng, handle, condition, dims, rank, efficient, preserve_dims)
    try:
        margin = condition_margin(handle, condition, scenario)
    except UnsupportedRegimeError:
        return TrialResult(trial, None, scenario)
    return TrialResult(trial, float(margin), scenario)


def encode_scenario(scenario):
    data = {'state': qs.state_to_dict(scenario['state'])}
    if 'operation' in scenario:
        data['operation'] = qs.operation_to_dict(scenario['operation'])
    else:
        data['measurement'] = qs.operation_to_dict(scenario['measurement'])
        data['channels'] = [qs.operation_to_dict(c) for c in scenario['channels']]
    return data


def decode_scenario(data):
    scenario = {'state': qs.state_from_dict(data['state'])}
    if 'operation' in data:
        scenario['operation'] = qs.operation_from_dict(data['operation'])
    else:
        scenario['measurement'] = qs.operation_from_dict(data['measurement'])
        scenario['channels'] = tuple(qs.operation_from_dict(c) for c in data['channels'])
    return scenario


def replay_witness(handle, report):
    '''Re-evaluate a report's stored witness; returns its margin.'''
    if isinstance(report, MonotoneReport):
        report = report.to_dict()
    witness = report['witness']
    if witness is None:
        raise CorrkitError('report has no witness to replay')
    if report['condition'] == 'scan':
        candidate = qs.state_from_dict(report['details']['candidate'])
        return float(handle(qs.state_from_dict(witness['state']))) - float(handle(candidate))
    # filtering margins are min over outcomes
    condition = '3' if report['condition'] == 'filter' else report['condition']
    return float(condition_margin(handle, condition, decode_scenario(witness['scenario'])))


### Suites --------------------------------------------------------------------

def _init_worker(threads):
    if threads:
        threadpool_limits(limits=threads)


def _map_trials(func, n, num_processes, threads):
    '''func over range(n), in a Pool when num_processes > 1; results in order.'''
    if threads:
        num_processes = min(num_processes, threads)
    with threadpool_limits(limits=threads):
        if num_processes > 1 and n > 1:
            with Pool(processes=min(num_processes, n), initializer=_init_worker,
                      initargs=(threads,)) as pool:
                return pool.map(func, range(n))
        return [func(i) for i in range(n)]


def _verdict(handle, worst, skipped, trials, tolerances):
    if trials == 0 or worst is None or skipped / trials > SKIP_LIMIT:
        return 'inconclusive'
    allowance = (tolerances['seesaw_allowance'] if handle.optimizer_backed
                 else tolerances['violation_tol'])
    if worst <= allowance:
        return 'pass'
    return 'advisory' if handle.optimizer_backed else 'fail'


def check_condition(handle, condition, dims, trials, seed, rank=None, efficient=False,
                    preserve_dims=False, num_processes=1, threads=None, tolerances=None):
    '''
    Run one randomized suite.

    Input:
        - handle: (MonotoneHandle)
        - condition: (str) '1', '2', '3' or 'oneway'
        - dims: (tuple of int) local dimensions of the sampled states
        - trials: (int) number of trials
        - seed: (int) master seed
        - rank: (int, optional) fixed rank of sampled states
        - efficient: (bool) sample measurements with one Kraus term per outcome
        - preserve_dims: (bool) operations keep every local dimension
        - num_processes, threads: parallelism caps; results do not depend on them
        - tolerances: (dict, optional) violation_tol and seesaw_allowance

    Returns a MonotoneReport
    '''
    condition = str(condition)
    if condition not in CONDITIONS:
        raise ConstructionError(f'unknown condition {condition!r}; use one of {CONDITIONS}')
    dims = tuple(int(d) for d in dims)
    qs.HilbertFactorization(dims)
    if len(dims) < handle.min_sites:
        raise ConstructionError(f'{handle.name} needs at least {handle.min_sites} sites')
    if condition == 'oneway' and len(dims) < 2:
        raise ConstructionError('one-way protocols need at least 2 sites')
    tolerances = {**default_tolerances(), **(tolerances or {})}
    log.info('Condition %s suite for %s on dims %s: %s trials, seed %s',
             condition, handle.name, list(dims), trials, seed)

    run = partial(run_trial, handle, condition, dims, seed, rank=rank,
                  efficient=efficient, preserve_dims=preserve_dims)
    results = _map_trials(run, trials, num_processes, threads)

    worst = None
    witness = None
    skipped = 0
    for result in results:
        if result.margin is None:
            skipped += 1
            continue
        if worst is None or result.margin > worst:
            worst = result.margin
            witness = result
    if skipped:
        log.info('%s of %s trials skipped (unsupported regime)', skipped, trials)
    verdict = _verdict(handle, worst, skipped, trials, tolerances)
    log.info('Verdict: %s (worst margin %s)', verdict, worst)

    report = MonotoneReport(monotone=handle.name, condition=condition, dims=dims,
                            trials=trials, seed=seed, worst_margin=worst,
                            verdict=verdict, skipped=skipped)
    claimed = condition in handle.claims
    report.details = {'tolerances': tolerances, 'claimed': claimed}
    if witness is not None:
        report.witness = {'trial': witness.trial, 'margin': witness.margin,
                          'scenario': encode_scenario(witness.scenario)}
    return report


def check_condition1(handle, dims, trials, seed, **kwargs):
    return check_condition(handle, '1', dims, trials, seed, **kwargs)


def check_condition2(handle, dims, trials, seed, **kwargs):
    return check_condition(handle, '2', dims, trials, seed, **kwargs)


def check_condition3(handle, dims, trials, seed, **kwargs):
    return check_condition(handle, '3', dims, trials, seed, **kwargs)


def check_oneway_locc(handle, dims, trials, seed, **kwargs):
    return check_condition(handle, 'oneway', dims, trials, seed, **kwargs)


### Maximality scan -----------------------------------------------------------

def scan_trial(handle, dims, seed, rank, trial):
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial]))
    state = qs.sample_state(dims, _sample_rank(rng, handle, dims, rank), _child_seed(rng))
    try:
        return trial, float(handle(state)), state
    except UnsupportedRegimeError:
        return trial, None, state


def maximality_scan(handle, candidate, trials, seed, rank=None, num_processes=1,
                    threads=None, tolerances=None):
    '''
    Sample states on candidate's dims and look for one whose value exceeds
    the candidate's by more than the violation tolerance.

    Returns a MonotoneReport with condition 'scan'; worst_margin is the
    largest sampled value minus the candidate value and details carries
    both values and the number of exceeding states.
    '''
    tolerances = {**default_tolerances(), **(tolerances or {})}
    dims = candidate.dims
    candidate_value = float(handle(candidate))
    log.info('Maximality scan for %s on dims %s: %s trials, seed %s',
             handle.name, list(dims), trials, seed)
    run = partial(scan_trial, handle, dims, seed, rank)
    results = _map_trials(run, trials, num_processes, threads)

    allowance = (tolerances['seesaw_allowance'] if handle.optimizer_backed
                 else tolerances['violation_tol'])
    best = None
    skipped = 0
    exceeding = 0
    for trial, value, state in results:
        if value is None:
            skipped += 1
            continue
        if value - candidate_value > allowance:
            exceeding += 1
        if best is None or value > best[1]:
            best = (trial, value, state)
    worst = None if best is None else best[1] - candidate_value
    verdict = _verdict(handle, worst, skipped, trials, tolerances)
    report = MonotoneReport(monotone=handle.name, condition='scan', dims=dims,
                            trials=trials, seed=seed, worst_margin=worst,
                            verdict=verdict, skipped=skipped)
    report.details = {'candidate_value': candidate_value,
                      'max_sampled_value': None if best is None else best[1],
                      'exceeding': exceeding,
                      'candidate': qs.state_to_dict(candidate),
                      'tolerances': tolerances}
    if best is not None and worst > allowance:
        report.witness = {'trial': best[0], 'margin': worst,
                          'state': qs.state_to_dict(best[2])}
    log.info('Verdict: %s (%s of %s sampled states exceed the candidate)',
             verdict, exceeding, trials)
    return report


### Filtering -----------------------------------------------------------------

def filtering_demo(handle, d1, lam, tolerances=None):
    '''
    Apply cyclic_filter(d1, lam) to the maximally entangled state on
    [d1, d1] and compare C on every outcome with C before filtering.

    A positive margin min_q C(rho_q) - C(rho) means every outcome raised
    the value: the measure breaks the probability-one condition.
    Schmidt-vector functionals must give the same value on every outcome.

    Returns a MonotoneReport with condition 'filter'
    '''
    tolerances = {**default_tolerances(), **(tolerances or {})}
    rho = cf.bell_state(d1)
    measurement = cf.cyclic_filter(d1, lam)
    before = float(handle(rho))
    outcomes = qs.measure(rho, measurement)
    values = [float(handle(state)) for _, state in outcomes if state is not None]
    if handle.schmidt_functional and max(values) - min(values) > EQUAL_VALUES_TOL:
        raise CorrkitError(
            f'{handle.name} gives unequal values {values} on outcomes with equal Schmidt vectors')
    margin = min(values) - before
    allowance = (tolerances['seesaw_allowance'] if handle.optimizer_backed
                 else tolerances['violation_tol'])
    if margin <= allowance:
        verdict = 'pass'
    elif '3' in handle.claims:
        verdict = 'fail'
    else:
        verdict = 'advisory'
    lam_values = list(getattr(lam, 'coeffs', lam))
    report = MonotoneReport(monotone=handle.name, condition='filter', dims=(d1, d1),
                            trials=1, seed=0, worst_margin=float(margin),
                            verdict=verdict)
    report.details = {'lambda': [float(x) for x in lam_values],
                      'value_before': before,
                      'probabilities': [float(p) for p, _ in outcomes],
                      'outcome_values': values,
                      'tolerances': tolerances}
    if margin > allowance:
        report.witness = {'trial': 0, 'margin': float(margin),
                          'scenario': {'state': qs.state_to_dict(rho),
                                       'operation': qs.operation_to_dict(measurement)}}
    log.info('Filtering %s with lambda %s: before %.10f, outcomes %s',
             handle.name, lam_values, before, values)
    return report
