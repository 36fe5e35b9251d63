'''
Bell functionals and the see-saw lower bound on B(rho).

B(rho) is the largest value of sum_{s,t,x,y} beta[s,t,x,y] p(s,t|x,y) over
local measurements of a bipartite state. The see-saw fixes one party's
measurements, optimizes the other party exactly and alternates. For two
outcomes per setting the exact step is a projector onto the positive
eigenspace of the conditional operator W_0 - W_1.

Usage:
    from corrkit_shared import bell_functions
    result = bell_functions.bell_value(rho, bell_functions.chsh(), seed=7)
    result.value
'''
import json
import logging
from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool

import numpy as np
import scipy.linalg

from corrkit_shared.errors import (InvalidStateError, DimensionMismatchError,
                                   ConstructionError)
from corrkit_shared.qstate_functions import haar_isometry

log = logging.getLogger(__name__)

DEFAULT_RESTARTS = 20
DEFAULT_ITERS = 500
DEFAULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class BellFunctional:
    '''
    Coefficients beta[s, t, x, y] for outcomes s (site 1), t (site 2) and
    settings x (site 1), y (site 2). local_bound is metadata when known.
    '''
    beta: np.ndarray
    local_bound: float = None
    name: str = 'custom'

    def __post_init__(self):
        beta = np.array(self.beta, dtype=float)
        if beta.ndim != 4 or 0 in beta.shape:
            raise InvalidStateError(f'beta must have shape (S, T, X, Y), got {beta.shape}')
        if not np.all(np.isfinite(beta)):
            raise InvalidStateError('beta has non-finite coefficients')
        if not np.any(beta):
            raise InvalidStateError('beta needs at least one nonzero coefficient')
        beta.flags.writeable = False
        object.__setattr__(self, 'beta', beta)

    @property
    def shape(self):
        S, T, X, Y = self.beta.shape
        return {'X': X, 'Y': Y, 'S': S, 'T': T}

    @property
    def trivial_bound(self):
        '''sum |beta|, an upper bound on any value.'''
        return float(np.abs(self.beta).sum())

    def to_dict(self):
        data = dict(self.shape)
        data['beta'] = [float(b) for b in self.beta.reshape(-1)]
        data['local_bound'] = self.local_bound
        data['name'] = self.name
        return data

    @classmethod
    def from_dict(cls, data):
        '''beta is flattened in (s, t, x, y) order.'''
        try:
            shape = (int(data['S']), int(data['T']), int(data['X']), int(data['Y']))
            beta = np.asarray(data['beta'], dtype=float).reshape(shape)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidStateError(f'invalid Bell functional JSON: {e}') from e
        return cls(beta, data.get('local_bound'), data.get('name', 'custom'))


def load_functional(filepath):
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidStateError(f'cannot read Bell functional {filepath}: {e}') from e
    return BellFunctional.from_dict(data)


def chsh():
    '''beta = (-1)^(s + t + x*y); local bound 2, quantum maximum 2*sqrt(2).'''
    s, t, x, y = np.indices((2, 2, 2, 2))
    return BellFunctional((-1.0) ** (s + t + x * y), 2.0, 'CHSH')


def tilted_chsh(alpha=1.0):
    '''
    alpha * <A_0> + CHSH, for 0 <= alpha < 2. The local bound is 2 + alpha;
    the quantum maximum sqrt(8 + 2 alpha^2) is only reached on partially
    entangled states (see tilted_chsh_optimal_schmidt).
    '''
    if not 0 <= alpha < 2:
        raise ConstructionError(f'alpha must be in [0, 2), got {alpha}')
    beta = np.array(chsh().beta)
    for s in range(2):
        # p(s|x=0) = sum_t p(s,t|0,0)
        beta[s, :, 0, 0] += alpha * (-1) ** s
    return BellFunctional(beta, 2.0 + alpha, 'tilted_chsh')


def tilted_chsh_quantum_max(alpha=1.0):
    return float(np.sqrt(8 + 2 * alpha ** 2))


def tilted_chsh_optimal_schmidt(alpha=1.0):
    '''Schmidt vector (cos^2 theta, sin^2 theta) with sin 2theta = sqrt((4-a^2)/(4+a^2)).'''
    sin_2theta = np.sqrt((4 - alpha ** 2) / (4 + alpha ** 2))
    cos_2theta = np.sqrt(1 - sin_2theta ** 2)
    return ((1 + cos_2theta) / 2, (1 - cos_2theta) / 2)


@dataclass(frozen=True, eq=False)
class BellResult:
    value: float
    a_povms: np.ndarray   # (X, S, dA, dA)
    b_povms: np.ndarray   # (Y, T, dB, dB)
    restart_values: tuple
    best_restart: int
    possibly_not_converged: bool
    history: tuple        # best restart's value after every half step


### See-saw -------------------------------------------------------------------

def _check_inputs(rho, f):
    if rho.n_sites != 2:
        raise DimensionMismatchError(f'Bell values need 2 sites, got dims {rho.dims}')
    S, T, _, _ = f.beta.shape
    if S != 2 or T != 2:
        raise DimensionMismatchError(
            f'the see-saw handles two outcomes per setting, got S={S}, T={T}')


def expected_value(rho, f, a_povms, b_povms):
    '''sum beta[s,t,x,y] tr(rho A_{s|x} ⊗ B_{t|y}).'''
    dA, dB = rho.dims
    R = rho.matrix.reshape(dA, dB, dA, dB)
    probs = np.einsum('ajbk,xsba,ytkj->stxy', R, a_povms, b_povms, optimize=True)
    return float(np.sum(f.beta * probs.real))


def _positive_projector(w):
    eigs, vecs = scipy.linalg.eigh(w)
    v = vecs[:, eigs > 0]
    return v @ v.conj().T


def _optimize_side(R, beta, fixed, side):
    '''
    Exact best response of one party against the other's fixed measurements.
    beta is indexed [mine_outcome, other_outcome, mine_setting, other_setting].
    '''
    if side == 'A':
        conditional = np.einsum('ajbk,ytkj->ytab', R, fixed, optimize=True)
    else:
        conditional = np.einsum('ajbk,xsba->xsjk', R, fixed, optimize=True)
    n_settings = beta.shape[2]
    d = conditional.shape[-1]
    povms = np.zeros((n_settings, 2, d, d), dtype=complex)
    for x in range(n_settings):
        w = np.einsum('sty,ytab->sab', beta[:, :, x, :], conditional)
        p0 = _positive_projector(w[0] - w[1])
        povms[x, 0] = p0
        povms[x, 1] = np.eye(d) - p0
    return povms


def _deterministic_projective(index, n_settings, d):
    '''Outcome 0 on setting y is certain when bit y of index is set, impossible otherwise.'''
    povms = np.zeros((n_settings, 2, d, d), dtype=complex)
    for y in range(n_settings):
        outcome = 0 if (index >> y) & 1 else 1
        povms[y, outcome] = np.eye(d)
    return povms


def _random_projective(rng, n_settings, d):
    povms = np.zeros((n_settings, 2, d, d), dtype=complex)
    for y in range(n_settings):
        if d == 1:
            povms[y, 0] = np.eye(1)
            continue
        rank = int(rng.integers(1, d))
        v = haar_isometry(rng, d, d)[:, :rank]
        povms[y, 0] = v @ v.conj().T
        povms[y, 1] = np.eye(d) - povms[y, 0]
    return povms


def deterministic_starts(f, restarts):
    '''
    Number of restarts that begin from a deterministic strategy on site 2.

    All 2**m such strategies are tried when restarts allow it, which keeps the
    value at or above the local bound; at least one random start is kept.
    '''
    return min(2 ** f.beta.shape[3], max(restarts - 1, 1))


def seesaw_restart(rho, f, iters, tol, seed, n_deterministic, restart):
    '''
    One see-saw run. Restarts below n_deterministic start site 2 from the
    deterministic strategy with that index; the rest from a seeded random
    projective measurement.

    Returns (value, a_povms, b_povms, history)
    '''
    rng = np.random.default_rng(np.random.SeedSequence([seed, restart]))
    dA, dB = rho.dims
    R = rho.matrix.reshape(dA, dB, dA, dB)
    beta_a = f.beta
    beta_b = np.transpose(f.beta, (1, 0, 3, 2))
    if restart < n_deterministic:
        b_povms = _deterministic_projective(restart, f.beta.shape[3], dB)
    else:
        b_povms = _random_projective(rng, f.beta.shape[3], dB)
    a_povms = _optimize_side(R, beta_a, b_povms, 'A')
    value = expected_value(rho, f, a_povms, b_povms)
    history = [value]
    for _ in range(iters):
        b_povms = _optimize_side(R, beta_b, a_povms, 'B')
        a_povms = _optimize_side(R, beta_a, b_povms, 'A')
        new_value = expected_value(rho, f, a_povms, b_povms)
        history.append(new_value)
        improvement = new_value - value
        value = max(value, new_value)
        if improvement < tol:
            break
    return value, a_povms, b_povms, tuple(history)


def bell_value(rho, f, restarts=DEFAULT_RESTARTS, iters=DEFAULT_ITERS, tol=DEFAULT_TOL,
               seed=0, num_processes=1):
    '''
    Lower bound on B(rho) by see-saw, best over seeded restarts.

    Input:
        - rho: (DensityOperator) bipartite state
        - f: (BellFunctional) with two outcomes per setting
        - restarts, iters, tol: see-saw controls
        - seed: (int) master seed; restart r uses SeedSequence([seed, r])
        - num_processes: (int) restarts run in a Pool when > 1

    Returns a BellResult. The best restart is picked in index order, so the
    result does not depend on num_processes.
    '''
    _check_inputs(rho, f)
    if restarts < 1 or iters < 0:
        raise ConstructionError('restarts must be >= 1 and iters >= 0')
    run = partial(seesaw_restart, rho, f, iters, tol, seed, deterministic_starts(f, restarts))
    if num_processes > 1 and restarts > 1:
        with Pool(min(num_processes, restarts)) as pool:
            runs = pool.map(run, range(restarts))
    else:
        runs = [run(r) for r in range(restarts)]

    best = 0
    for r, (value, _, _, _) in enumerate(runs):
        if value > runs[best][0]:
            log.debug('see-saw restart %s improved the value to %.10f', r, value)
            best = r
    values = tuple(run_[0] for run_ in runs)
    previous = max(values[:-1]) if restarts > 1 else -np.inf
    value, a_povms, b_povms, history = runs[best]
    return BellResult(value=value,
                      a_povms=a_povms,
                      b_povms=b_povms,
                      restart_values=values,
                      best_restart=best,
                      possibly_not_converged=bool(values[-1] > previous + tol),
                      history=history)
