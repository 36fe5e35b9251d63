'''
Explicit states, channels and measurements:

1. build_mps / collapse_channel: mixtures of maximally entangled states on
   orthogonal blocks of site 2, and the operation that purifies them
2. cyclic_filter: the efficient site-1 measurement that turns a maximally
   entangled state into a state with Schmidt vector lambda in every outcome
3. dilate_measurement / undilate_outcome: a measurement as a deterministic
   flagging channel followed by an efficient projective readout
4. build_npartite_max / check_reductions: the N-partite maximally correlated
   state and the reduced-state conditions for maximal correlation
5. relabel_embed: move a state onto larger (or smaller) local spaces with
   local operations only
6. small fixtures (bell_state, ghz_state, product_state, pure_schmidt_state)

All constructions use computational bases. Block q of site 2 occupies rows
q*d1 .. q*d1 + d1 - 1.
'''
import math
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import scipy.linalg

from corrkit_shared.errors import ConstructionError, InvalidStateError
from corrkit_shared import qstate_functions as qs
from corrkit_shared.qstate_functions import (DensityOperator, PureState, LocalChannel,
                                             LocalMeasurement, STATE_TOL)

log = logging.getLogger(__name__)

REDUCTION_TOL = 1e-8


def _probability_vector(values, name, tol=STATE_TOL):
    arr = np.asarray(values, dtype=float).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ConstructionError(f'{name} must be a nonnegative vector, got {list(values)}')
    if abs(arr.sum() - 1) > tol:
        raise ConstructionError(f'{name} sums to {arr.sum()!r}, expected 1')
    return arr / arr.sum()


@dataclass(frozen=True)
class MpsSpec:
    '''
    d1 <= d2, Q blocks with Q*d1 <= d2 and block weights p. weights are the
    optional Schmidt coefficients of every block state (uniform by default).
    '''
    d1: int
    d2: int
    Q: int
    p: tuple
    weights: tuple = None

    def __post_init__(self):
        d1, d2, Q = int(self.d1), int(self.d2), int(self.Q)
        if d1 < 1 or Q < 1:
            raise ConstructionError('d1 and Q must be >= 1')
        if d1 > d2:
            raise ConstructionError(f'need d1 <= d2, got d1={d1}, d2={d2}')
        if Q * d1 > d2:
            raise ConstructionError(f'{Q} blocks of size {d1} do not fit into d2={d2}')
        p = _probability_vector(self.p, 'p')
        if p.size != Q:
            raise ConstructionError(f'p needs {Q} entries, got {p.size}')
        object.__setattr__(self, 'd1', d1)
        object.__setattr__(self, 'd2', d2)
        object.__setattr__(self, 'Q', Q)
        object.__setattr__(self, 'p', tuple(p))
        if self.weights is not None:
            weights = _probability_vector(self.weights, 'weights')
            if weights.size != d1:
                raise ConstructionError(f'weights need {d1} entries, got {weights.size}')
            object.__setattr__(self, 'weights', tuple(weights))

    @classmethod
    def from_dict(cls, data, tol=1e-9):
        '''Accepts {"d1": .., "d2": .., "Q": .., "p": [..]} with an optional "weights".'''
        try:
            p = _probability_vector(data['p'], 'p', tol)
            weights = data.get('weights')
            if weights is not None:
                weights = _probability_vector(weights, 'weights', tol)
            return cls(data['d1'], data['d2'], data['Q'], tuple(p),
                       None if weights is None else tuple(weights))
        except (KeyError, TypeError) as e:
            raise ConstructionError(f'invalid MPS spec {data}: {e}') from e


def build_mps(spec):
    '''rho = sum_q p_q |q~><q~| with |q~> = sum_i sqrt(w_i) |i> ⊗ |q*d1 + i>.'''
    d1, d2 = spec.d1, spec.d2
    weights = np.full(d1, 1 / d1) if spec.weights is None else np.asarray(spec.weights)
    matrix = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for q, p_q in enumerate(spec.p):
        v = np.zeros(d1 * d2, dtype=complex)
        for i in range(d1):
            v[i * d2 + q * d1 + i] = np.sqrt(weights[i])
        matrix += p_q * np.outer(v, v.conj())
    return DensityOperator((d1, d2), matrix)


def collapse_channel(spec):
    '''
    Site-2 channel mapping block q onto block 0, plus the projector onto the
    rows outside all blocks when Q*d1 < d2.
    '''
    d1, d2 = spec.d1, spec.d2
    kraus = []
    for q in range(spec.Q):
        k = np.zeros((d2, d2), dtype=complex)
        for i in range(d1):
            k[i, q * d1 + i] = 1
        kraus.append(k)
    covered = spec.Q * d1
    if covered < d2:
        remainder = np.zeros((d2, d2), dtype=complex)
        remainder[covered:, covered:] = np.eye(d2 - covered)
        kraus.append(remainder)
    return LocalChannel(2, tuple(kraus))


def cyclic_filter(d1, lam, site=1):
    '''
    Efficient measurement with d1 outcomes,
    K_q = sum_i sqrt(lambda_i) |i><(i + q - 1) mod d1 + 1|, q = 1..d1
    (1-indexed basis labels).
    '''
    lam = getattr(lam, 'coeffs', lam)
    lam = _probability_vector(lam, 'lambda', 1e-9)
    if lam.size != d1:
        raise ConstructionError(f'lambda needs {d1} entries, got {lam.size}')
    outcomes = []
    for q in range(1, d1 + 1):
        k = np.zeros((d1, d1), dtype=complex)
        for i in range(1, d1 + 1):
            k[i - 1, (i + q - 1) % d1] = np.sqrt(lam[i - 1])
        outcomes.append((k,))
    return LocalMeasurement(site, tuple(outcomes))


def dilate_measurement(m):
    '''
    Split a measurement into a deterministic flagging channel and an
    efficient projective readout.

    The flagging channel has Kraus operators |q> ⊗ K'_{q,s}, where K' is
    K padded with zero rows to D = max_q d'_q; its output space is
    (flag of dim n_outcomes) ⊗ (D-dimensional local space), flag leading,
    so row q*D + j holds flag q and local index j. The readout measures the
    flag with projectors |q><q| ⊗ I_D.

    Returns (flagged: LocalChannel, readout: LocalMeasurement)
    '''
    n_outcomes = m.n_outcomes
    D = max(m.out_dims)
    kraus = []
    for q, terms in enumerate(m.outcomes):
        flag = np.zeros((n_outcomes, 1))
        flag[q] = 1
        for k in terms:
            padded = np.zeros((D, m.in_dim), dtype=complex)
            padded[:k.shape[0]] = k
            kraus.append(np.kron(flag, padded))
    projectors = []
    for q in range(n_outcomes):
        flag = np.zeros((n_outcomes, n_outcomes))
        flag[q, q] = 1
        projectors.append((np.kron(flag, np.eye(D)),))
    return LocalChannel(m.site, tuple(kraus)), LocalMeasurement(m.site, tuple(projectors))


def undilate_outcome(state, m, q):
    '''
    Compress a readout post-state for outcome q (0-indexed) back onto that
    outcome's original output space, discarding the flag and the padding.
    '''
    D = max(m.out_dims)
    d_q = m.out_dims[q]
    isometry = np.zeros((m.n_outcomes * D, d_q), dtype=complex)
    isometry[q * D:q * D + d_q] = np.eye(d_q)
    return qs.compress_site(state, m.site, isometry.conj().T)


def build_npartite_max(dims):
    '''
    sum_k |k>_{1..N-1} ⊗ |k>_N / sqrt(d) with d = prod(d_1..d_{N-1}), where
    |k>_{1..N-1} runs over the product basis of the first N - 1 sites.
    Requires d_N >= d.
    '''
    dims = tuple(int(x) for x in dims)
    if len(dims) < 2:
        raise ConstructionError('the N-partite construction needs N >= 2')
    d = math.prod(dims[:-1])
    if dims[-1] < d:
        raise ConstructionError(
            f'the last site needs dimension >= {d} (product of the others), got {dims[-1]}')
    vector = np.zeros(d * dims[-1], dtype=complex)
    for k in range(d):
        vector[k * dims[-1] + k] = 1 / np.sqrt(d)
    return PureState(dims, vector)


def bell_state(d=2):
    return build_npartite_max((d, d)).density()


def ghz_state(n_sites=3, d=2):
    dims = (d,) * n_sites
    vector = np.zeros(d ** n_sites, dtype=complex)
    for i in range(d):
        vector[sum(i * d ** p for p in range(n_sites))] = 1 / np.sqrt(d)
    return PureState(dims, vector).density()


def product_state(dims):
    '''|0...0>.'''
    factorization = qs.HilbertFactorization(tuple(dims))
    vector = np.zeros(factorization.total, dtype=complex)
    vector[0] = 1
    return PureState(factorization, vector).density()


def pure_schmidt_state(lam, d=None):
    '''sum_i sqrt(lambda_i) |i> ⊗ |i> on [d, d], d defaults to len(lambda).'''
    lam = _probability_vector(getattr(lam, 'coeffs', lam), 'lambda', 1e-9)
    d = lam.size if d is None else int(d)
    if d < lam.size:
        raise ConstructionError(f'dimension {d} is smaller than the Schmidt rank {lam.size}')
    vector = np.zeros(d * d, dtype=complex)
    for i, value in enumerate(lam):
        vector[i * d + i] = np.sqrt(value)
    return PureState((d, d), vector).density()


### Reductions ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ReductionReport:
    rows: pd.DataFrame
    purity_forced: bool
    is_pure: bool
    failing_subset: tuple

    @property
    def passed(self):
        return self.failing_subset is None

    @property
    def verdict(self):
        if self.passed:
            return 'satisfies the maximal-correlation reduction conditions'
        if self.failing_subset == ():
            return 'fails: reductions force purity but the state is mixed'
        return f'fails on subset {set(self.failing_subset)}'


def check_reductions(rho, tol=REDUCTION_TOL):
    '''
    Test every site subset E with prod_{n in E} d_n <= sqrt(d) for a
    maximally mixed reduction (Frobenius deviation <= tol). When the largest
    such subset dimension exceeds sqrt(d/2) the state must also be pure.

    Returns a ReductionReport; failing_subset is () when only the purity
    requirement fails.
    '''
    dims = rho.dims
    d = math.prod(dims)
    sites = range(1, rho.n_sites + 1)
    rows = []
    for size in range(1, rho.n_sites + 1):
        for subset in itertools.combinations(sites, size):
            dim = math.prod(dims[s - 1] for s in subset)
            if dim > math.sqrt(d) or size == rho.n_sites:
                continue
            reduced = qs.partial_trace(rho, subset)
            deviation = float(np.linalg.norm(reduced.matrix - np.eye(dim) / dim))
            rows.append({'subset': ','.join(map(str, subset)),
                         'dim': dim,
                         'deviation': deviation,
                         'passed': deviation <= tol})
    table = pd.DataFrame(rows, columns=['subset', 'dim', 'deviation', 'passed'])
    largest = int(table['dim'].max()) if len(table) else 0
    purity_forced = largest > math.sqrt(d / 2)
    is_pure = bool(rho.is_pure())
    failing = None
    failed_rows = table[~table['passed']] if len(table) else table
    if len(failed_rows):
        failing = tuple(int(s) for s in failed_rows.iloc[0]['subset'].split(','))
    elif purity_forced and not is_pure:
        failing = ()
    return ReductionReport(table, purity_forced, is_pure, failing)


### Relabeling ----------------------------------------------------------------

def local_support(rho, site):
    '''Computational indices of site with nonzero marginal weight.'''
    marginal = qs.partial_trace(rho, {site}).matrix
    return [k for k in range(marginal.shape[0]) if marginal[k, k].real > qs.CLIP_TOL]


def _rotate_onto_eigenbasis(rho, site):
    '''Rotate site so its marginal's eigenvectors, largest first, become |0>, |1>, ...'''
    _, vecs = scipy.linalg.eigh(qs.partial_trace(rho, {site}).matrix)
    u = vecs[:, ::-1].conj().T
    return qs.apply_channel(rho, LocalChannel(site, (u,)))


def _swap_permutation(d, t, support, targets):
    '''
    Permutation unitary on C^d ⊗ C^t sending |k, 0> to |0, m(k)> for k in
    support; the remaining basis vectors are paired up in index order.
    '''
    size = d * t
    mapping = {k * t: targets[i] for i, k in enumerate(support)}
    free_in = [j for j in range(size) if j not in mapping]
    used = set(mapping.values())
    free_out = [j for j in range(size) if j not in used]
    mapping.update(zip(free_in, free_out))
    u = np.zeros((size, size), dtype=complex)
    for src, dst in mapping.items():
        u[dst, src] = 1
    return u


def relabel_embed(rho, target_dims):
    '''
    Move rho onto local spaces of dimensions target_dims, keeping its matrix
    entries. For every site: append an ancilla |0> of the target dimension,
    apply a swap unitary that carries the local support onto the ancilla,
    and trace out the original factor. Support indices keep their labels
    when they fit, otherwise they are packed in order from 0. A site whose
    target is smaller than its diagonal support but not its marginal rank is
    first rotated onto the marginal's eigenbasis.

    Returns a DensityOperator on target_dims
    '''
    target_dims = tuple(int(t) for t in target_dims)
    if len(target_dims) != rho.n_sites:
        raise ConstructionError(f'need {rho.n_sites} target dims, got {len(target_dims)}')
    out = rho
    for site, t in enumerate(target_dims, start=1):
        d = out.dims[site - 1]
        support = local_support(out, site)
        if t < len(support):
            out = _rotate_onto_eigenbasis(out, site)
            support = local_support(out, site)
        if t < len(support):
            raise ConstructionError(
                f'site {site} has a {len(support)}-dimensional support, '
                f'target dimension {t} is too small')
        if t == d and max(support) < t:
            continue
        targets = support if max(support) < t else list(range(len(support)))
        ancilla = np.zeros((t, 1))
        ancilla[0] = 1
        append = LocalChannel(site, (np.kron(np.eye(d), ancilla),))
        swap = LocalChannel(site, (_swap_permutation(d, t, support, targets),))
        discard = LocalChannel(site, tuple(np.kron(row, np.eye(t)) for row in np.eye(d)[:, None, :]))
        out = qs.apply_channel(qs.apply_channel(qs.apply_channel(out, append), swap), discard)
        log.debug('relabeled site %s from dimension %s to %s', site, d, t)
    return out
