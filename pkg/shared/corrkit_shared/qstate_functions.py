'''
Core state model for corrkit, including:

1. Tensor-factorized density operators and pure states
2. Local channels and local measurements acting on one site
3. Partial trace, von Neumann entropy and purification
4. Seeded sampling of states, channels and measurements
5. JSON encoding of states and operations

Sites are 1-indexed. Every value is immutable after construction and every
operation is a pure function of its inputs; randomness only enters through
explicit seeds.
'''
import json
import math
import logging
from dataclasses import dataclass
from collections import namedtuple

import numpy as np
import scipy.linalg
from scipy.special import entr

from corrkit_shared.errors import (InvalidStateError, DimensionMismatchError,
                                   ConstructionError)

log = logging.getLogger(__name__)

STATE_TOL = 1e-10
CLIP_TOL = 1e-12
P_FLOOR = 1e-12
SOFT_MAX_DIM = 64
HARD_MAX_DIM = 4096

# probability and post-measurement state; state is None below P_FLOOR
MeasurementOutcome = namedtuple('MeasurementOutcome', ['probability', 'state'])


def _readonly(array):
    array = np.array(array, dtype=complex)
    array.flags.writeable = False
    return array


### Domain types --------------------------------------------------------------

@dataclass(frozen=True)
class HilbertFactorization:
    '''Ordered local dimensions d_1..d_N of a tensor product space.'''
    dims: tuple

    def __post_init__(self):
        try:
            dims = tuple(int(d) for d in self.dims)
        except (TypeError, ValueError) as e:
            raise InvalidStateError(f'dims must be integers, got {self.dims}') from e
        if not dims:
            raise InvalidStateError('a factorization needs at least one site')
        if any(d < 1 for d in dims):
            raise InvalidStateError(f'local dimensions must be >= 1, got {dims}')
        total = math.prod(dims)
        if total > HARD_MAX_DIM:
            raise DimensionMismatchError(
                f'total dimension {total} exceeds the dense limit {HARD_MAX_DIM}')
        if total > SOFT_MAX_DIM:
            log.debug('total dimension %s is above the desk-scale guideline', total)
        object.__setattr__(self, 'dims', dims)

    @property
    def n_sites(self):
        return len(self.dims)

    @property
    def total(self):
        return math.prod(self.dims)

    def check_site(self, site):
        if not 1 <= site <= self.n_sites:
            raise DimensionMismatchError(
                f'site {site} is not in 1..{self.n_sites} for dims {self.dims}')

    def replace(self, site, dim):
        '''Factorization with site's dimension swapped for dim.'''
        self.check_site(site)
        dims = list(self.dims)
        dims[site - 1] = dim
        return HilbertFactorization(tuple(dims))


def _factorization(dims):
    if isinstance(dims, HilbertFactorization):
        return dims
    return HilbertFactorization(tuple(dims))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    '''
    Hermitian, unit-trace, positive matrix attached to a factorization.

    The stored matrix is hermitized and read-only.
    '''
    factorization: HilbertFactorization
    matrix: np.ndarray

    def __post_init__(self):
        factorization = _factorization(self.factorization)
        matrix = np.asarray(self.matrix, dtype=complex)
        d = factorization.total
        if matrix.shape != (d, d):
            raise DimensionMismatchError(
                f'matrix shape {matrix.shape} does not match dims {factorization.dims}')
        if not np.all(np.isfinite(matrix)):
            raise InvalidStateError('matrix has non-finite entries')
        herm_dev = np.max(np.abs(matrix - matrix.conj().T))
        if herm_dev > STATE_TOL:
            raise InvalidStateError(f'matrix is not Hermitian (deviation {herm_dev:.3e})')
        matrix = (matrix + matrix.conj().T) / 2
        trace = np.trace(matrix).real
        if abs(trace - 1) > STATE_TOL:
            raise InvalidStateError(f'trace is {trace!r}, expected 1')
        min_eig = scipy.linalg.eigvalsh(matrix)[0]
        if min_eig < -STATE_TOL:
            raise InvalidStateError(f'matrix is not positive (min eigenvalue {min_eig:.3e})')
        object.__setattr__(self, 'factorization', factorization)
        object.__setattr__(self, 'matrix', _readonly(matrix))

    @property
    def dims(self):
        return self.factorization.dims

    @property
    def n_sites(self):
        return self.factorization.n_sites

    def eigenvalues(self):
        '''Ascending eigenvalues.'''
        return scipy.linalg.eigvalsh(self.matrix)

    def is_pure(self, tol=STATE_TOL):
        return self.eigenvalues()[-1] >= 1 - tol


@dataclass(frozen=True, eq=False)
class PureState:
    '''Unit vector attached to a factorization.'''
    factorization: HilbertFactorization
    vector: np.ndarray

    def __post_init__(self):
        factorization = _factorization(self.factorization)
        vector = np.asarray(self.vector, dtype=complex).reshape(-1)
        if vector.shape != (factorization.total,):
            raise DimensionMismatchError(
                f'vector length {vector.size} does not match dims {factorization.dims}')
        norm = np.linalg.norm(vector)
        if abs(norm - 1) > STATE_TOL:
            raise InvalidStateError(f'vector norm is {norm!r}, expected 1')
        object.__setattr__(self, 'factorization', factorization)
        object.__setattr__(self, 'vector', _readonly(vector))

    @property
    def dims(self):
        return self.factorization.dims

    def density(self):
        return DensityOperator(self.factorization,
                               np.outer(self.vector, self.vector.conj()))


def _completeness_residual(terms):
    d_in = terms[0].shape[1]
    total = sum(k.conj().T @ k for k in terms)
    return np.linalg.norm(total - np.eye(d_in))


def _kraus_matrix(k):
    k = np.array(k, dtype=complex)
    if k.ndim != 2 or 0 in k.shape:
        raise InvalidStateError(f'Kraus operators must be nonempty matrices, got shape {k.shape}')
    return _readonly(k)


@dataclass(frozen=True, eq=False)
class LocalChannel:
    '''Deterministic operation on one site, given by complete Kraus operators.'''
    site: int
    kraus: tuple

    def __post_init__(self):
        kraus = tuple(_kraus_matrix(k) for k in self.kraus)
        if not kraus:
            raise InvalidStateError('a channel needs at least one Kraus operator')
        if len({k.shape for k in kraus}) != 1:
            raise DimensionMismatchError('Kraus operators of a channel must share one shape')
        if int(self.site) < 1:
            raise DimensionMismatchError(f'site must be >= 1, got {self.site}')
        residual = _completeness_residual(kraus)
        if residual > STATE_TOL:
            raise InvalidStateError(f'Kraus operators are not complete (residual {residual:.3e})')
        object.__setattr__(self, 'site', int(self.site))
        object.__setattr__(self, 'kraus', kraus)

    @property
    def in_dim(self):
        return self.kraus[0].shape[1]

    @property
    def out_dim(self):
        return self.kraus[0].shape[0]


@dataclass(frozen=True, eq=False)
class LocalMeasurement:
    '''
    Measurement on one site. Outcome q holds t_q Kraus operators that share
    an output dimension; output dimensions may differ between outcomes.
    '''
    site: int
    outcomes: tuple

    def __post_init__(self):
        outcomes = tuple(tuple(_kraus_matrix(k) for k in terms)
                         for terms in self.outcomes)
        if not outcomes or any(not terms for terms in outcomes):
            raise InvalidStateError('every outcome needs at least one Kraus operator')
        if len({k.shape[1] for terms in outcomes for k in terms}) != 1:
            raise DimensionMismatchError('all Kraus operators must share the input dimension')
        for terms in outcomes:
            if len({k.shape[0] for k in terms}) != 1:
                raise DimensionMismatchError(
                    'Kraus operators of one outcome must share the output dimension')
        if int(self.site) < 1:
            raise DimensionMismatchError(f'site must be >= 1, got {self.site}')
        residual = _completeness_residual([k for terms in outcomes for k in terms])
        if residual > STATE_TOL:
            raise InvalidStateError(f'Kraus operators are not complete (residual {residual:.3e})')
        object.__setattr__(self, 'site', int(self.site))
        object.__setattr__(self, 'outcomes', outcomes)

    @property
    def in_dim(self):
        return self.outcomes[0][0].shape[1]

    @property
    def out_dims(self):
        return tuple(terms[0].shape[0] for terms in self.outcomes)

    @property
    def n_outcomes(self):
        return len(self.outcomes)

    @property
    def terms_per_outcome(self):
        return tuple(len(terms) for terms in self.outcomes)

    @property
    def efficient(self):
        return all(t == 1 for t in self.terms_per_outcome)


### Operations ----------------------------------------------------------------

def site_axes(dims):
    '''Indices of the sites of dimension > 1; one-dimensional sites get no array axis.'''
    return [i for i in range(len(dims)) if dims[i] > 1]


def _conjugate_site(matrix, dims, site, op):
    '''
    Return (I_< ⊗ op ⊗ I_>) matrix (I_< ⊗ op ⊗ I_>)^† without forming the
    embedded operator.
    '''
    left = math.prod(dims[:site - 1])
    right = math.prod(dims[site:])
    d_in = dims[site - 1]
    tensor = matrix.reshape(left, d_in, right, left, d_in, right)
    out = np.einsum('ai,lirmjs,bj->larmbs', op, tensor, op.conj(), optimize=True)
    size = left * op.shape[0] * right
    return out.reshape(size, size)


def _check_operation_fits(rho, site, in_dim):
    rho.factorization.check_site(site)
    if in_dim != rho.dims[site - 1]:
        raise DimensionMismatchError(
            f'operation input dimension {in_dim} does not match site {site} '
            f'of dims {rho.dims}')


def tensor(a, b):
    '''Kronecker product of two states; factorizations are concatenated.'''
    return DensityOperator(a.dims + b.dims, np.kron(a.matrix, b.matrix))


def partial_trace(rho, keep):
    '''
    Reduce rho to the sites in keep (1-indexed), tracing out all others.

    Input:
        - rho: (DensityOperator)
        - keep: (iterable of int) nonempty set of sites to keep

    Returns a DensityOperator whose dims are the kept dims in original order
    '''
    keep = sorted(set(int(s) for s in keep))
    if not keep:
        raise DimensionMismatchError('partial_trace needs a nonempty set of kept sites')
    for s in keep:
        rho.factorization.check_site(s)
    dims = rho.dims
    sites = site_axes(dims)
    shape = [dims[i] for i in sites]
    m = len(sites)
    kept = [j for j, i in enumerate(sites) if i + 1 in keep]
    traced = [j for j, i in enumerate(sites) if i + 1 not in keep]
    kept_dims = tuple(dims[s - 1] for s in keep)
    size = math.prod(kept_dims)
    rest = rho.factorization.total // size
    # kept row axes, traced row axes, then the same for columns
    order = kept + traced + [m + j for j in kept] + [m + j for j in traced]
    blocks = rho.matrix.reshape(shape + shape).transpose(order).reshape(size, rest, size, rest)
    return DensityOperator(kept_dims, np.einsum('atbt->ab', blocks))


def clipped_spectrum(matrix):
    '''
    Eigenvalues of a density matrix with small negative values set to zero
    and renormalized. Eigenvalues below -STATE_TOL mean an invalid state.
    '''
    eigs = scipy.linalg.eigvalsh(matrix)
    if eigs[0] < -STATE_TOL:
        raise InvalidStateError(f'negative eigenvalue {eigs[0]:.3e}')
    eigs = np.clip(eigs, 0.0, None)
    return eigs / eigs.sum()


def von_neumann_entropy(rho):
    '''S(rho) = -sum(lambda ln lambda) in nats.'''
    return float(entr(clipped_spectrum(rho.matrix)).sum())


def apply_channel(rho, ch):
    '''
    Apply a deterministic local operation: Lambda(rho) = sum_q K_q rho K_q^†,
    each K_q embedded on ch.site. The site's dimension becomes ch.out_dim.
    '''
    _check_operation_fits(rho, ch.site, ch.in_dim)
    out = sum(_conjugate_site(rho.matrix, rho.dims, ch.site, k) for k in ch.kraus)
    return DensityOperator(rho.factorization.replace(ch.site, ch.out_dim), out)


def measure(rho, m):
    '''
    Perform a local measurement.

    Returns a list of MeasurementOutcome(probability, state), one per outcome
    in order. Outcomes with probability below P_FLOOR carry state None and
    are excluded from monotone evaluation downstream.
    '''
    _check_operation_fits(rho, m.site, m.in_dim)
    results = []
    for terms, out_dim in zip(m.outcomes, m.out_dims):
        unnormalized = sum(_conjugate_site(rho.matrix, rho.dims, m.site, k)
                           for k in terms)
        p = float(np.trace(unnormalized).real)
        if p < P_FLOOR:
            results.append(MeasurementOutcome(max(p, 0.0), None))
            continue
        state = DensityOperator(rho.factorization.replace(m.site, out_dim),
                                unnormalized / p)
        results.append(MeasurementOutcome(p, state))
    return results


def compress_site(rho, site, op):
    '''
    Apply a single operator op on site and renormalize. Used to move a state
    supported on a subspace back onto a smaller space (op is the adjoint of
    the embedding isometry), so the trace is preserved up to rounding.
    '''
    _check_operation_fits(rho, site, op.shape[1])
    out = _conjugate_site(rho.matrix, rho.dims, site, np.asarray(op, dtype=complex))
    trace = np.trace(out).real
    if trace < P_FLOOR:
        raise InvalidStateError('state has no weight on the compressed subspace')
    return DensityOperator(rho.factorization.replace(site, op.shape[0]), out / trace)


def purify(rho):
    '''
    Purify rho with an ancilla appended as a new last site:
    |psi> = sum_p sqrt(mu_p) |p> ⊗ |p'>, ancilla dimension = rank(rho).
    Eigenvalues at or below CLIP_TOL do not count toward the rank.
    '''
    eigs, vecs = scipy.linalg.eigh(rho.matrix)
    if eigs[0] < -STATE_TOL:
        raise InvalidStateError(f'negative eigenvalue {eigs[0]:.3e}')
    support = eigs > CLIP_TOL
    weights = eigs[support] / eigs[support].sum()
    # largest weight first
    amplitudes = (vecs[:, support] * np.sqrt(weights))[:, ::-1]
    rank = amplitudes.shape[1]
    return PureState(rho.dims + (rank,), amplitudes.reshape(-1))


### Seeded sampling -----------------------------------------------------------

def _complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def haar_isometry(rng, rows, cols):
    '''Haar-random isometry (rows x cols, rows >= cols) from a QR decomposition.'''
    if rows < cols:
        raise ConstructionError(f'an isometry needs rows >= cols, got {rows} x {cols}')
    q, r = scipy.linalg.qr(_complex_gaussian(rng, (rows, cols)), mode='economic')
    diag = np.diag(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def sample_state(dims, rank, seed):
    '''Random state G G^†/tr with G a seeded d x rank complex Gaussian matrix.'''
    factorization = _factorization(dims)
    d = factorization.total
    if not 1 <= rank <= d:
        raise ConstructionError(f'rank must be in 1..{d}, got {rank}')
    rng = np.random.default_rng(seed)
    g = _complex_gaussian(rng, (d, rank))
    m = g @ g.conj().T
    return DensityOperator(factorization, m / np.trace(m).real)


def sample_pure_state(dims, seed):
    factorization = _factorization(dims)
    rng = np.random.default_rng(seed)
    v = _complex_gaussian(rng, factorization.total)
    return PureState(factorization, v / np.linalg.norm(v))


def sample_local_channel(dims, site, out_dim, n_kraus, seed):
    '''
    Random channel on site: the block rows of a Haar isometry of shape
    (n_kraus * out_dim) x d_site, so completeness holds by construction.
    '''
    factorization = _factorization(dims)
    factorization.check_site(site)
    d_in = factorization.dims[site - 1]
    if n_kraus < 1 or out_dim < 1:
        raise ConstructionError('n_kraus and out_dim must be >= 1')
    if n_kraus * out_dim < d_in:
        raise ConstructionError(
            f'{n_kraus} Kraus operators of output dim {out_dim} cannot be complete '
            f'on a {d_in}-dimensional site')
    iso = haar_isometry(np.random.default_rng(seed), n_kraus * out_dim, d_in)
    kraus = tuple(iso[q * out_dim:(q + 1) * out_dim] for q in range(n_kraus))
    return LocalChannel(site, kraus)


def sample_local_unitary(dims, site, seed):
    d = _factorization(dims).dims[site - 1]
    return sample_local_channel(dims, site, d, 1, seed)


def sample_local_measurement(dims, site, n_outcomes, t_q, seed, out_dims=None):
    '''
    Random measurement on site with n_outcomes outcomes.

    Input:
        - t_q: (int or list of int) Kraus terms per outcome
        - out_dims: (list of int, optional) output dimension per outcome,
            defaults to the site dimension

    Returns a LocalMeasurement
    '''
    factorization = _factorization(dims)
    factorization.check_site(site)
    d_in = factorization.dims[site - 1]
    if n_outcomes < 1:
        raise ConstructionError('a measurement needs at least one outcome')
    terms = [t_q] * n_outcomes if np.isscalar(t_q) else list(t_q)
    out_dims = [d_in] * n_outcomes if out_dims is None else list(out_dims)
    if len(terms) != n_outcomes or len(out_dims) != n_outcomes:
        raise ConstructionError('t_q and out_dims must have one entry per outcome')
    if min(terms) < 1 or min(out_dims) < 1:
        raise ConstructionError('t_q and output dimensions must be >= 1')
    rows = sum(t * o for t, o in zip(terms, out_dims))
    if rows < d_in:
        raise ConstructionError(
            f'{rows} Kraus rows cannot be complete on a {d_in}-dimensional site')
    iso = haar_isometry(np.random.default_rng(seed), rows, d_in)
    outcomes = []
    start = 0
    for t, o in zip(terms, out_dims):
        block = []
        for _ in range(t):
            block.append(iso[start:start + o])
            start += o
        outcomes.append(tuple(block))
    return LocalMeasurement(site, tuple(outcomes))


### JSON encoding -------------------------------------------------------------

def encode_matrix(m):
    '''Row-major [[[re, im], ...], ...] lists.'''
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidStateError('matrix entries must be [re, im] pairs') from e
    if arr.ndim < 2 or arr.shape[-1] != 2:
        raise InvalidStateError('matrix entries must be [re, im] pairs')
    return arr[..., 0] + 1j * arr[..., 1]


def state_to_dict(state):
    if isinstance(state, PureState):
        return {'dims': list(state.dims),
                'vector': [[float(z.real), float(z.imag)] for z in state.vector]}
    return {'dims': list(state.dims), 'matrix': encode_matrix(state.matrix)}


def state_from_dict(data):
    '''Decode and validate a state; a "vector" entry yields its density operator.'''
    if not isinstance(data, dict) or 'dims' not in data:
        raise InvalidStateError('state JSON needs "dims" and "matrix" (or "vector")')
    if 'matrix' in data:
        return DensityOperator(tuple(data['dims']), decode_matrix(data['matrix']))
    if 'vector' in data:
        vector = decode_matrix([data['vector']])[0]
        return PureState(tuple(data['dims']), vector).density()
    raise InvalidStateError('state JSON needs "matrix" or "vector"')


def operation_to_dict(op):
    if isinstance(op, LocalChannel):
        return {'site': op.site, 'kraus': [encode_matrix(k) for k in op.kraus]}
    return {'site': op.site,
            'outcomes': [[encode_matrix(k) for k in terms] for terms in op.outcomes]}


def operation_from_dict(data):
    '''Decode a LocalChannel ("kraus") or LocalMeasurement ("outcomes").'''
    if not isinstance(data, dict) or 'site' not in data:
        raise InvalidStateError('operation JSON needs "site"')
    if 'kraus' in data:
        return LocalChannel(data['site'], tuple(decode_matrix(k) for k in data['kraus']))
    if 'outcomes' in data:
        return LocalMeasurement(
            data['site'],
            tuple(tuple(decode_matrix(k) for k in terms) for terms in data['outcomes']))
    raise InvalidStateError('operation JSON needs "kraus" or "outcomes"')


def save_state(state, filepath):
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(state_to_dict(state), f)


def load_state(filepath):
    '''Read and validate a state file; any defect raises InvalidStateError.'''
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidStateError(f'cannot read state file {filepath}: {e}') from e
    return state_from_dict(data)
