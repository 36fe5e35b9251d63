'''
Correlation and entanglement measures, and the registry the harness and the
command line use to look them up by name.

Measures:
    - total_mutual_information: sum_n S(rho_n) - S(rho)
    - entanglement_of_formation: exact in four regimes (pure, product across
        the cut, maximally entangled block form, two qubits); anything else
        raises UnsupportedRegimeError
    - pairwise_monotone / bipartition_monotone: E_f of a two-site reduction
        or of a bipartition
    - pure_entropy_monotone: Renyi entropy of the Schmidt vector of a pure
        state
    - bell_monotone: see-saw lower bound on B(rho)

Registry names:
    I, total_mutual_information, ef, pairwise:X,Y, bipartition:S1,S2,...,
    entropy:q=Q, bell:CHSH, bell:tilted_chsh, bell:path/to/functional.json
'''
import math
import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np
import scipy.linalg
from scipy.special import entr

from corrkit_shared.errors import (DimensionMismatchError, UnsupportedRegimeError,
                                   ConstructionError)
from corrkit_shared import qstate_functions as qs
from corrkit_shared import schmidt_functions as sf
from corrkit_shared import bell_functions as bf

log = logging.getLogger(__name__)

PRODUCT_TOL = 1e-10
BLOCK_TOL = 1e-8

SIGMA_Y = np.array([[0, -1j], [1j, 0]])

# entanglement measures also hold under one-way protocols; mutual information does not
ENTANGLEMENT_CLAIMS = frozenset({'1', '2', '3', 'oneway'})
PAIRWISE_CLAIMS = frozenset({'1', 'oneway'})


### Mutual information --------------------------------------------------------

def total_mutual_information(rho):
    '''I(rho) = sum_n S(rho^(n)) - S(rho), in nats.'''
    if rho.n_sites < 2:
        raise DimensionMismatchError('mutual information needs at least 2 sites')
    marginals = sum(qs.von_neumann_entropy(qs.partial_trace(rho, {n}))
                    for n in range(1, rho.n_sites + 1))
    return float(marginals - qs.von_neumann_entropy(rho))


def negated_mutual_information(rho):
    '''Test fixture: -I(rho) increases under local operations.'''
    return -total_mutual_information(rho)


### Entanglement of formation -------------------------------------------------

def _split(rho, cut):
    n = rho.n_sites
    cut = sorted(set(int(s) for s in cut))
    if not cut or len(cut) >= n or cut[0] < 1 or cut[-1] > n:
        raise DimensionMismatchError(f'cut {cut} is not a nonempty strict subset of 1..{n}')
    rest = [s for s in range(1, n + 1) if s not in cut]
    return cut, rest


def bipartite_matrix(rho, cut):
    '''
    Reorder rho's sites as (cut, complement) and group them.

    Returns (matrix, d_cut, d_rest)
    '''
    cut, rest = _split(rho, cut)
    dims = rho.dims
    axes = qs.site_axes(dims)
    shape = [dims[i] for i in axes]
    perm = [axes.index(s - 1) for s in cut + rest if dims[s - 1] > 1]
    m = len(axes)
    tensor = np.transpose(rho.matrix.reshape(shape + shape), perm + [p + m for p in perm])
    d_cut = math.prod(dims[s - 1] for s in cut)
    d_rest = math.prod(dims[s - 1] for s in rest)
    return tensor.reshape(d_cut * d_rest, d_cut * d_rest), d_cut, d_rest


def _is_product(matrix, d_cut, d_rest):
    t = matrix.reshape(d_cut, d_rest, d_cut, d_rest)
    rho_a = np.einsum('ajbj->ab', t)
    rho_b = np.einsum('ajak->jk', t)
    return np.linalg.norm(matrix - np.kron(rho_a, rho_b)) <= PRODUCT_TOL


def is_maximally_entangled_form(matrix, d_cut, d_rest, tol=BLOCK_TOL):
    '''
    Whether a bipartite state is a mixture of maximally entangled states
    with orthogonal supports on the larger side: every pair of support
    vectors v_i, v_j satisfies tr_big |v_i><v_j| = delta_ij I / d_small.
    The test does not depend on the chosen local bases.
    '''
    eigs, vecs = scipy.linalg.eigh(matrix)
    support = vecs[:, eigs > qs.CLIP_TOL].reshape(d_cut, d_rest, -1)
    r = support.shape[2]
    if d_cut <= d_rest:
        d_small = d_cut
        overlaps = np.einsum('aki,bkj->ijab', support, support.conj())
    else:
        d_small = d_rest
        overlaps = np.einsum('kai,kbj->ijab', support, support.conj())
    target = np.einsum('ij,ab->ijab', np.eye(r), np.eye(d_small) / d_small)
    return np.linalg.norm(overlaps - target) <= tol


def _psd_sqrt(matrix):
    eigs, vecs = scipy.linalg.eigh(matrix)
    return (vecs * np.sqrt(np.clip(eigs, 0, None))) @ vecs.conj().T


def concurrence(matrix):
    '''
    Two-qubit concurrence (Wootters): max(0, l1 - l2 - l3 - l4) with l the
    descending square roots of the eigenvalues of sqrt(rho) rho~ sqrt(rho),
    rho~ = (Y ⊗ Y) rho* (Y ⊗ Y).
    '''
    yy = np.kron(SIGMA_Y, SIGMA_Y)
    rho_tilde = yy @ matrix.conj() @ yy
    sqrt_rho = _psd_sqrt(matrix)
    m = sqrt_rho @ rho_tilde @ sqrt_rho
    lam = np.sqrt(np.clip(scipy.linalg.eigvalsh((m + m.conj().T) / 2), 0, None))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def two_qubit_formation(matrix):
    c = min(concurrence(matrix), 1.0)
    x = (1 + np.sqrt(1 - c ** 2)) / 2
    return float(entr(x) + entr(1 - x))


def entanglement_of_formation(rho, cut):
    '''
    E_f across (cut | complement), in nats.

    Regimes, in order:
        - pure states: entropy of the reduced state
        - products across the cut: 0
        - two qubits across the cut: Wootters' concurrence formula
        - mixtures of maximally entangled states with orthogonal supports on
            the larger side: ln d_small
    Other inputs raise UnsupportedRegimeError.
    '''
    matrix, d_cut, d_rest = bipartite_matrix(rho, cut)
    if rho.is_pure():
        cut, _ = _split(rho, cut)
        return qs.von_neumann_entropy(qs.partial_trace(rho, cut))
    if _is_product(matrix, d_cut, d_rest):
        return 0.0
    if d_cut == 2 and d_rest == 2:
        return two_qubit_formation(matrix)
    if is_maximally_entangled_form(matrix, d_cut, d_rest):
        return float(np.log(min(d_cut, d_rest)))
    raise UnsupportedRegimeError(
        f'no exact entanglement of formation for a mixed {d_cut} x {d_rest} state '
        'outside the supported regimes')


def pairwise_monotone(rho, x, y):
    '''E_f of the two-site reduction rho_{x,y}.'''
    if x == y:
        raise DimensionMismatchError('pairwise_monotone needs two distinct sites')
    reduced = qs.partial_trace(rho, {x, y})
    return entanglement_of_formation(reduced, {1})


def bipartition_monotone(rho, part):
    return entanglement_of_formation(rho, part)


def pure_entropy_monotone(rho, q, cut=(1,)):
    '''Renyi entropy of order q of the Schmidt vector; pure states only.'''
    psi = sf.pure_state_from_density(rho)
    return sf.entropy_family(sf.schmidt_decompose(psi, cut).vector, q)


def bell_monotone(rho, functional, restarts=8, iters=200, tol=bf.DEFAULT_TOL, seed=0):
    return bf.bell_value(rho, functional, restarts=restarts, iters=iters,
                         tol=tol, seed=seed).value


### Registry ------------------------------------------------------------------

@dataclass(frozen=True)
class MonotoneHandle:
    '''
    A named measure. claims lists the suites ('1', '2', '3', 'oneway') the measure
    is known to satisfy; floor is its value on product states.
    '''
    name: str
    evaluator: object
    claims: frozenset
    floor: float = 0.0
    optimizer_backed: bool = False
    pure_only: bool = False
    schmidt_functional: bool = False
    min_sites: int = 2
    description: str = field(default='', compare=False)

    def __call__(self, rho):
        return self.evaluator(rho)


def _bell_handle(functional, seesaw=None):
    seesaw = seesaw or {}
    evaluator = partial(bell_monotone, functional=functional,
                        restarts=seesaw.get('restarts', 8),
                        iters=seesaw.get('iters', 200),
                        tol=seesaw.get('tol', bf.DEFAULT_TOL),
                        seed=seesaw.get('seed', 0))
    return MonotoneHandle(name=f'bell:{functional.name}',
                          evaluator=evaluator,
                          claims=frozenset({'1'}),
                          floor=functional.local_bound if functional.local_bound is not None else 0.0,
                          optimizer_backed=True,
                          description='see-saw lower bound on the Bell value')


def _entropy_handle(q):
    return MonotoneHandle(name=f'entropy:q={q:g}',
                          evaluator=partial(pure_entropy_monotone, q=q),
                          claims=frozenset({'2', '3'}) if q <= 1 else frozenset({'3'}),
                          pure_only=True,
                          schmidt_functional=True,
                          description='Renyi entropy of the Schmidt vector')


def _sites(text):
    try:
        return tuple(int(s) for s in text.split(','))
    except ValueError as e:
        raise ConstructionError(f'cannot parse site list {text!r}') from e


def monotone_registry(seesaw=None):
    '''The built-in handles, each with its claimed conditions.'''
    handles = [
        MonotoneHandle(name='total_mutual_information',
                       evaluator=total_mutual_information,
                       claims=frozenset({'1', '2', '3'}),
                       description='sum of marginal entropies minus joint entropy'),
        MonotoneHandle(name='ef',
                       evaluator=partial(entanglement_of_formation, cut=(1,)),
                       claims=ENTANGLEMENT_CLAIMS,
                       schmidt_functional=True,
                       description='entanglement of formation, site 1 | rest'),
        MonotoneHandle(name='pairwise:1,2',
                       evaluator=partial(pairwise_monotone, x=1, y=2),
                       claims=PAIRWISE_CLAIMS,
                       description='E_f of the reduction to sites 1 and 2'),
        MonotoneHandle(name='bipartition:1',
                       evaluator=partial(bipartition_monotone, part=(1,)),
                       claims=ENTANGLEMENT_CLAIMS,
                       description='E_f across site 1 | rest'),
    ]
    handles.extend(_entropy_handle(q) for q in (0, 0.5, 1, 2, np.inf))
    handles.append(_bell_handle(bf.chsh(), seesaw))
    handles.append(_bell_handle(bf.tilted_chsh(1.0), seesaw))
    return handles


def resolve_monotone(name, seesaw=None):
    '''
    Look up or build a handle by name.

    Input:
        - name: (str) registry name or parametrized form
        - seesaw: (dict, optional) restarts/iters/tol/seed for bell handles

    Returns a MonotoneHandle
    '''
    name = name.strip()
    if name in ('I', 'total_mutual_information'):
        return monotone_registry()[0]
    if name in ('ef', 'E_f', 'entanglement_of_formation'):
        return monotone_registry()[1]
    if name == 'neg-I-fixture':
        return MonotoneHandle(name=name, evaluator=negated_mutual_information,
                              claims=frozenset(), floor=0.0,
                              description='negated mutual information (test fixture)')
    kind, _, arg = name.partition(':')
    if kind == 'pairwise':
        sites = _sites(arg)
        if len(sites) != 2 or sites[0] == sites[1]:
            raise ConstructionError(f'pairwise needs two distinct sites, got {arg!r}')
        return MonotoneHandle(name=f'pairwise:{sites[0]},{sites[1]}',
                              evaluator=partial(pairwise_monotone, x=sites[0], y=sites[1]),
                              claims=PAIRWISE_CLAIMS,
                              min_sites=max(sites))
    if kind == 'bipartition':
        part = _sites(arg)
        return MonotoneHandle(name=f'bipartition:{",".join(map(str, part))}',
                              evaluator=partial(bipartition_monotone, part=part),
                              claims=ENTANGLEMENT_CLAIMS,
                              min_sites=max(max(part), 2))
    if kind == 'entropy':
        key, _, value = arg.partition('=')
        if key != 'q':
            raise ConstructionError(f'entropy monotones are named entropy:q=<order>, got {name!r}')
        try:
            q = float(value)
        except ValueError as e:
            raise ConstructionError(f'cannot parse entropy order {value!r}') from e
        if np.isnan(q) or q < 0:
            raise ConstructionError(f'entropy order must be >= 0, got {value}')
        return _entropy_handle(q)
    if kind == 'bell':
        if arg.lower() == 'chsh':
            functional = bf.chsh()
        elif arg.startswith('tilted_chsh'):
            _, _, alpha = arg.partition('=')
            try:
                functional = bf.tilted_chsh(float(alpha) if alpha else 1.0)
            except ValueError as e:
                raise ConstructionError(f'cannot parse tilt {alpha!r}') from e
        elif arg.endswith('.json'):
            functional = bf.load_functional(arg)
        else:
            raise ConstructionError(f'unknown Bell functional {arg!r}')
        return _bell_handle(functional, seesaw)
    raise ConstructionError(f'unknown monotone {name!r}')
