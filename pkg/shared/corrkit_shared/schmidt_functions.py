'''
Schmidt decomposition, majorization and entropy families on Schmidt vectors.

Usage:
    from corrkit_shared import schmidt_functions
    decomposition = schmidt_functions.schmidt_decompose(psi, cut={1})
    schmidt_functions.entropy_family(decomposition.vector, 2)
'''
import math
import logging
from enum import Enum
from dataclasses import dataclass
from collections import namedtuple

import numpy as np
import scipy.linalg
from scipy.special import entr, logsumexp

from corrkit_shared.errors import (InvalidStateError, DimensionMismatchError,
                                   ConstructionError, UnsupportedRegimeError)
from corrkit_shared.qstate_functions import PureState, STATE_TOL, site_axes

log = logging.getLogger(__name__)

SCHMIDT_CUTOFF = 1e-12
MAJORIZATION_TOL = 1e-10
EQUALITY_TOL = 1e-9
SERIES_RADIUS = 1e-4
# orders used by the consistency checks; 64 stands in for infinity
Q_GRID = (0, 0.5, 1, 2, 64)

SchmidtDecomposition = namedtuple('SchmidtDecomposition', ['vector', 'left', 'right'])


@dataclass(frozen=True)
class SchmidtVector:
    '''Descending probability vector; entries above SCHMIDT_CUTOFF.'''
    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise InvalidStateError('a Schmidt vector needs at least one coefficient')
        if any(c <= SCHMIDT_CUTOFF for c in coeffs):
            raise InvalidStateError(f'Schmidt coefficients must exceed {SCHMIDT_CUTOFF}')
        if any(a < b for a, b in zip(coeffs, coeffs[1:])):
            raise InvalidStateError(f'Schmidt coefficients must be descending, got {coeffs}')
        if abs(math.fsum(coeffs) - 1) > STATE_TOL:
            raise InvalidStateError(f'Schmidt coefficients sum to {math.fsum(coeffs)!r}')
        object.__setattr__(self, 'coeffs', coeffs)

    @property
    def rank(self):
        return len(self.coeffs)

    @classmethod
    def from_values(cls, values, tol=EQUALITY_TOL):
        '''
        Sort values descending, drop entries at or below the cutoff and
        renormalize. The sum must already be 1 within tol.
        '''
        arr = np.asarray(values, dtype=float).reshape(-1)
        if arr.size == 0 or np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise InvalidStateError(f'not a probability vector: {list(values)}')
        if abs(arr.sum() - 1) > tol:
            raise InvalidStateError(f'probabilities sum to {arr.sum()!r}, expected 1')
        arr = np.sort(arr[arr > SCHMIDT_CUTOFF])[::-1]
        return cls(tuple(arr / arr.sum()))

    def to_list(self):
        return list(self.coeffs)


def _coeff_array(v):
    if isinstance(v, SchmidtVector):
        return np.asarray(v.coeffs)
    return np.sort(np.asarray(v, dtype=float).reshape(-1))[::-1]


def schmidt_decompose(psi, cut):
    '''
    Schmidt decomposition of a pure state across (cut | complement).

    Input:
        - psi: (PureState)
        - cut: (iterable of int) nonempty strict subset of the sites

    Returns SchmidtDecomposition(vector, left, right) where left is
    d_cut x r and right is d_rest x r, so that
    psi = sum_i sqrt(lambda_i) left[:, i] ⊗ right[:, i] with the cut sites
    first, in their original order.
    '''
    dims = psi.dims
    n = len(dims)
    cut = sorted(set(int(s) for s in cut))
    if not cut or len(cut) >= n or cut[0] < 1 or cut[-1] > n:
        raise DimensionMismatchError(f'cut {cut} is not a nonempty strict subset of 1..{n}')
    rest = [s for s in range(1, n + 1) if s not in cut]
    axes = site_axes(dims)
    perm = [axes.index(s - 1) for s in cut + rest if dims[s - 1] > 1]
    d_cut = math.prod(dims[s - 1] for s in cut)
    d_rest = math.prod(dims[s - 1] for s in rest)
    tensor = psi.vector.reshape([dims[i] for i in axes])
    matrix = np.transpose(tensor, perm).reshape(d_cut, d_rest)
    u, s, vh = scipy.linalg.svd(matrix, full_matrices=False)
    coeffs = s ** 2
    keep = coeffs > SCHMIDT_CUTOFF
    vector = SchmidtVector(tuple(coeffs[keep] / coeffs[keep].sum()))
    return SchmidtDecomposition(vector, u[:, keep], vh[keep].T)


def pure_state_from_density(rho, tol=STATE_TOL):
    '''Leading eigenvector of a rank-one density operator.'''
    eigs, vecs = scipy.linalg.eigh(rho.matrix)
    if eigs[-1] < 1 - tol:
        raise UnsupportedRegimeError(
            f'state is mixed (largest eigenvalue {eigs[-1]:.12f})')
    return PureState(rho.factorization, vecs[:, -1])


def majorizes(a, b, tol=MAJORIZATION_TOL):
    '''
    True iff a majorizes b: every partial sum of sorted a is at least the
    matching partial sum of sorted b, minus tol. Shorter vectors are
    zero-padded.
    '''
    a = _coeff_array(a)
    b = _coeff_array(b)
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - tol))


def entropy_family(v, q):
    '''
    Renyi entropy of order q in nats.

    q = 0 gives ln r, q = 1 the Shannon entropy and q = inf the
    min-entropy -ln(lambda_max). Within SERIES_RADIUS of 1 the value is the
    first-order expansion H_1 - (q - 1)/2 * Var(ln lambda).
    '''
    if q is None or np.isnan(q) or q < 0:
        raise ConstructionError(f'entropy order must be >= 0, got {q}')
    lam = _coeff_array(v)
    lam = lam[lam > 0]
    if q == 0:
        return float(np.log(lam.size))
    if np.isinf(q):
        return float(-np.log(lam.max()))
    shannon = float(entr(lam).sum())
    if abs(q - 1) < SERIES_RADIUS:
        log_lam = np.log(lam)
        variance = float(np.sum(lam * (log_lam + shannon) ** 2))
        return shannon - (q - 1) / 2 * variance
    return float(logsumexp(q * np.log(lam)) / (1 - q))


def pure_convertible_locc(source, target):
    '''
    Whether the pure state with Schmidt vector source can be turned into the
    one with Schmidt vector target deterministically by local operations and
    one-way classical communication: source must be majorized by target.
    '''
    return majorizes(target, source)


class Prec1Class(Enum):
    EQUALLY_CORRELATED = 'EquallyCorrelated'
    INCOMPARABLE = 'Incomparable'
    # unequal Schmidt ranks: no classification is known
    UNDETERMINED = 'Undetermined'


def classify_prec1_pure(a, b):
    '''
    Order two pure bipartite states under the deterministic-local-operation
    preorder. With equal Schmidt ranks the states are either equally
    correlated (identical coefficients) or incomparable.
    '''
    a = _coeff_array(a)
    b = _coeff_array(b)
    if a.size != b.size:
        return Prec1Class.UNDETERMINED
    if np.all(np.abs(a - b) <= EQUALITY_TOL):
        return Prec1Class.EQUALLY_CORRELATED
    return Prec1Class.INCOMPARABLE
