"""Index bookkeeping for antisymmetric tensors on R^7.

A k-form is stored as its C(7, k) components on strictly increasing index
tuples, in lexicographic order.  Component ``alpha[I]`` equals the fully
antisymmetric coefficient ``alpha_{i1...ik}`` of the convention
``alpha = (1/k!) alpha_{i1...ik} dx^i1 ^ ... ^ dx^ik``, so ``e^123`` has a
single component equal to 1.

All tables are built once at import time.  Functions broadcast over any
number of leading batch axes.
"""
from itertools import combinations, permutations, product
from math import comb

import numpy as np

DIM = 7

COMBOS = [list(combinations(range(DIM), k)) for k in range(DIM + 1)]
INDEX = [{c: n for n, c in enumerate(cs)} for cs in COMBOS]
NCOMP = [len(cs) for cs in COMBOS]


def perm_sign(seq):
    """Sign of the permutation sorting ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _check_degree(k, lo=0, hi=DIM):
    if not lo <= k <= hi:
        from .errors import DegreeOutOfRange
        raise DegreeOutOfRange(f"form degree {k} outside [{lo}, {hi}]")


# -- canonical <-> full -------------------------------------------------------

def _full_tables(k):
    shape = (DIM,) * k
    src = np.zeros(DIM ** k, dtype=np.intp)
    sgn = np.zeros(DIM ** k)
    for flat, idx in enumerate(product(range(DIM), repeat=k)):
        s = perm_sign(idx)
        if s:
            src[flat] = INDEX[k][tuple(sorted(idx))]
            sgn[flat] = s
    return shape, src, sgn


_FULL = {k: _full_tables(k) for k in range(0, 6)}


def to_full(alpha, k):
    """Expand canonical components (..., C(7,k)) to a full (..., 7,...,7) array."""
    _check_degree(k, 0, 5)
    shape, src, sgn = _FULL[k]
    alpha = np.asarray(alpha)
    full = alpha[..., src] * sgn
    return full.reshape(alpha.shape[:-1] + shape)


def to_canonical(tensor, k):
    """Read the increasing-index components of an antisymmetric (..., 7^k) array."""
    tensor = np.asarray(tensor)
    if k == 0:
        return tensor[..., None]
    idx = tuple(np.array(COMBOS[k]).T)
    lead = tensor.shape[: tensor.ndim - k]
    return tensor[(Ellipsis,) + idx].reshape(lead + (NCOMP[k],))


def basis_form(indices):
    """Canonical components of e^{i1...ik} for 1-based ``indices`` (any order)."""
    idx = [i - 1 for i in indices]
    k = len(idx)
    out = np.zeros(NCOMP[k])
    s = perm_sign(idx)
    if s:
        out[INDEX[k][tuple(sorted(idx))]] = s
    return out


# -- wedge product ------------------------------------------------------------

def _wedge_table(k, l):
    rows = []
    for a, I in enumerate(COMBOS[k]):
        for b, J in enumerate(COMBOS[l]):
            if set(I) & set(J):
                continue
            K = tuple(sorted(I + J))
            rows.append((a, b, INDEX[k + l][K], perm_sign(I + J)))
    rows = np.array(rows, dtype=np.int64).reshape(-1, 4)
    scatter = np.zeros((len(rows), NCOMP[k + l]))
    scatter[np.arange(len(rows)), rows[:, 2]] = 1.0
    return rows[:, 0], rows[:, 1], rows[:, 3].astype(float), scatter


_WEDGE = {}


def wedge(alpha, k, beta, l):
    """Exterior product of a k-form and an l-form in canonical storage."""
    _check_degree(k)
    _check_degree(l)
    if k + l > DIM:
        a = np.asarray(alpha)
        return np.zeros(a.shape[:-1] + (0,))
    if (k, l) not in _WEDGE:
        _WEDGE[k, l] = _wedge_table(k, l)
    ia, ib, sg, scatter = _WEDGE[k, l]
    prod_ = np.asarray(alpha)[..., ia] * np.asarray(beta)[..., ib] * sg
    return prod_ @ scatter


# Coefficient of e^{1..7} in e^A ^ e^B ^ e^C for 2-forms A, B and a 3-form C.
TRIPLE_WEDGE = np.zeros((NCOMP[2], NCOMP[2], NCOMP[3]))
for _a, _A in enumerate(COMBOS[2]):
    for _b, _B in enumerate(COMBOS[2]):
        for _c, _C in enumerate(COMBOS[3]):
            TRIPLE_WEDGE[_a, _b, _c] = perm_sign(_A + _B + _C)


# -- interior product ---------------------------------------------------------

def _interior_table(k):
    src = np.zeros((NCOMP[k - 1], DIM), dtype=np.intp)
    sgn = np.zeros((NCOMP[k - 1], DIM))
    for j, J in enumerate(COMBOS[k - 1]):
        for i in range(DIM):
            s = perm_sign((i,) + J)
            if s:
                src[j, i] = INDEX[k][tuple(sorted((i,) + J))]
                sgn[j, i] = s
    return src, sgn


_INTERIOR = {k: _interior_table(k) for k in range(1, DIM + 1)}


def interior(X, alpha, k):
    """Contraction X^i alpha_{i j...} of a vector into the first slot of a k-form."""
    _check_degree(k, 1, DIM)
    src, sgn = _INTERIOR[k]
    gathered = np.asarray(alpha)[..., src] * sgn
    return np.einsum("...i,...ji->...j", X, gathered)


def slot_matrix(alpha, k):
    """Array (..., 7, C(7,k-1)) whose row i holds e_i contracted into alpha."""
    src, sgn = _INTERIOR[k]
    gathered = np.asarray(alpha)[..., src] * sgn
    return np.swapaxes(gathered, -1, -2)


# -- Hodge complement ---------------------------------------------------------

def _complement_table(k):
    idx = np.zeros(NCOMP[DIM - k], dtype=np.intp)
    sgn = np.zeros(NCOMP[DIM - k])
    for j, J in enumerate(COMBOS[DIM - k]):
        Ic = tuple(i for i in range(DIM) if i not in J)
        idx[j] = INDEX[k][Ic]
        sgn[j] = perm_sign(Ic + J)
    return idx, sgn


# COMPLEMENT[k] maps raised k-form components to (7-k)-form components of the
# Hodge dual: (*alpha)_J = eps(J^c, J) alpha^{J^c} vol.
COMPLEMENT = {k: _complement_table(k) for k in range(DIM + 1)}

_PARITY = [np.array([(-1) ** (sum(c) % 2) for c in COMBOS[k]], dtype=float) for k in range(DIM + 1)]


# -- compound matrices --------------------------------------------------------

def _gather(A, k, p, q):
    rows = np.array([c[p] for c in COMBOS[k]])
    cols = np.array([c[q] for c in COMBOS[k]])
    return A[..., rows[:, None], cols[None, :]]


def compound(A, k, A_inv=None, det=None):
    """k-th compound matrix: minors det(A[I, J]) over increasing index tuples.

    For k >= 4 Jacobi's complementary-minor identity is used, which needs the
    inverse and determinant (computed here unless supplied).
    """
    A = np.asarray(A)
    _check_degree(k)
    if k == 0:
        return np.ones(A.shape[:-2] + (1, 1))
    if k == 1:
        return A.copy()
    if k == 2:
        return _gather(A, 2, 0, 0) * _gather(A, 2, 1, 1) - _gather(A, 2, 0, 1) * _gather(A, 2, 1, 0)
    if k == 3:
        a = [[_gather(A, 3, p, q) for q in range(3)] for p in range(3)]
        return (a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]))
    if A_inv is None:
        A_inv = np.linalg.inv(A)
    if det is None:
        det = np.linalg.det(A)
    kc = DIM - k
    small = compound(A_inv, kc)
    # C_k(A)[I, J] = s(I) s(J) det(A) C_{7-k}(A^-1)[J^c, I^c]
    cidx = np.array([INDEX[kc][tuple(i for i in range(DIM) if i not in c)] for c in COMBOS[k]])
    par = _PARITY[k]
    out = np.swapaxes(small[..., cidx[:, None], cidx[None, :]], -1, -2)
    return out * (par[:, None] * par[None, :]) * np.asarray(det)[..., None, None]


def n_components(k):
    return comb(DIM, k)


# -- pair-compressed 4-tensors ------------------------------------------------

PAIRS = np.array(COMBOS[2])


def pairs_to_full(R):
    """Expand (..., 21, 21) pair-antisymmetric storage to (..., 7, 7, 7, 7)."""
    shape, src, sgn = _FULL[2]
    R = np.asarray(R)
    out = R[..., src[:, None], src[None, :]] * sgn[:, None] * sgn[None, :]
    return out.reshape(R.shape[:-2] + (DIM,) * 4)


def full_to_pairs(R):
    i, j = PAIRS[:, 0], PAIRS[:, 1]
    return np.asarray(R)[..., i[:, None], j[:, None], i[None, :], j[None, :]]


def levi_civita():
    """Dense 7-index Levi-Civita symbol (823543 entries); for oracles only."""
    eps = np.zeros((DIM,) * DIM, dtype=np.int8)
    for p in permutations(range(DIM)):
        eps[p] = perm_sign(p)
    return eps
