import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2flow import forms
from g2flow.errors import DegreeOutOfRange

seeds = st.integers(0, 2**32 - 1)


def antisymmetrize_product(a, k, b, l):
    """Brute-force (alpha ^ beta) as a full tensor: (k+l)!/(k! l!) Alt(alpha (x) beta)."""
    A, B = forms.to_full(a, k), forms.to_full(b, l)
    prod = np.multiply.outer(A, B)
    out = np.zeros_like(prod)
    for perm in itertools.permutations(range(k + l)):
        out += forms.perm_sign(perm) * np.transpose(prod, perm)
    return out / (math.factorial(k) * math.factorial(l))


def test_component_counts():
    assert [forms.NCOMP[k] for k in range(8)] == [1, 7, 21, 35, 35, 21, 7, 1]


@pytest.mark.parametrize("k", range(0, 6))
def test_full_canonical_round_trip(k, rng):
    a = rng.standard_normal(forms.NCOMP[k])
    full = forms.to_full(a, k)
    assert np.array_equal(forms.to_canonical(full, k), a)
    if k >= 2:
        assert np.allclose(full, -np.swapaxes(full, 0, 1))


def test_degree_out_of_range():
    with pytest.raises(DegreeOutOfRange):
        forms.wedge(np.ones(7), 1, np.ones(1), 8)
    with pytest.raises(DegreeOutOfRange):
        forms.to_full(np.ones(1), -1)


@pytest.mark.parametrize("k,l", [(1, 1), (1, 2), (2, 2), (1, 3), (2, 3)])
def test_wedge_matches_brute_force(k, l, rng):
    a = rng.standard_normal(forms.NCOMP[k])
    b = rng.standard_normal(forms.NCOMP[l])
    expect = forms.to_canonical(antisymmetrize_product(a, k, b, l), k + l)
    assert np.allclose(forms.wedge(a, k, b, l), expect, atol=1e-12)


@given(seeds, st.integers(0, 4), st.integers(0, 3))
def test_wedge_graded_commutative(seed, k, l):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(forms.NCOMP[k])
    b = rng.standard_normal(forms.NCOMP[l])
    assert np.allclose(forms.wedge(a, k, b, l), (-1) ** (k * l) * forms.wedge(b, l, a, k), atol=1e-12)


@given(seeds)
def test_wedge_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal(forms.NCOMP[d]) for d in (1, 2, 3))
    left = forms.wedge(forms.wedge(a, 1, b, 2), 3, c, 3)
    right = forms.wedge(a, 1, forms.wedge(b, 2, c, 3), 5)
    assert np.allclose(left, right, atol=1e-12)


def test_triple_wedge_table(rng):
    a, b = rng.standard_normal(21), rng.standard_normal(21)
    c = rng.standard_normal(35)
    top = forms.wedge(forms.wedge(a, 2, b, 2), 4, c, 3)
    assert np.isclose(top[0], np.einsum("a,b,c,abc->", a, b, c, forms.TRIPLE_WEDGE))


@pytest.mark.parametrize("k", range(1, 6))
def test_interior_is_first_slot_contraction(k, rng):
    X = rng.standard_normal(7)
    a = rng.standard_normal(forms.NCOMP[k])
    full = np.tensordot(X, forms.to_full(a, k), axes=(0, 0))
    assert np.allclose(forms.interior(X, a, k), forms.to_canonical(full, k - 1))


def test_interior_antiderivation(rng):
    X = rng.standard_normal(7)
    a, b = rng.standard_normal(21), rng.standard_normal(35)
    lhs = forms.interior(X, forms.wedge(a, 2, b, 3), 5)
    rhs = (forms.wedge(forms.interior(X, a, 2), 1, b, 3)
           + forms.wedge(a, 2, forms.interior(X, b, 3), 2))
    assert np.allclose(lhs, rhs, atol=1e-12)


@pytest.mark.parametrize("k", range(0, 8))
def test_compound_matrix_is_minor_table(k, rng):
    A = rng.standard_normal((7, 7)) + 3 * np.eye(7)
    C = forms.compound(A[None], k)[0]
    for I in range(0, forms.NCOMP[k], 5):
        for J in range(0, forms.NCOMP[k], 3):
            rows, cols = forms.COMBOS[k][I], forms.COMBOS[k][J]
            minor = np.linalg.det(A[np.ix_(rows, cols)]) if k else 1.0
            assert np.isclose(C[I, J], minor, rtol=1e-10, atol=1e-10)


def test_compound_is_multiplicative(rng):
    A, B = rng.standard_normal((2, 7, 7))
    for k in (2, 3, 4):
        lhs = forms.compound((A @ B)[None], k)[0]
        rhs = forms.compound(A[None], k)[0] @ forms.compound(B[None], k)[0]
        assert np.allclose(lhs, rhs, atol=1e-9)


def test_levi_civita_oracle():
    eps = forms.levi_civita()
    assert eps[0, 1, 2, 3, 4, 5, 6] == 1
    assert eps[1, 0, 2, 3, 4, 5, 6] == -1
    assert np.count_nonzero(eps) == math.factorial(7)


def test_pairs_round_trip(rng):
    R = rng.standard_normal((3, 21, 21))
    assert np.array_equal(forms.full_to_pairs(forms.pairs_to_full(R)), R)
