import numpy as np
import pytest
from hypothesis import given, strategies as st

from g2flow import algebra, forms
from g2flow.errors import NotPositive

seeds = st.integers(0, 2**32 - 1)

# The standard pair written out term by term, as (indices, sign).
PHI0_TERMS = [((1, 2, 3), 1), ((1, 4, 5), 1), ((1, 6, 7), 1), ((2, 4, 6), 1),
              ((2, 5, 7), -1), ((3, 4, 7), -1), ((3, 5, 6), -1)]
PSI0_TERMS = [((4, 5, 6, 7), 1), ((2, 3, 6, 7), 1), ((2, 3, 4, 5), 1), ((1, 3, 5, 7), 1),
              ((1, 3, 4, 6), -1), ((1, 2, 5, 6), -1), ((1, 2, 4, 7), -1)]


def expand(terms):
    return sum(s * forms.basis_form(idx) for idx, s in terms)


def brute_metric(phi):
    """b_ij = (1/144) eps^{a..g} phi_ia phi_jb... from the dense Levi-Civita symbol."""
    P = forms.to_full(phi, 3)
    eps = forms.levi_civita()
    b = np.einsum("iab,jcd,efg,abcdefg->ij", P, P, P, eps, optimize=True) / 144.0
    det = np.linalg.det(b)
    return b / det ** (1 / 9), det ** (1 / 9)


def test_standard_fiber_exact():
    m = algebra.metric_from_phi(algebra.standard_phi())
    assert np.abs(m.g - np.eye(7)).max() < 1e-14
    assert abs(m.vol - 1) < 1e-14


def test_standard_forms_match_expansion():
    assert np.array_equal(algebra.standard_phi(), expand(PHI0_TERMS))
    assert np.array_equal(algebra.standard_psi(), expand(PSI0_TERMS))
    assert np.array_equal(algebra.psi_from_phi(algebra.standard_phi()), expand(PSI0_TERMS))


@given(seeds)
def test_metric_matches_levi_civita_formula(seed):
    phi = algebra.random_positive_phi(np.random.default_rng(seed))
    g, vol = brute_metric(phi)
    m = algebra.metric_from_phi(phi)
    assert np.allclose(m.g, g, rtol=1e-10, atol=1e-12)
    assert np.isclose(m.vol, vol, rtol=1e-10)


@given(seeds)
def test_metric_is_natural_under_frames(seed):
    # u^* phi0 has metric u^T u and volume det(u)
    u = algebra.random_frame(np.random.default_rng(seed))
    m = algebra.metric_from_phi(algebra.pullback(algebra.standard_phi(), u))
    assert np.allclose(m.g, u.T @ u, atol=1e-11)
    assert np.isclose(m.vol, np.linalg.det(u), rtol=1e-11)


@pytest.mark.parametrize("lam", [0.5, 2.0, 3.7])
def test_metric_scaling(lam, rng):
    phi = algebra.random_positive_phi(rng)
    m1 = algebra.metric_from_phi(phi)
    m2 = algebra.metric_from_phi(lam ** 3 * phi)
    assert np.allclose(m2.g, lam ** 2 * m1.g, rtol=1e-12)
    assert np.isclose(m2.vol, lam ** 7 * m1.vol, rtol=1e-12)


def test_negative_phi_is_not_positive():
    with pytest.raises(NotPositive) as info:
        algebra.metric_from_phi(-algebra.standard_phi())
    assert info.value.margin < 0


def test_generic_degenerate_form_rejected():
    with pytest.raises(NotPositive):
        algebra.metric_from_phi(forms.basis_form((1, 2, 3)))


def test_positivity_margin_batch(rng):
    phis = np.stack([algebra.random_positive_phi(rng) for _ in range(4)] + [-algebra.standard_phi()])
    margin = algebra.positivity_margin(phis)
    assert np.all(margin[:4] > 0) and margin[4] < 0


@given(seeds)
def test_identity_suite_random_fiber(seed):
    rng = np.random.default_rng(seed)
    res = algebra.fiber_identity_suite(algebra.random_positive_phi(rng), rng)
    assert max(res.values()) < 1e-9, res


def test_identity_suite_detects_corrupted_psi(rng):
    phi = algebra.random_positive_phi(rng)
    psi = algebra.psi_from_phi(phi).copy()
    psi[0] = -psi[0]
    res = algebra.fiber_identity_suite(phi, rng, psi)
    assert res["phi_psi_phi"] > 1e-3


@given(seeds)
def test_hodge_star_defining_property(seed):
    # alpha ^ *beta = <alpha, beta> vol
    rng = np.random.default_rng(seed)
    m = algebra.metric_from_phi(algebra.random_positive_phi(rng))
    for k in (1, 2, 3):
        a, b = rng.standard_normal((2, forms.NCOMP[k]))
        top = forms.wedge(a, k, algebra.hodge_star(b, m, k), 7 - k)[0]
        assert np.isclose(top, algebra.inner(a, b, k, m) * m.vol, rtol=1e-10, atol=1e-10)


def test_inner_product_of_phi_is_seven(rng):
    phi = algebra.random_positive_phi(rng)
    m = algebra.metric_from_phi(phi)
    assert np.isclose(algebra.inner(phi, phi, 3, m), 7.0)
    assert np.isclose(algebra.inner(algebra.psi_from_phi(phi, m), algebra.psi_from_phi(phi, m), 4, m), 7.0)


def test_omega7_two_forms_are_contractions_of_phi(rng):
    phi = algebra.random_positive_phi(rng)
    m = algebra.metric_from_phi(phi)
    psi = algebra.psi_from_phi(phi, m)
    X = rng.standard_normal(7)
    beta = forms.interior(X, phi, 3)
    b7, b14 = algebra.project2(beta, phi, psi, m)
    assert np.abs(b14).max() < 1e-12 and np.allclose(b7, beta)
    # beta ^ phi = 2 * beta for the 7-dimensional summand
    assert np.allclose(forms.wedge(beta, 2, phi, 3), 2 * algebra.hodge_star(beta, m, 2), atol=1e-12)


def test_omega14_two_forms(rng):
    phi = algebra.random_positive_phi(rng)
    m = algebra.metric_from_phi(phi)
    psi = algebra.psi_from_phi(phi, m)
    _, b14 = algebra.project2(rng.standard_normal(21), phi, psi, m)
    c7, resid = algebra.torsion_class_check(b14, phi, psi, m)
    assert np.abs(c7).max() < 1e-11 and np.abs(resid).max() < 1e-11
    # beta ^ phi = -*beta on the 14-dimensional summand
    assert np.allclose(forms.wedge(b14, 2, phi, 3), -algebra.hodge_star(b14, m, 2), atol=1e-11)


def test_project3_pieces(rng):
    phi = algebra.random_positive_phi(rng)
    m = algebra.metric_from_phi(phi)
    psi = algebra.psi_from_phi(phi, m)
    a, X, h27 = algebra.project3(2.5 * phi, phi, psi, m)
    assert np.isclose(a, 2.5) and np.abs(X).max() < 1e-12 and np.abs(h27).max() < 1e-11
    Y = rng.standard_normal(7)
    a, X, h27 = algebra.project3(forms.interior(Y, psi, 4), phi, psi, m)
    assert abs(a) < 1e-12 and np.allclose(X, Y) and np.abs(h27).max() < 1e-11


def test_i_phi_of_metric_and_j_phi_of_phi(rng):
    phi = algebra.random_positive_phi(rng)
    m = algebra.metric_from_phi(phi)
    assert np.allclose(algebra.i_phi(m.g, phi, m), 3 * phi)
    assert np.allclose(algebra.j_phi(phi, phi, m), 6 * m.g)


def test_i_phi_is_first_variation(rng):
    # d/ds phi(exp(s A)) = i_phi of the symmetric part of g A when A is symmetric w.r.t. g
    phi0 = algebra.standard_phi()
    h = algebra.random_sym(rng)
    s = 1e-6
    u = np.eye(7) + s * h
    dphi = (algebra.pullback(phi0, u) - algebra.pullback(phi0, np.eye(7) - s * h)) / (2 * s)
    assert np.allclose(dphi, algebra.i_phi(h, phi0), atol=1e-8)
