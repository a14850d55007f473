"""Pointwise G2 multilinear algebra on a single fiber (or a batch of fibers).

Every function broadcasts over leading batch axes, so the same code serves a
single 3-form of shape (35,) and a lattice of them of shape (n, 35).
"""
from dataclasses import dataclass

import numpy as np

from . import forms
from .errors import NotPositive
from .forms import COMPLEMENT, TRIPLE_WEDGE, compound, interior, slot_matrix, to_full

# Triples carrying the nonzero components of the standard 3-form (1-based).
STANDARD_TERMS = (
    ((1, 2, 3), 1.0), ((1, 4, 5), 1.0), ((1, 6, 7), 1.0), ((2, 4, 6), 1.0),
    ((2, 5, 7), -1.0), ((3, 4, 7), -1.0), ((3, 5, 6), -1.0),
)
STANDARD_PSI_TERMS = (
    ((4, 5, 6, 7), 1.0), ((2, 3, 6, 7), 1.0), ((2, 3, 4, 5), 1.0), ((1, 3, 5, 7), 1.0),
    ((1, 3, 4, 6), -1.0), ((1, 2, 5, 6), -1.0), ((1, 2, 4, 7), -1.0),
)
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class Metric:
    """Metric induced by a positive 3-form; arrays may carry batch axes."""
    g: np.ndarray
    g_inv: np.ndarray
    vol: np.ndarray  # sqrt(det g), density with respect to dx^1...dx^7

    def __getitem__(self, key):
        return Metric(self.g[key], self.g_inv[key], self.vol[key])


def standard_phi():
    phi = np.zeros(35)
    for idx, c in STANDARD_TERMS:
        phi += c * forms.basis_form(idx)
    return phi


def standard_psi():
    psi = np.zeros(35)
    for idx, c in STANDARD_PSI_TERMS:
        psi += c * forms.basis_form(idx)
    return psi


def bilinear_density(phi):
    """Coefficient of dx^1...dx^7 in B_phi(d_i, d_j) = (1/6)(d_i.phi)^(d_j.phi)^phi."""
    phi = np.asarray(phi, dtype=float)
    u = slot_matrix(phi, 3)
    M = np.einsum("abc,...c->...ab", TRIPLE_WEDGE, phi)
    b = np.einsum("...ia,...ab,...jb->...ij", u, M, u) / 6.0
    return 0.5 * (b + np.swapaxes(b, -1, -2))


def metric_from_phi(phi, tol=POSITIVITY_TOL):
    """Metric, inverse and volume density determined by a positive 3-form.

    Raises NotPositive when the bilinear density is not positive definite.  For
    batched input the offending flat batch index is attached as ``site``.
    """
    b = bilinear_density(phi)
    margin = _margin(np.linalg.eigvalsh(b))
    bad = ~(margin > tol)
    if np.any(bad):
        site = int(np.flatnonzero(bad.ravel())[0]) if bad.ndim else None
        m = float(np.ravel(margin)[site or 0])
        raise NotPositive(f"3-form is not positive (margin {m:.3e})", site=site, margin=m)
    _, logdet = np.linalg.slogdet(b)
    vol = np.exp(logdet / 9.0)
    g = b / vol[..., None, None]
    g_inv = np.linalg.inv(g)
    g_inv = 0.5 * (g_inv + np.swapaxes(g_inv, -1, -2))
    return Metric(g, g_inv, vol)


def _margin(eig):
    scale = np.abs(eig).max(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, eig[..., 0] / scale, -np.inf)


def positivity_margin(phi):
    """Smallest eigenvalue of the bilinear density over its largest modulus; positive iff definite."""
    return _margin(np.linalg.eigvalsh(bilinear_density(phi)))


def raise_form(alpha, k, m):
    """All indices of a k-form raised with m.g_inv, canonical storage."""
    if k <= 3:
        C = compound(m.g_inv, k)
    else:
        C = compound(m.g_inv, k, A_inv=m.g, det=1.0 / m.vol ** 2)
    return np.einsum("...IJ,...J->...I", C, alpha)


def inner(alpha, beta, k, m):
    """Pointwise inner product with the 1/k! convention."""
    return np.einsum("...I,...I->...", alpha, raise_form(beta, k, m))


def hodge_star(alpha, m, k):
    """Hodge dual of a k-form, defined by a ^ *b = <a, b> vol."""
    forms._check_degree(k)
    raised = raise_form(np.asarray(alpha, dtype=float), k, m)
    idx, sgn = COMPLEMENT[k]
    return np.asarray(m.vol)[..., None] * sgn * raised[..., idx]


def psi_from_phi(phi, m=None):
    if m is None:
        m = metric_from_phi(phi)
    return hodge_star(phi, m, 3)


def lower(X, m):
    return np.einsum("...ij,...j->...i", m.g, X)


def raise_vec(w, m):
    return np.einsum("...ij,...j->...i", m.g_inv, w)


def pair_matrix(alpha):
    """A 4-form as a (21, 21) matrix alpha_{(ij)(kl)} over increasing pairs."""
    return forms.full_to_pairs(to_full(alpha, 4))


# -- G2 operators -------------------------------------------------------------

def i_phi(h, phi, m=None):
    """(i_phi h)_{ijk} = h_i^l phi_{ljk} + h_j^l phi_{ilk} + h_k^l phi_{ijl}."""
    if m is None:
        m = metric_from_phi(phi)
    H = np.einsum("...im,...ml->...il", h, m.g_inv)
    t = np.einsum("...il,...ljk->...ijk", H, to_full(phi, 3))
    t = t + np.moveaxis(t, -3, -1) + np.moveaxis(t, -1, -3)
    return forms.to_canonical(t, 3)


def j_phi(gamma, phi, m=None):
    """j_phi(gamma)(u, v) = *((u.phi) ^ (v.phi) ^ gamma)."""
    if m is None:
        m = metric_from_phi(phi)
    u = slot_matrix(phi, 3)
    M = np.einsum("abc,...c->...ab", TRIPLE_WEDGE, gamma)
    j = np.einsum("...ia,...ab,...jb->...ij", u, M, u) / np.asarray(m.vol)[..., None, None]
    return 0.5 * (j + np.swapaxes(j, -1, -2))


def project2(beta, phi, psi, m):
    """Split a 2-form into its 7- and 14-dimensional G2 components."""
    P = 2.0 * np.einsum("...I,...IK->...K", raise_form(beta, 2, m), pair_matrix(psi))
    beta7 = (beta + 0.5 * P) / 3.0
    beta14 = (2.0 * beta - 0.5 * P) / 3.0
    return beta7, beta14


def project3(gamma, phi, psi, m):
    """Decompose a 3-form as a*phi + X.psi + i_phi(h27) with h27 trace-free.

    Returns the scalar a, the vector X (upper index) and h27.
    """
    a = inner(gamma, phi, 3, m) / 7.0
    up = raise_form(gamma, 3, m)
    # X_l = -(1/24) gamma^{ijk} psi_{ijkl}; psi_{Il} = -(e_l . psi)_I
    w = 0.25 * np.einsum("...I,...lI->...l", up, slot_matrix(psi, 4))
    X = raise_vec(w, m)
    rest = gamma - np.asarray(a)[..., None] * phi - interior(X, psi, 4)
    h27 = 0.25 * j_phi(rest, phi, m)
    return a, X, h27


def torsion_class_check(beta, phi, psi, m):
    """Residuals of the two defining equations of the 14-dimensional summand."""
    c7 = np.einsum("...I,...kI->...k", raise_form(beta, 2, m), slot_matrix(phi, 3))
    P = 2.0 * np.einsum("...I,...IK->...K", raise_form(beta, 2, m), pair_matrix(psi))
    return c7, P + 2.0 * beta


# -- identity oracles ---------------------------------------------------------

CONTRACTION_NAMES = (
    "phi_phi_metric",   # phi_ijk phi_abl g^ia g^jb = 6 g_kl
    "phi_psi_phi",      # phi_ijq psi_abkl g^ia g^jb = 4 phi_qkl
    "phi_phi_psi",      # phi_ipq phi_ajk g^ia = g_pj g_qk - g_pk g_qj + psi_pqjk
    "phi_psi_mixed",    # phi_ipq psi_ajkl g^ia = six g*phi terms
    "psi_psi_metric",   # psi_ijkl psi_abcd g^jb g^kc g^ld = 24 g_ia
)


def check_contraction_identities(phi, psi=None, m=None):
    """Max-abs residuals of the five phi/psi contraction identities."""
    if m is None:
        m = metric_from_phi(phi)
    if psi is None:
        psi = psi_from_phi(phi, m)
    g, gi = m.g, m.g_inv
    P = to_full(phi, 3)
    S = to_full(psi, 4)
    es = lambda spec, *ops: np.einsum(spec, *ops, optimize=True)  # noqa: E731
    r1 = es("...ijk,...abl,...ia,...jb->...kl", P, P, gi, gi) - 6 * g
    r2 = es("...ijq,...abkl,...ia,...jb->...qkl", P, S, gi, gi) - 4 * P
    r3 = (es("...ipq,...ajk,...ia->...pqjk", P, P, gi)
          - (es("...pj,...qk->...pqjk", g, g) - es("...pk,...qj->...pqjk", g, g) + S))
    gp = lambda spec: es(spec, g, P)  # noqa: E731
    r4 = es("...ipq,...ajkl,...ia->...pqjkl", P, S, gi) - (
        gp("...pj,...qkl->...pqjkl") - gp("...jq,...pkl->...pqjkl")
        + gp("...pk,...jql->...pqjkl") - gp("...kq,...jpl->...pqjkl")
        + gp("...pl,...jkq->...pqjkl") - gp("...lq,...jkp->...pqjkl"))
    r5 = es("...ijkl,...abcd,...jb,...kc,...ld->...ia", S, S, gi, gi, gi) - 24 * g
    return {name: float(np.max(np.abs(r))) for name, r in zip(CONTRACTION_NAMES, (r1, r2, r3, r4, r5))}


def pullback(phi, u):
    """(u^* phi)_{ijk} = u^a_i u^b_j u^c_k phi_abc for a linear map u (7x7)."""
    full = np.einsum("ai,bj,ck,abc->ijk", u, u, u, to_full(phi, 3))
    return forms.to_canonical(full, 3)


def random_frame(rng, cond_max=10.0):
    """Random orientation-preserving linear map with condition number below cond_max."""
    q1, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    q2, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    s = np.exp(rng.uniform(0.0, np.log(cond_max) * 0.95, size=7))
    s /= np.sqrt(s.max() * s.min())
    u = q1 @ np.diag(s) @ q2
    if np.linalg.det(u) < 0:
        u[:, 0] = -u[:, 0]
    return u


def random_positive_phi(rng, cond_max=10.0):
    return pullback(standard_phi(), random_frame(rng, cond_max))


def random_sym(rng):
    a = rng.standard_normal((7, 7))
    return 0.5 * (a + a.T)


def fiber_identity_suite(phi, rng, psi=None):
    """Every pointwise identity on one fiber, as a dict of max-abs residuals.

    ``rng`` supplies the random test tensors; ``psi`` overrides the dual form
    (used to inject faults).
    """
    m = metric_from_phi(phi)
    psi_true = psi_from_phi(phi, m)
    if psi is None:
        psi = psi_true
    out = check_contraction_identities(phi, psi, m)
    sup = lambda a: float(np.max(np.abs(a)))  # noqa: E731

    h = random_sym(rng)
    out["i_phi_metric"] = sup(i_phi(m.g, phi, m) - 3 * phi)
    out["j_phi_phi"] = sup(j_phi(phi, phi, m) - 6 * m.g)
    tr = np.einsum("ij,ij->", h, m.g_inv)
    out["j_of_i"] = sup(j_phi(i_phi(h, phi, m), phi, m) - 4 * h - 2 * tr * m.g)

    beta = rng.standard_normal(forms.NCOMP[2])
    b7, b14 = project2(beta, phi, psi, m)
    b7b, b14b = project2(b7, phi, psi, m)
    c7, c14 = project2(b14, phi, psi, m)
    out["project2"] = max(sup(b7 + b14 - beta), sup(b14b), sup(b7b - b7), sup(c7), sup(c14 - b14),
                          abs(float(inner(b7, b14, 2, m))))

    gamma = rng.standard_normal(forms.NCOMP[3])
    a, X, h27 = project3(gamma, phi, psi, m)
    p1, p7, p27 = a * phi, interior(X, psi, 4), i_phi(h27, phi, m)
    a2, X2, h2 = project3(p7, phi, psi, m)
    a3, X3, h3 = project3(p27, phi, psi, m)
    out["project3"] = max(
        sup(p1 + p7 + p27 - gamma),
        abs(float(np.einsum("ij,ij->", h27, m.g_inv))),
        abs(float(a2)), sup(X2 - X), sup(h2), abs(float(a3)), sup(X3), sup(h3 - h27),
        abs(float(inner(p1, p7, 3, m))), abs(float(inner(p7, p27, 3, m))),
        abs(float(inner(p1, p27, 3, m))))

    out["hodge_involution"] = max(_involution_residual(rng, m, k) for k in range(8))
    out["psi_is_star_phi"] = sup(psi - psi_true)
    return out


def _involution_residual(rng, m, k):
    alpha = rng.standard_normal(forms.NCOMP[k])
    return float(np.max(np.abs(hodge_star(hodge_star(alpha, m, k), m, 7 - k) - alpha)))
