"""Riemannian curvature and G2 torsion of a lattice 3-form.

Index conventions:
  * ``gamma[n, k, i, j]`` is the Christoffel symbol Gamma^k_ij at site n.
  * ``R_{ijkl} = g(R(d_i, d_j) d_l, d_k)`` with
    ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``, so the
    round sphere has positive Ricci curvature ``R_ik = R_ijkl g^jl``.
  * Riemann tensors are stored pair-compressed as (21, 21) over i<j, k<l.
  * Torsion ``T`` is a full (7, 7) skew array, ``tau = -2 T``.

Everything that needs neighbouring sites reads full-grid arrays and writes one
chunk of sites at a time, keeping peak memory independent of lattice size.
"""
from dataclasses import dataclass

import numpy as np

from . import algebra, forms
from .errors import NotClosed
from .forms import COMBOS, INDEX, NCOMP, slot_matrix, to_full
from .lattice import DEFAULT_CHUNK, concat_chunks, exterior_d_flat, grad, map_chunks

CLOSED_TOL = 1e-9


@dataclass
class CurvatureBundle:
    Rm: np.ndarray      # (n, 21, 21)
    Ric: np.ndarray     # (n, 7, 7)
    scalar: np.ndarray  # (n,)


@dataclass
class TorsionBundle:
    tau: np.ndarray         # (n, 21) canonical 2-form
    T: np.ndarray           # (n, 7, 7)
    omega7_residual: float  # sup of the 7-dimensional part of tau
    gradT: np.ndarray = None  # (n, 7, 7, 7), nabla_a T_bc


@dataclass
class LambdaField:
    values: np.ndarray
    sup: float
    argmax: int


# -- covariant derivatives ----------------------------------------------------

def _form_connection_table(k):
    src = np.zeros((NCOMP[k], k, 7), dtype=np.intp)
    sgn = np.zeros((NCOMP[k], k, 7))
    slot = np.zeros((NCOMP[k], k), dtype=np.intp)
    for I, tup in enumerate(COMBOS[k]):
        for s in range(k):
            slot[I, s] = tup[s]
            for p in range(7):
                new = tup[:s] + (p,) + tup[s + 1:]
                sg = forms.perm_sign(new)
                if sg:
                    src[I, s, p] = INDEX[k][tuple(sorted(new))]
                    sgn[I, s, p] = sg
    return src, sgn, slot


_CONN = {k: _form_connection_table(k) for k in range(1, 6)}


def connection_on_form(alpha, k, gamma):
    """sum_s Gamma^p_{a i_s} alpha_{i_1..p..i_k}: shape (m, 7, C(7,k))."""
    src, sgn, slot = _CONN[k]
    a = alpha[:, src] * sgn                          # (m, C, k, p)
    G = np.transpose(gamma, (0, 2, 3, 1))[:, :, slot]  # (m, a, C, k, p)
    return np.einsum("maCsp,mCsp->maC", G, a, optimize=True)


def nabla_form(alpha, k, gamma, spec, sites):
    """Covariant derivative nabla_a alpha_I at the given sites, shape (m, 7, C(7,k))."""
    return grad(alpha, spec, sites) - connection_on_form(alpha[sites], k, gamma[sites])


def covariant_grad(A, gamma, spec, sites=None):
    """nabla_a A_{i1..ir} for a full covariant tensor field A of shape (n, 7, ..., 7)."""
    if sites is None:
        sites = slice(0, len(A))
    out = grad(A, spec, sites)
    G = gamma[sites]
    Ak = A[sites]
    r = A.ndim - 1
    letters = "bcdefgh"[:r]
    for s in range(r):
        moved = letters[:s] + "p" + letters[s + 1:]
        out -= np.einsum(f"mpa{letters[s]},m{moved}->ma{letters}", G, Ak)
    return out


def divergence(X, m, spec, sites=None):
    """div X = (1/vol) d_i (vol X^i)."""
    if sites is None:
        sites = slice(0, len(X))
    dvx = grad(m.vol[:, None] * X, spec, sites)
    return np.einsum("maa->m", dvx) / m.vol[sites]


# -- Christoffels and curvature -----------------------------------------------

def christoffels(m, spec, chunk=DEFAULT_CHUNK):
    """Levi-Civita symbols Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)."""
    def one(s):
        dg = grad(m.g, spec, s)                         # (m, a, i, j)
        # low[m, i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        low = 0.5 * (np.transpose(dg, (0, 1, 2, 3)) + np.transpose(dg, (0, 2, 1, 3))
                     - np.transpose(dg, (0, 2, 3, 1)))
        return np.einsum("mkl,mijl->mkij", m.g_inv[s], low)
    return concat_chunks(one, len(m.g), chunk)


def riemann_chunk(m, gamma, spec, sites):
    """Full R_ijkl (m, 7, 7, 7, 7) at a chunk of sites."""
    dG = grad(gamma, spec, sites)                       # dG[m, a, p, j, l] = d_a Gamma^p_jl
    G = gamma[sites]
    U = np.transpose(dG, (0, 1, 3, 4, 2)) + np.einsum("mpiq,mqjl->mijlp", G, G, optimize=True)
    Rup = U - np.swapaxes(U, 1, 2)                      # R_ijl^p
    return np.einsum("mijlp,mkp->mijkl", Rup, m.g[sites], optimize=True)


def ricci_of(R, g_inv):
    return np.einsum("mijkl,mjl->mik", R, g_inv, optimize=True)


def riemann(m, gamma, spec, chunk=DEFAULT_CHUNK):
    def one(s):
        R = riemann_chunk(m, gamma, spec, s)
        Ric = ricci_of(R, m.g_inv[s])
        Ric = 0.5 * (Ric + np.swapaxes(Ric, 1, 2))
        return forms.full_to_pairs(R), Ric, np.einsum("mik,mik->m", Ric, m.g_inv[s])
    Rm, Ric, scalar = concat_chunks(one, len(m.g), chunk)
    return CurvatureBundle(Rm, Ric, scalar)


def rm_norm2(Rm_pairs, g_inv):
    """|Rm|^2 = R_ijkl R^ijkl from pair-compressed storage."""
    C2 = forms.compound(g_inv, 2)
    up = np.einsum("mIA,mAB,mJB->mIJ", C2, Rm_pairs, C2, optimize=True)
    return 4.0 * np.einsum("mIJ,mIJ->m", Rm_pairs, up)


def tensor_norm2(A, g_inv):
    """Full contraction A_{i..} A^{i..} for a covariant tensor with batch axis first."""
    r = A.ndim - 1
    letters = "abcdefg"[:r]
    raised = letters.upper()
    ops = [A] + [g_inv] * r
    spec = "m" + letters + "," + ",".join(f"m{l}{u}" for l, u in zip(letters, raised)) + "->m" + raised
    up = np.einsum(spec, *ops, optimize=True)
    return np.einsum(f"m{letters},m{letters}->m", A, up)


# -- torsion ------------------------------------------------------------------

def closedness_residual(phi, spec):
    return float(np.max(np.abs(exterior_d_flat(phi, 3, spec)), initial=0.0))


def require_closed(phi, spec, tol=CLOSED_TOL):
    res = closedness_residual(phi, spec)
    scale = max(1.0, float(np.max(np.abs(phi))))
    if res > tol * scale:
        raise NotClosed(f"d(phi) residual {res:.3e} exceeds {tol:.1e} x {scale:.3g}")
    return res


def skew_from_form(beta):
    """Canonical 2-form components to the full skew (..., 7, 7) array."""
    return to_full(beta, 2)


def tau_from_psi(psi, m, spec):
    """tau = -*d psi (canonical 2-form)."""
    return -algebra.hodge_star(exterior_d_flat(psi, 4, spec), m, 5)


def torsion_via_dpsi(phi, psi, m, spec, check_closed=True):
    if check_closed:
        require_closed(phi, spec)
    tau = tau_from_psi(psi, m, spec)
    T = -0.5 * skew_from_form(tau)

    def pi7(s):
        c7, _ = algebra.torsion_class_check(tau[s], phi[s], psi[s], m[s])
        return np.max(np.abs(c7), initial=0.0)
    res = max(map_chunks(pi7, len(phi)))
    return TorsionBundle(tau, T, float(res))


def torsion_via_nabla_phi_chunk(phi, psi, gamma, m, spec, sites):
    """T_ij = (1/24) nabla_i phi_lmn psi_j^lmn at a chunk of sites."""
    nphi = nabla_form(phi, 3, gamma, spec, sites)               # (m, i, L)
    psi_j = slot_matrix(psi[sites], 4)                           # (m, j, L) = psi_{jL}
    psi_j_up = np.einsum("mLK,mjK->mjL", forms.compound(m.g_inv[sites], 3), psi_j)
    return 0.25 * np.einsum("miL,mjL->mij", nphi, psi_j_up)


def torsion_via_nabla_phi(phi, psi, gamma, m, spec, chunk=DEFAULT_CHUNK):
    return concat_chunks(lambda s: torsion_via_nabla_phi_chunk(phi, psi, gamma, m, spec, s), len(phi), chunk)


def grad_torsion(T, gamma, spec, chunk=DEFAULT_CHUNK):
    return concat_chunks(lambda s: covariant_grad(T, gamma, spec, s), len(T), chunk)


def raised_phi_pairs(phi, g_inv):
    """phi_k^{mn}: (m, k, 7, 7) with the last two indices raised."""
    up = np.einsum("mIJ,mkJ->mkI", forms.compound(g_inv, 2), slot_matrix(phi, 3))
    return to_full(up, 2)


# -- Hodge Laplacian ----------------------------------------------------------

def velocity_from_tau(tau, spec):
    """Delta_phi phi = d tau."""
    return exterior_d_flat(tau, 2, spec)


def h_tensor_chunk(phi, tau, gamma, m, spec, sites):
    """h_ij = 1/2 nabla_m tau_ni phi_j^mn - 1/6 |tau|^2 g_ij - 1/4 tau_i^l tau_lj (symmetrized)."""
    ntau = to_full(nabla_form(tau, 2, gamma, spec, sites), 2)   # (m, a, n, i)
    ms = m[sites]
    phup = raised_phi_pairs(phi[sites], ms.g_inv)              # (m, j, a, n)
    first = 0.5 * np.einsum("mani,mjan->mij", ntau, phup, optimize=True)
    tf = to_full(tau[sites], 2)
    tau2 = algebra.inner(tau[sites], tau[sites], 2, ms)
    tt = np.einsum("mil,mlk,mkj->mij", tf, ms.g_inv, tf)
    h = first - tau2[:, None, None] * ms.g / 6.0 - 0.25 * tt
    asym = 0.5 * (h - np.swapaxes(h, 1, 2))
    return 0.5 * (h + np.swapaxes(h, 1, 2)), asym


def hodge_laplacian_phi(phi, tau, gamma, m, spec, chunk=DEFAULT_CHUNK):
    """Velocity d tau and its symmetric-tensor representation h with i_phi(h) = d tau."""
    dtau = velocity_from_tau(tau, spec)
    h = concat_chunks(lambda s: h_tensor_chunk(phi, tau, gamma, m, spec, s)[0], len(phi), chunk)
    return dtau, h


def ricci_from_torsion(T, gradT, phi, g_inv):
    """R_ik = nabla_j T_li phi_k^jl - T_i^j T_jk for closed structures."""
    phup = raised_phi_pairs(phi, g_inv)
    first = np.einsum("mjli,mkjl->mik", gradT, phup, optimize=True)
    TT = np.einsum("mij,mjl,mlk->mik", T, g_inv, T)
    return first - TT


def lambda_field(gradT, Rm, m):
    vals = np.sqrt(np.maximum(tensor_norm2(gradT, m.g_inv) + rm_norm2(Rm, m.g_inv), 0.0))
    n = int(np.argmax(vals))
    return LambdaField(vals, float(vals[n]), n)
