"""Lattice residuals of the closed-structure identities.

Each entry is a sup-norm over sites of a quantity that vanishes in the
continuum. The residuals shrink like h^2 under refinement for smooth data.
"""
import numpy as np

from . import algebra, forms
from .curvature import (nabla_form, raised_phi_pairs, ricci_from_torsion,
                        riemann_chunk, torsion_via_nabla_phi_chunk, h_tensor_chunk)
from .lattice import DEFAULT_CHUNK, exterior_d_flat, map_chunks

RESIDUAL_NAMES = (
    "scalar_curvature",
    "codifferential_tau",
    "tau_type_14",
    "nabla_phi",
    "nabla_psi",
    "torsion_bianchi",
    "grad_torsion_from_curvature",
    "ricci_two_routes",
    "torsion_two_routes",
    "i_phi_h",
    "trace_h",
    "laplacian_type_7",
    "laplacian_type_1",
)


def _sup(a):
    return float(np.max(np.abs(a), initial=0.0))


def curvature_torsion_term(R, T, phi, g_inv):
    """Q_ijk = (1/2 R_ijmn - T_im T_jn) phi_k^mn from full R (m, 7, 7, 7, 7)."""
    phup = raised_phi_pairs(phi, g_inv)
    A = 0.5 * R - np.einsum("mia,mjb->mijab", T, T)
    return np.einsum("mijab,mkab->mijk", A, phup, optimize=True)


def _chunk_residuals(state, dtau, sites):
    spec, m, phi, psi = state.spec, state.metric, state.phi, state.psi
    gamma, T, tau = state.gamma, state.T, state.tau
    ms = m[sites]
    g_inv = ms.g_inv
    Tc = T[sites]
    gT = state.grad_T[sites]
    out = {}

    Tn = np.einsum("mij,mik,mjl,mkl->m", Tc, g_inv, g_inv, Tc)
    out["scalar_curvature"] = _sup(state.curvature.scalar[sites] + Tn)

    ntau = forms.to_full(nabla_form(tau, 2, gamma, spec, sites), 2)
    out["codifferential_tau"] = _sup(np.einsum("mai,maij->mj", g_inv, ntau))

    c7, _ = algebra.torsion_class_check(tau[sites], phi[sites], psi[sites], ms)
    out["tau_type_14"] = _sup(c7)

    Tup = np.einsum("mia,mab->mib", Tc, g_inv)          # T_i^b
    nphi = nabla_form(phi, 3, gamma, spec, sites)
    pred = np.einsum("mib,mbJ->miJ", Tup, forms.slot_matrix(psi[sites], 4))
    out["nabla_phi"] = _sup(nphi - pred)

    npsi = nabla_form(psi, 4, gamma, spec, sites)
    Tphi = forms.wedge(Tc, 1, phi[sites][:, None, :], 3)
    out["nabla_psi"] = _sup(npsi + Tphi)

    R = riemann_chunk(m, gamma, spec, sites)
    Q = curvature_torsion_term(R, Tc, phi[sites], g_inv)
    out["torsion_bianchi"] = _sup(gT - np.swapaxes(gT, 1, 2) - Q)
    out["grad_torsion_from_curvature"] = _sup(
        2 * gT - (Q + np.transpose(Q, (0, 3, 2, 1)) - np.swapaxes(Q, 2, 3)))

    Ric2 = ricci_from_torsion(Tc, gT, phi[sites], g_inv)
    out["ricci_two_routes"] = _sup(Ric2 - state.curvature.Ric[sites])

    T2 = torsion_via_nabla_phi_chunk(phi, psi, gamma, m, spec, sites)
    out["torsion_two_routes"] = _sup(T2 - Tc)

    h, _ = h_tensor_chunk(phi, tau, gamma, m, spec, sites)
    out["i_phi_h"] = _sup(algebra.i_phi(h, phi[sites], ms) - dtau[sites])
    out["trace_h"] = _sup(np.einsum("mij,mij->m", h, g_inv) - (2.0 / 3.0) * Tn)

    a, X, _ = algebra.project3(dtau[sites], phi[sites], psi[sites], ms)
    out["laplacian_type_7"] = _sup(X)
    tau2 = algebra.inner(tau[sites], tau[sites], 2, ms)
    out["laplacian_type_1"] = _sup(a - tau2 / 7.0)
    return out


def identity_residuals(state, chunk=DEFAULT_CHUNK):
    """Sup-norm residual of every closed-structure identity on ``state``."""
    dtau = exterior_d_flat(state.tau, 2, state.spec)
    state.curvature, state.grad_T  # fill caches before threads start
    parts = map_chunks(lambda s: _chunk_residuals(state, dtau, s), state.spec.n_sites, chunk)
    return {k: max(p[k] for p in parts) for k in RESIDUAL_NAMES}
