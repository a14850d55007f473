"""Residuals of the Laplacian soliton equation and the identities behind it."""
from dataclasses import dataclass

import numpy as np

from . import algebra, forms
from .curvature import covariant_grad, divergence, require_closed
from .errors import ScaleCollapse
from .lattice import DEFAULT_CHUNK, codifferential_flat, concat_chunks, exterior_d_flat, grad
from .state import FlowState


@dataclass
class SolitonCandidate:
    state: FlowState
    X: np.ndarray        # (n, 7) upper-index vector field
    lam: float

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(self.state.spec.n_sites, 7)


@dataclass(frozen=True)
class SolitonReport:
    residual_sup: float
    metric_residual_sup: float
    trace_residual_sup: float
    lam: float
    classification: str

    def summary(self):
        return (f"lambda = {self.lam:.6g} ({self.classification})\n"
                f"  soliton 3-form residual  {self.residual_sup:.6e}\n"
                f"  metric equation residual {self.metric_residual_sup:.6e}\n"
                f"  trace identity residual  {self.trace_residual_sup:.6e}")


def classify(lam):
    if lam > 0:
        return "expanding"
    if lam < 0:
        return "shrinking"
    return "steady"


def _sup(a):
    return float(np.max(np.abs(a), initial=0.0))


def lie_derivative_phi(X, state):
    """L_X phi = d(X . phi) for closed phi."""
    require_closed(state.phi, state.spec)
    return exterior_d_flat(forms.interior(X, state.phi, 3), 2, state.spec)


def nabla_vector(X, state, chunk=DEFAULT_CHUNK):
    """nabla_a X^k as (n, a, k)."""
    gamma, spec = state.gamma, state.spec

    def one(s):
        return grad(X, spec, s) + np.einsum("mkab,mb->mak", gamma[s], X[s])
    return concat_chunks(one, spec.n_sites, chunk)


def lie_derivative_metric(X, m, gamma, spec, chunk=DEFAULT_CHUNK):
    """(L_X g)_ij = nabla_i X_j + nabla_j X_i."""
    Xlow = algebra.lower(X, m)
    nX = concat_chunks(lambda s: covariant_grad(Xlow, gamma, spec, s), spec.n_sites, chunk)
    return nX + np.swapaxes(nX, 1, 2)


def g2_curl(X, state):
    """curl(X)_i = phi_ijk nabla^j X^k (lower index)."""
    m = state.metric
    nX = nabla_vector(X, state)
    up = np.einsum("mja,mak->mjk", m.g_inv, nX)
    return np.einsum("mijk,mjk->mi", forms.to_full(state.phi, 3), up)


def torsion_contract(X, T):
    """(X . T)_l = X^n T_nl."""
    return np.einsum("mn,mnl->ml", X, T)


def lie_decomposition(X, state):
    """1/2 i_phi(L_X g) + 1/2 (d*(X . phi))^sharp . psi, the second route to L_X phi."""
    m = state.metric
    LXg = lie_derivative_metric(X, m, state.gamma, state.spec)
    beta = forms.interior(X, state.phi, 3)
    w = algebra.raise_vec(codifferential_flat(beta, 2, m, state.spec), m)
    return 0.5 * algebra.i_phi(LXg, state.phi, m) + 0.5 * forms.interior(w, state.psi, 4)


def w_vector(X, state):
    """W = 1/2 curl(X) + X . T, raised to an upper index."""
    W = 0.5 * g2_curl(X, state) + torsion_contract(X, state.T)
    return algebra.raise_vec(W, state.metric)


def soliton_metric_residual(cand, LXg=None):
    st = cand.state
    m = st.metric
    T = st.T
    if LXg is None:
        LXg = lie_derivative_metric(cand.X, m, st.gamma, st.spec)
    Tn = np.einsum("mij,mik,mjl,mkl->m", T, m.g_inv, m.g_inv, T)
    TT = np.einsum("mia,mak,mkj->mij", T, m.g_inv, T)
    lhs = -st.curvature.Ric - (Tn / 3.0)[:, None, None] * m.g - 2.0 * TT
    rhs = (cand.lam / 3.0) * m.g + 0.5 * LXg
    return lhs - rhs


def trace_identity_residual(cand):
    """(2/3)|T|^2 - (7/3) lambda - div X, sitewise."""
    st = cand.state
    m = st.metric
    T = st.T
    Tn = np.einsum("mij,mik,mjl,mkl->m", T, m.g_inv, m.g_inv, T)
    return (2.0 / 3.0) * Tn - (7.0 / 3.0) * cand.lam - divergence(cand.X, m, st.spec)


def soliton_residual(cand):
    st = cand.state
    LXphi = lie_derivative_phi(cand.X, st)
    res3 = st.velocity - cand.lam * st.phi - LXphi
    return SolitonReport(
        residual_sup=_sup(res3),
        metric_residual_sup=_sup(soliton_metric_residual(cand)),
        trace_residual_sup=_sup(trace_identity_residual(cand)),
        lam=float(cand.lam),
        classification=classify(cand.lam),
    )


def estimate_lambda(state, X=None):
    """Least-squares lambda for Delta phi = lambda phi + L_X phi, volume weighted over sites."""
    m = state.metric
    target = state.velocity if X is None else state.velocity - lie_derivative_phi(X, state)
    num = np.sum(algebra.inner(target, state.phi, 3, m) * m.vol)
    den = np.sum(algebra.inner(state.phi, state.phi, 3, m) * m.vol)
    return float(num / den)


def lambda_phi_residual(state):
    """min over lambda of sup |Delta phi - lambda phi| at the least-squares lambda."""
    lam = estimate_lambda(state)
    return lam, _sup(state.velocity - lam * state.phi)


def mean_lambda_bound(state):
    """(2/7) * integral |T|^2 / volume: the only lambda a compact soliton could carry."""
    m = state.metric
    T = state.T
    Tn = np.einsum("mij,mik,mjl,mkl->m", T, m.g_inv, m.g_inv, T)
    return float((2.0 / 7.0) * np.sum(Tn * m.vol) / np.sum(m.vol))


def self_similar_reconstruct(cand, t):
    """rho(t) = (1 + 2 lambda t / 3)^{3/2} and the scaled field rho * phi."""
    base = 1.0 + (2.0 / 3.0) * cand.lam * t
    if base <= 0:
        raise ScaleCollapse(f"1 + 2 lambda t / 3 = {base:.6g} <= 0 at t = {t}")
    rho = base ** 1.5
    return rho, rho * cand.state.phi


def gradient_torsion_norm(f, state):
    """sup |grad f . T| for a scalar field f; zero for gradient solitons with X = grad f."""
    m = state.metric
    df = grad(f, state.spec)
    up = algebra.raise_vec(df, m)
    v = torsion_contract(up, state.T)
    return float(np.sqrt(np.max(np.einsum("ml,mlk,mk->m", v, m.g_inv, v))))
