"""Flow state: the lattice 3-form plus lazily derived geometry."""
from dataclasses import dataclass

import numpy as np

from . import algebra, curvature, forms
from .errors import NotPositive
from .lattice import LatticeField, LatticeSpec, exterior_d_flat, metric_field


@dataclass(frozen=True)
class Mode:
    """One closed perturbation term amplitude * d(f(x) e^{jk}).

    ``f`` is sin or cos of sum_a 2 pi wave[a] x_a / L_a; ``form`` holds 1-based
    indices (j, k).
    """
    amplitude: float
    wave: tuple
    form: tuple
    func: str = "sin"


def mode_potential(spec, mode):
    """The 2-form f e^{jk} sampled on the lattice, shape (n, 21)."""
    x = spec.coordinates()
    period = np.array(spec.dims) * np.array(spec.spacing)
    arg = x @ (2 * np.pi * np.asarray(mode.wave, dtype=float) / period)
    if mode.func == "sin":
        f = np.sin(arg)
    elif mode.func == "cos":
        f = np.cos(arg)
    else:
        raise ValueError(f"mode function must be sin or cos, got {mode.func!r}")
    return mode.amplitude * f[:, None] * forms.basis_form(mode.form)[None, :]


def perturbed_phi(spec, modes=()):
    """phi_0 + sum_m eps_m d(f_m e^{j_m k_m}); closed to rounding by construction.

    Positivity is checked; NotPositive carries the offending site.
    """
    phi = np.tile(algebra.standard_phi(), (spec.n_sites, 1))
    if modes:
        beta = sum(mode_potential(spec, m) for m in modes)
        phi = phi + exterior_d_flat(beta, 2, spec)
    margin = algebra.positivity_margin(phi)
    bad = np.flatnonzero(~(margin > algebra.POSITIVITY_TOL))
    if len(bad):
        site = int(bad[0])
        raise NotPositive(f"initial 3-form not positive at site {spec.unravel(site)} "
                          f"(margin {margin[site]:.3e})", site=site, margin=float(margin[site]))
    return phi


def default_modes(eps=1e-2):
    """Band-limited closed perturbation varying along axes 1-3."""
    return (
        Mode(eps, (1, 1, 0, 0, 0, 0, 0), (3, 4), "sin"),
        Mode(eps, (0, 1, 0, 0, 0, 0, 0), (1, 5), "cos"),
        Mode(eps, (-1, 0, 1, 0, 0, 0, 0), (2, 6), "sin"),
        Mode(0.5 * eps, (0, 1, 1, 0, 0, 0, 0), (1, 7), "cos"),
    )


class FlowState:
    """A closed lattice 3-form at a time stamp, with cached derived fields.

    Caches are dropped whenever ``phi`` is reassigned.
    """

    def __init__(self, spec: LatticeSpec, phi, time=0.0):
        self.spec = spec
        self.time = float(time)
        self.phi = phi

    @classmethod
    def from_field(cls, field, time=0.0):
        if field.kind != "form3":
            raise ValueError(f"expected a form3 field, got {field.kind}")
        return cls(field.spec, field.flat.copy(), time)

    @property
    def phi(self):
        return self._phi

    @phi.setter
    def phi(self, value):
        value = np.asarray(value, dtype=float)
        self._phi = value.reshape(self.spec.n_sites, 35)
        self._cache = {}

    def field(self):
        return LatticeField.from_flat(self.spec, "form3", self._phi)

    def copy(self):
        return FlowState(self.spec, self._phi.copy(), self.time)

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def metric(self):
        return self._get("metric", lambda: metric_field(self._phi))

    @property
    def psi(self):
        return self._get("psi", lambda: algebra.hodge_star(self._phi, self.metric, 3))

    @property
    def tau(self):
        return self._get("tau", lambda: curvature.tau_from_psi(self.psi, self.metric, self.spec))

    @property
    def T(self):
        return -0.5 * forms.to_full(self.tau, 2)

    @property
    def velocity(self):
        return self._get("velocity", lambda: curvature.velocity_from_tau(self.tau, self.spec))

    @property
    def gamma(self):
        return self._get("gamma", lambda: curvature.christoffels(self.metric, self.spec))

    @property
    def curvature(self):
        return self._get("curvature", lambda: curvature.riemann(self.metric, self.gamma, self.spec))

    @property
    def grad_T(self):
        return self._get("gradT", lambda: curvature.grad_torsion(self.T, self.gamma, self.spec))

    @property
    def lam(self):
        return self._get("lambda", lambda: curvature.lambda_field(self.grad_T, self.curvature.Rm, self.metric))

    def total_volume(self):
        return float(np.sum(self.metric.vol) * self.spec.cell_volume)
