"""Periodic lattice fields on the flat 7-torus and their discrete calculus.

Fields are stored site-major: ``values`` has shape ``dims + fiber_shape`` and
``flat`` views it as ``(n_sites,) + fiber_shape`` in C order.  Derivatives are
central differences with periodic wraparound; axes with a single site carry
no variation and differentiate to exactly zero.
"""
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import algebra, forms
from .errors import AxisTooSmall, DegreeOutOfRange, SpecMismatch

DIM = 7
STENCILS = {
    2: ((1, 0.5), (-1, -0.5)),
    4: ((2, -1.0 / 12.0), (1, 8.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0)),
}
MIN_POINTS = {2: 3, 4: 5}
DEFAULT_CHUNK = 1024


def fiber_shape(kind):
    if kind == "scalar":
        return ()
    if kind.startswith("form"):
        return (forms.NCOMP[int(kind[4:])],)
    if kind == "skew2":
        return (forms.NCOMP[2],)
    if kind == "vector":
        return (DIM,)
    if kind == "sym2":
        return (DIM, DIM)
    if kind.startswith("tensor"):
        return (DIM,) * int(kind[6:])
    raise ValueError(f"unknown fiber kind {kind!r}")


@dataclass(frozen=True)
class LatticeSpec:
    dims: tuple
    spacing: tuple
    order: int = 2

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        spacing = tuple(float(h) for h in self.spacing)
        if len(dims) != DIM or len(spacing) != DIM:
            raise ValueError("dims and spacing need 7 entries each")
        if any(n < 1 for n in dims):
            raise ValueError(f"lattice dims must be >= 1, got {dims}")
        if not all(np.isfinite(h) and h > 0 for h in spacing):
            raise ValueError(f"spacing must be positive and finite, got {spacing}")
        if self.order not in STENCILS:
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)

    @classmethod
    def cube(cls, n, active=3, period=2 * np.pi, order=2):
        """N sites on the first ``active`` axes, one site elsewhere."""
        dims = (n,) * active + (1,) * (DIM - active)
        spacing = tuple(period / d for d in dims)
        return cls(dims, spacing, order)

    @property
    def n_sites(self):
        return int(np.prod(self.dims))

    @property
    def active_axes(self):
        return tuple(a for a in range(DIM) if self.dims[a] > 1)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    def min_active_spacing(self):
        axes = self.active_axes or tuple(range(DIM))
        return min(self.spacing[a] for a in axes)

    def coordinates(self):
        """Site coordinates, shape (n_sites, 7)."""
        grids = np.meshgrid(*[np.arange(n) * h for n, h in zip(self.dims, self.spacing)], indexing="ij")
        return np.stack([x.ravel() for x in grids], axis=-1)

    def unravel(self, site):
        return tuple(int(i) for i in np.unravel_index(site, self.dims))

    def check_axis(self, axis):
        n = self.dims[axis]
        if 1 < n < MIN_POINTS[self.order]:
            raise AxisTooSmall(f"axis {axis + 1} has {n} sites; order-{self.order} stencil needs {MIN_POINTS[self.order]}")


@lru_cache(maxsize=256)
def _neighbors(dims, axis, offset):
    idx = np.arange(int(np.prod(dims))).reshape(dims)
    return np.roll(idx, -offset, axis=axis).ravel()


@dataclass
class LatticeField:
    spec: LatticeSpec
    kind: str
    values: np.ndarray

    def __post_init__(self):
        shape = self.spec.dims + fiber_shape(self.kind)
        self.values = np.ascontiguousarray(self.values, dtype=float).reshape(shape)

    @classmethod
    def from_flat(cls, spec, kind, flat):
        return cls(spec, kind, np.asarray(flat).reshape(spec.dims + fiber_shape(kind)))

    @classmethod
    def constant(cls, spec, kind, value):
        value = np.asarray(value, dtype=float)
        return cls(spec, kind, np.broadcast_to(value, spec.dims + value.shape).copy())

    @property
    def flat(self):
        return self.values.reshape((self.spec.n_sites,) + fiber_shape(self.kind))

    def same_lattice(self, other):
        if self.spec != other.spec:
            raise SpecMismatch(f"lattice mismatch: {self.spec} vs {other.spec}")


# -- chunked evaluation -------------------------------------------------------

def n_threads():
    try:
        return max(1, int(os.environ.get("G2FLOW_THREADS", "1")))
    except ValueError:
        return 1


def site_chunks(n, size=DEFAULT_CHUNK):
    return [slice(s, min(s + size, n)) for s in range(0, n, size)]


def map_chunks(fn, n, size=DEFAULT_CHUNK):
    """Apply fn to consecutive site slices; results come back in site order."""
    chunks = site_chunks(n, size)
    workers = min(n_threads(), len(chunks))
    if workers <= 1:
        return [fn(s) for s in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def concat_chunks(fn, n, size=DEFAULT_CHUNK):
    parts = map_chunks(fn, n, size)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p, axis=0) for p in zip(*parts))
    return np.concatenate(parts, axis=0)


# -- derivatives --------------------------------------------------------------

def _site_index(spec, sites):
    if sites is None:
        return np.arange(spec.n_sites)
    if isinstance(sites, slice):
        return np.arange(spec.n_sites)[sites]
    return np.asarray(sites)


def diff(flat, spec, axis, sites=None):
    """Central difference along a 0-based axis, evaluated at ``sites``."""
    flat = np.asarray(flat)
    idx = _site_index(spec, sites)
    if spec.dims[axis] == 1:
        return np.zeros((len(idx),) + flat.shape[1:])
    spec.check_axis(axis)
    inv_h = 1.0 / spec.spacing[axis]
    out = None
    for off, w in STENCILS[spec.order]:
        term = flat[_neighbors(spec.dims, axis, off)[idx]] * w
        out = term if out is None else out + term
    return out * inv_h


def grad(flat, spec, sites=None):
    """All coordinate partials, shape (m, 7) + fiber; zero on inactive axes."""
    flat = np.asarray(flat)
    idx = _site_index(spec, sites)
    out = np.zeros((len(idx), DIM) + flat.shape[1:])
    for a in spec.active_axes:
        out[:, a] = diff(flat, spec, a, idx)
    return out


def partial(field, axis):
    """Partial derivative along a 1-based axis."""
    if not 1 <= axis <= DIM:
        raise ValueError(f"axis must be in 1..7, got {axis}")
    return LatticeField.from_flat(field.spec, field.kind, diff(field.flat, field.spec, axis - 1))


# -- exterior calculus --------------------------------------------------------

def _d_table(k):
    table = {}
    for a in range(DIM):
        rows = []
        for J, tup in enumerate(forms.COMBOS[k + 1]):
            if a in tup:
                p = tup.index(a)
                rest = tup[:p] + tup[p + 1:]
                rows.append((J, forms.INDEX[k][rest], (-1) ** p))
        table[a] = tuple(np.array(c) for c in zip(*rows))
    return table


_D_TABLES = {k: _d_table(k) for k in range(DIM)}


def form_degree(kind):
    if kind == "skew2":
        return 2
    if not kind.startswith("form"):
        raise DegreeOutOfRange(f"{kind} is not a form field")
    return int(kind[4:])


def exterior_d_flat(alpha, k, spec, sites=None):
    """(d alpha)_{j0..jk} = sum_p (-1)^p d_{jp} alpha_{j0..^jp..jk}, canonical storage."""
    if not 0 <= k <= DIM - 1:
        raise DegreeOutOfRange(f"cannot differentiate a {k}-form in 7 dimensions")
    idx = _site_index(spec, sites)
    out = np.zeros((len(idx), forms.NCOMP[k + 1]))
    for a in spec.active_axes:
        J, src, sgn = _D_TABLES[k][a]
        out[:, J] += sgn * diff(alpha, spec, a, idx)[:, src]
    return out


def exterior_d(field):
    k = form_degree(field.kind)
    return LatticeField.from_flat(field.spec, f"form{k + 1}", exterior_d_flat(field.flat, k, field.spec))


def metric_field(phi_flat, chunk=DEFAULT_CHUNK):
    """Sitewise metric of a lattice 3-form, with failing sites reported globally."""
    from .errors import NotPositive

    def one(s):
        try:
            m = algebra.metric_from_phi(phi_flat[s])
        except NotPositive as exc:
            raise NotPositive(str(exc), site=s.start + (exc.site or 0), margin=exc.margin) from None
        return m.g, m.g_inv, m.vol

    g, gi, vol = concat_chunks(one, len(phi_flat), chunk)
    return algebra.Metric(g, gi, vol)


def codifferential_flat(alpha, k, m, spec):
    """d* = (-1)^k * d * on k-forms over a 7-dimensional Riemannian lattice."""
    if not 1 <= k <= DIM:
        raise DegreeOutOfRange(f"codifferential needs degree >= 1, got {k}")
    star = algebra.hodge_star(alpha, m, k)
    dstar = exterior_d_flat(star, DIM - k, spec)
    return (-1) ** k * algebra.hodge_star(dstar, m, DIM - k + 1)


def codifferential(field, m):
    """Codifferential of a form field; ``m`` is a Metric over sites or a 3-form field."""
    k = form_degree(field.kind)
    if isinstance(m, LatticeField):
        m.same_lattice(field)
        m = metric_field(m.flat)
    return LatticeField.from_flat(field.spec, f"form{k - 1}", codifferential_flat(field.flat, k, m, field.spec))


def lattice_sum(values, spec):
    """Riemann sum over the torus (cell volume times site sum), pairwise ordered."""
    return float(np.sum(values) * spec.cell_volume)
