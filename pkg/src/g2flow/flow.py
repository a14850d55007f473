"""Explicit time stepping of the Laplacian flow of closed G2 structures."""
from dataclasses import dataclass, field, fields

import numpy as np

from . import algebra
from .curvature import h_tensor_chunk
from .errors import ConfigInvalid, InsufficientData, LeftPositiveCone, NotMonotone, NotPositive
from .lattice import DEFAULT_CHUNK, concat_chunks, exterior_d_flat
from .state import FlowState

EPS_FLOOR = 1e-8
CSV_COLUMNS = ("t", "lambda_sup", "T_sup", "velocity_sup", "total_volume",
               "closed_residual", "scalar_residual", "trace_h_residual", "dt")
TERMINATIONS = ("t_max_reached", "lambda_abort", "left_positive_cone", "max_steps_reached")


@dataclass
class FlowConfig:
    dt_init: float = 1e-3
    c_dt: float = 0.1
    t_max: float = 1.0
    integrator: str = "rk4"
    monitor_every: int = 1
    lambda_abort: float = 1e6
    c_grid: float = 0.1
    adaptive: bool = True
    max_steps: int = 0          # 0 means no step limit

    def __post_init__(self):
        if not self.dt_init > 0:
            raise ConfigInvalid(f"dt_init must be positive, got {self.dt_init}")
        if not self.t_max > 0:
            raise ConfigInvalid(f"t_max must be positive, got {self.t_max}")
        if not 0 < self.c_dt < 1:
            raise ConfigInvalid(f"c_dt must lie in (0, 1), got {self.c_dt}")
        if not self.c_grid > 0:
            raise ConfigInvalid(f"c_grid must be positive, got {self.c_grid}")
        if self.integrator not in ("euler", "rk4"):
            raise ConfigInvalid(f"integrator must be euler or rk4, got {self.integrator!r}")
        if self.monitor_every < 1:
            raise ConfigInvalid("monitor_every must be at least 1")
        if not self.lambda_abort > 0:
            raise ConfigInvalid("lambda_abort must be positive")
        if self.max_steps < 0:
            raise ConfigInvalid("max_steps must be non-negative")


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    lambda_sup: float
    T_sup: float
    velocity_sup: float
    total_volume: float
    closed_residual: float
    scalar_residual: float
    trace_h_residual: float
    dt: float

    def row(self):
        return [getattr(self, f.name) for f in fields(self)]


@dataclass
class RunResult:
    state: FlowState
    records: list
    termination: str
    steps: int
    failure_site: int = None
    doubling_time: float = None   # first t with lambda_sup > 2 lambda_sup(0), if seen
    c_obs: float = None           # 1 / (doubling_time * lambda_sup(0))
    extra: dict = field(default_factory=dict)


def velocity(state):
    """Laplacian of phi, computed as d(tau); an exact 3-form."""
    return state.velocity


def _advance(state, phi, dt):
    new = FlowState(state.spec, phi, state.time + dt)
    try:
        new.metric
    except NotPositive as exc:
        raise LeftPositiveCone(f"left the positive cone at site {exc.site}",
                               site=exc.site, margin=exc.margin) from exc
    return new


def step(state, dt, integrator="rk4"):
    """One explicit step; every stage velocity is exact, so d(phi) stays zero."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    phi = state.phi
    if integrator == "euler":
        return _advance(state, phi + dt * velocity(state), dt)
    if integrator != "rk4":
        raise ValueError(f"unknown integrator {integrator!r}")
    k1 = velocity(state)
    k2 = velocity(_advance(state, phi + 0.5 * dt * k1, 0.5 * dt))
    k3 = velocity(_advance(state, phi + 0.5 * dt * k2, 0.5 * dt))
    k4 = velocity(_advance(state, phi + dt * k3, dt))
    return _advance(state, phi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4), dt)


def cfl_cap(spec, c_grid=0.1):
    return c_grid * spec.min_active_spacing() ** 2


def adaptive_dt(state, cfg):
    lam = state.lam.sup
    return min(cfg.c_dt / max(lam, EPS_FLOOR), cfl_cap(state.spec, cfg.c_grid))


def _pointwise_norm(alpha, k, m):
    return np.sqrt(np.maximum(algebra.inner(alpha, alpha, k, m), 0.0))


def h_field(state, chunk=DEFAULT_CHUNK):
    """Symmetric tensor h with i_phi(h) = d tau; the metric moves by dg/dt = 2h."""
    return concat_chunks(lambda s: h_tensor_chunk(state.phi, state.tau, state.gamma, state.metric,
                                                  state.spec, s)[0], state.spec.n_sites, chunk)


def diagnostics(state, dt=0.0):
    m = state.metric
    T = state.T
    Tn = np.einsum("mij,mik,mjl,mkl->m", T, m.g_inv, m.g_inv, T)
    h = h_field(state)
    trace_h = np.einsum("mij,mij->m", h, m.g_inv)
    return DiagnosticsRecord(
        t=state.time,
        lambda_sup=state.lam.sup,
        T_sup=float(np.sqrt(Tn.max())),
        velocity_sup=float(_pointwise_norm(state.velocity, 3, m).max()),
        total_volume=state.total_volume(),
        closed_residual=float(np.max(np.abs(exterior_d_flat(state.phi, 3, state.spec)))),
        scalar_residual=float(np.max(np.abs(state.curvature.scalar + Tn))),
        trace_h_residual=float(np.max(np.abs(trace_h - (2.0 / 3.0) * Tn))),
        dt=float(dt),
    )


def run(state0, cfg, on_record=None, on_step=None):
    """Integrate until t_max, lambda_abort, positivity loss or max_steps.

    ``on_record(record)`` sees each diagnostics record; ``on_step(state, n)``
    sees every accepted state (used for snapshot cadence).
    """
    state = state0
    records = [diagnostics(state)]
    if on_record:
        on_record(records[0])
    lam0 = records[0].lambda_sup
    result = RunResult(state, records, "t_max_reached", 0)

    def note_doubling(lam, t):
        if result.doubling_time is None and lam0 > 0 and lam > 2 * lam0:
            result.doubling_time = t
            result.c_obs = 1.0 / (t * lam0)

    n = 0
    while True:
        if state.lam.sup > cfg.lambda_abort:
            result.termination = "lambda_abort"
            break
        remaining = cfg.t_max - state.time
        if remaining <= 1e-14 * max(1.0, cfg.t_max):
            result.termination = "t_max_reached"
            break
        if cfg.max_steps and n >= cfg.max_steps:
            result.termination = "max_steps_reached"
            break
        dt = adaptive_dt(state, cfg) if cfg.adaptive else cfg.dt_init
        dt = min(dt, remaining)
        try:
            state = step(state, dt, cfg.integrator)
        except LeftPositiveCone as exc:
            result.termination = "left_positive_cone"
            result.failure_site = exc.site
            break
        n += 1
        if on_step:
            on_step(state, n)
        note_doubling(state.lam.sup if cfg.adaptive else 0.0, state.time)
        if n % cfg.monitor_every == 0:
            rec = diagnostics(state, dt)
            note_doubling(rec.lambda_sup, rec.t)
            records.append(rec)
            if on_record:
                on_record(rec)
    if records[-1].t != state.time:
        rec = diagnostics(state, dt)
        records.append(rec)
        if on_record:
            on_record(rec)
    result.state = state
    result.steps = n
    return result


def rescale(state, base_site, K):
    """Parabolic dilation phi -> K^{3/2} phi; the metric becomes K g and Lambda drops by K.

    ``base_site`` is validated but only matters for the caller's bookkeeping.
    """
    if not K > 0:
        raise ValueError(f"K must be positive, got {K}")
    if not 0 <= base_site < state.spec.n_sites:
        raise IndexError(f"site {base_site} outside lattice of {state.spec.n_sites} sites")
    if K == 1:
        return FlowState(state.spec, state.phi.copy(), state.time)
    return FlowState(state.spec, K ** 1.5 * state.phi, state.time)


def blowup_fit(records):
    """Fit 1/Lambda = alpha + beta t; blow-up model Lambda = C/(T0 - t).

    Accepts DiagnosticsRecord objects or (t, lambda_sup) pairs. Returns
    (T0, C, r_squared).
    """
    pts = [(r.t, r.lambda_sup) if isinstance(r, DiagnosticsRecord) else tuple(r) for r in records]
    if len(pts) < 5:
        raise InsufficientData(f"need at least 5 records, got {len(pts)}")
    t, lam = np.array(pts, dtype=float).T
    if not (np.all(lam > 0) and np.all(np.diff(lam) > 0)):
        raise NotMonotone("lambda_sup must be positive and strictly increasing")
    inv = 1.0 / lam
    A = np.column_stack([np.ones_like(t), t])
    (alpha, beta), *_ = np.linalg.lstsq(A, inv, rcond=None)
    if not beta < 0:
        raise NotMonotone("1/lambda does not decrease; no finite blow-up time")
    fit = A @ np.array([alpha, beta])
    ss_tot = np.sum((inv - inv.mean()) ** 2)
    r2 = 1.0 - np.sum((inv - fit) ** 2) / ss_tot if ss_tot > 0 else 1.0
    return float(-alpha / beta), float(-1.0 / beta), float(r2)


def metric_rate_residual(state, dt, integrator="euler"):
    """sup |(g(t+dt) - g(t))/dt - 2h| after a single step."""
    g0 = state.metric.g
    h = h_field(state)
    g1 = step(state, dt, integrator).metric.g
    return float(np.max(np.abs((g1 - g0) / dt - 2.0 * h)))
