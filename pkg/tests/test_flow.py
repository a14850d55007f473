from types import SimpleNamespace

import numpy as np
import pytest

from g2flow import flow
from g2flow.errors import ConfigInvalid, InsufficientData, NotMonotone
from g2flow.lattice import LatticeSpec, exterior_d_flat
from g2flow.state import FlowState, Mode, perturbed_phi

MODES = (
    Mode(2e-2, (1, 1, 0, 0, 0, 0, 0), (3, 4), "sin"),
    Mode(2e-2, (0, 1, 0, 0, 0, 0, 0), (1, 5), "cos"),
)


def perturbed(n=8, active=2, modes=MODES):
    spec = LatticeSpec.cube(n, active=active)
    return FlowState(spec, perturbed_phi(spec, modes))


def flat(n=5):
    spec = LatticeSpec.cube(n)
    return FlowState(spec, perturbed_phi(spec))


@pytest.mark.parametrize("kw", [dict(dt_init=-1.0), dict(t_max=0.0), dict(c_dt=1.5),
                                dict(integrator="heun"), dict(monitor_every=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigInvalid):
        flow.FlowConfig(**kw)


def test_adaptive_dt_flat_is_cfl_cap():
    st = flat()
    cfg = flow.FlowConfig()
    assert flow.adaptive_dt(st, cfg) == flow.cfl_cap(st.spec, cfg.c_grid)


def test_adaptive_dt_formula():
    spec = LatticeSpec.cube(8)
    fake = SimpleNamespace(lam=SimpleNamespace(sup=100.0), spec=spec)
    cfg = flow.FlowConfig(c_dt=0.1)
    assert flow.adaptive_dt(fake, cfg) == min(1e-3, 0.1 * spec.spacing[0] ** 2)
    fake.lam.sup = 1e-3
    assert flow.adaptive_dt(fake, cfg) == 0.1 * spec.spacing[0] ** 2


def test_cfl_cap_quarters_when_spacing_halves():
    a = flow.cfl_cap(LatticeSpec.cube(8))
    b = flow.cfl_cap(LatticeSpec.cube(16))
    assert np.isclose(a / b, 4.0)


def test_step_torsion_free_is_stationary():
    st = flat()
    phi0 = st.phi.copy()
    for integrator in ("euler", "rk4"):
        new = flow.step(st, 0.3, integrator)
        assert np.array_equal(new.phi, phi0)
        assert new.time == 0.3


def test_step_rejects_nonpositive_dt():
    with pytest.raises(ValueError):
        flow.step(flat(), 0.0)


def test_euler_step_increases_volume():
    st = perturbed()
    new = flow.step(st, flow.cfl_cap(st.spec), "euler")
    assert new.total_volume() > st.total_volume()
    assert np.all(new.metric.vol >= st.metric.vol - 1e-12)


def test_velocity_scales_linearly_under_cubic_scaling():
    st = perturbed()
    lam = 1.7
    st2 = FlowState(st.spec, lam ** 3 * st.phi)
    v = lam * flow.velocity(st)
    assert np.abs(flow.velocity(st2) - v).max() < 1e-11 * np.abs(v).max()


def test_integrator_orders():
    st = perturbed(n=8)
    T = 0.4
    ref = st
    for _ in range(64):
        ref = flow.step(ref, T / 64, "rk4")

    def solve(nsteps, integrator):
        s = st
        for _ in range(nsteps):
            s = flow.step(s, T / nsteps, integrator)
        return np.abs(s.phi - ref.phi).max()

    e = [solve(n, "euler") for n in (4, 8)]
    r = [solve(n, "rk4") for n in (2, 4)]
    assert 1.7 < e[0] / e[1] < 2.3
    assert 12 < r[0] / r[1] < 20


def test_run_flat_reaches_t_max():
    res = flow.run(flat(), flow.FlowConfig(t_max=1.0))
    assert res.termination == "t_max_reached"
    assert res.state.time == pytest.approx(1.0)
    assert all(r.lambda_sup == 0 for r in res.records)
    vols = [r.total_volume for r in res.records]
    assert vols == [vols[0]] * len(vols)


def test_run_perturbed_invariants():
    st = perturbed()
    res = flow.run(st, flow.FlowConfig(t_max=0.5, monitor_every=1))
    v = np.array([r.total_volume for r in res.records])
    assert np.all(np.diff(v) >= -1e-12 * v[0])
    assert max(r.closed_residual for r in res.records) < 1e-12 * np.abs(st.phi).max()
    t = [r.t for r in res.records]
    assert t == sorted(t)


def test_run_lambda_abort():
    res = flow.run(perturbed(), flow.FlowConfig(lambda_abort=1e-6))
    assert res.termination == "lambda_abort" and res.steps == 0


def test_run_positivity_loss_is_a_termination():
    st = perturbed(modes=(Mode(0.3, (1, 0, 0, 0, 0, 0, 0), (2, 3)),))
    res = flow.run(st, flow.FlowConfig(adaptive=False, dt_init=50.0, t_max=100.0))
    assert res.termination == "left_positive_cone"
    assert res.failure_site is not None


def test_run_max_steps():
    res = flow.run(perturbed(), flow.FlowConfig(t_max=10.0, max_steps=3))
    assert res.termination == "max_steps_reached" and res.steps == 3


def test_rescale():
    st = perturbed()
    assert np.array_equal(flow.rescale(st, 0, 1.0).phi, st.phi)
    site = st.lam.argmax
    K = st.lam.sup
    new = flow.rescale(st, site, K)
    assert new.lam.values[site] == pytest.approx(1.0, rel=1e-10)
    assert np.abs(new.metric.g - K * st.metric.g).max() < 1e-10 * K * np.abs(st.metric.g).max()
    with pytest.raises(ValueError):
        flow.rescale(st, 0, -1.0)


def model_records(C, T0, n=12):
    t = np.linspace(0, 0.9 * T0, n)
    return [(ti, C / (T0 - ti)) for ti in t]


def test_blowup_fit_exact_models():
    T0, C, q = flow.blowup_fit(model_records(1.0, 1.0))
    assert abs(T0 - 1) < 1e-6 and abs(C - 1) < 1e-6 and q > 0.999
    T0, C, _ = flow.blowup_fit(model_records(2.0, 3.0))
    assert abs(T0 - 3) < 1e-6 and abs(C - 2) < 1e-6


def test_blowup_fit_errors():
    with pytest.raises(InsufficientData):
        flow.blowup_fit(model_records(1.0, 1.0, n=4))
    with pytest.raises(NotMonotone):
        flow.blowup_fit([(t, 0.0) for t in range(6)])
    res = flow.run(flat(), flow.FlowConfig(t_max=1.0, monitor_every=1))
    with pytest.raises(NotMonotone):
        flow.blowup_fit(res.records)


def test_metric_rate_residual_small():
    st = perturbed(n=16)
    dt = 0.05 * flow.cfl_cap(st.spec)
    r = flow.metric_rate_residual(st, dt)
    assert r < 1e-2 * np.abs(flow.h_field(st)).max()


def test_record_row_order_matches_csv_header():
    rec = flow.diagnostics(flat())
    assert len(rec.row()) == len(flow.CSV_COLUMNS)
    assert [f for f in flow.DiagnosticsRecord.__dataclass_fields__] == list(flow.CSV_COLUMNS)


def test_closedness_preserved_by_rk4():
    st = perturbed()
    new = flow.step(st, flow.cfl_cap(st.spec))
    assert np.abs(exterior_d_flat(new.phi, 3, st.spec)).max() < 1e-14
