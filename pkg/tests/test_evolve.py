import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxwell_tails import evolve as ev, observe as ob
from maxwell_tails.background import Background, tortoise
from maxwell_tails.spinweight import ModeIndex

BG = Background(1.0)


def _setup(N=129, s=-1, l=1, family=None, **kw):
    mode = ModeIndex(s, l)
    grid = ev.RadialGrid(N)
    system = ev.build_system(BG, mode, grid, **kw)
    state = ev.make_initial_data(family or ev.DataFamily("compact-bump"), mode, grid, BG, system)
    return system, state


def test_zero_state_stays_zero():
    system, state = _setup()
    z = state.scaled(0.0)
    out = ev.step_hyperboloidal(z, system, system.dt_max(), 50)
    assert all(np.all(v == 0) for v in out.fields.values())


@settings(max_examples=10)
@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_linearity(a, b):
    system, x = _setup()
    _, y = _setup(family=ev.DataFamily("compact-bump", r_c=12.0, w=1.0, A=-0.5))
    comb = ev.HyperState(0.0, {k: a * x.fields[k] + b * y.fields[k] for k in x.fields},
                         {k: a * x.pis[k] + b * y.pis[k] for k in x.pis}, x.mode)
    dt = system.dt_max()
    ex, ey, ec = (ev.step_hyperboloidal(s, system, dt, 40) for s in (x, y, comb))
    for k in x.fields:
        ref = a * ex.fields[k] + b * ey.fields[k]
        scale = (abs(a) + abs(b)) * max(np.max(np.abs(ex.fields[k])), np.max(np.abs(ey.fields[k])))
        assert np.max(np.abs(ec.fields[k] - ref)) <= 1e-12 * max(scale, 1e-300)


def test_determinism():
    system, state = _setup()
    dt = system.dt_max()
    a = ev.step_hyperboloidal(state, system, dt, 100)
    b = ev.step_hyperboloidal(state, system, dt, 100)
    for k in a.fields:
        assert np.array_equal(a.fields[k], b.fields[k])


def test_cfl_violation_raises():
    system, state = _setup()
    with pytest.raises(ev.CFLError):
        ev.step_hyperboloidal(state, system, 1.01 * system.dt_max())
    with pytest.raises(ev.CFLError):
        ev.step_hyperboloidal(state, system, 0.0)


def test_non_finite_aborts():
    system, state = _setup()
    bad = state.copy()
    bad.fields["Phi0"][10] = np.nan
    with pytest.raises(ev.EvolutionAborted):
        ev.step_hyperboloidal(bad, system, system.dt_max())


def test_speed_bound_and_dt():
    system, _ = _setup(N=1025)
    assert system.max_speed() <= 1 / (2 * BG.r_plus) + 1e-12
    assert system.dt_max() == pytest.approx(0.5 * system.grid.h * 2 * BG.r_plus)


def test_fourth_order_self_convergence():
    # fixed CFL; compare the coarse nodes of three resolutions at tau = 10
    vals = []
    for N in (257, 513, 1025):
        system, state = _setup(N=N)
        dt = system.dt_max()
        n = int(round(10.0 / dt))
        out = ev.step_hyperboloidal(state, system, dt, n)
        vals.append(out.fields["Phi0"][:: (N - 1) // 256])
    e1 = np.max(np.abs(vals[0] - vals[1]))
    e2 = np.max(np.abs(vals[1] - vals[2]))
    assert np.log2(e1 / e2) > 3.5


def test_constraints_on_initial_slice_are_roundoff():
    system, state = _setup(N=513)
    c = ev.constraint_drift(state, system)
    assert c["phi1_rel"] < 1e-13
    assert c["phi2_rel"] < 1e-13


def test_constraint_drift_decreases_with_resolution():
    out = []
    for N in (257, 513):
        system, state = _setup(N=N)
        dt = system.dt_max()
        st_ = ev.step_hyperboloidal(state, system, dt, int(round(20.0 / dt)))
        out.append(ev.constraint_drift(st_, system)["phi1"])
    assert out[0] / out[1] > 8


@pytest.mark.parametrize("s", [-1, 1])
def test_npc_of_unit_data_is_conserved(s):
    fam = ev.DataFamily("npc-charged", A=0.0, N_inf=1.0)
    system, state = _setup(N=513, s=s, family=fam)
    v0 = ob.np_constant(state, 1, s, system)[1]
    assert v0 == pytest.approx(1.0, rel=1e-6)
    dt = system.dt_max()
    later = ev.step_hyperboloidal(state, system, dt, int(round(50.0 / dt)))
    assert ob.np_constant(later, 1, s, system)[1] == pytest.approx(v0, rel=1e-8)


def test_compact_data_have_zero_npc():
    system, state = _setup(N=513)
    assert abs(ob.np_constant(state, 1, -1, system)[1]) < 1e-12


def test_data_errors():
    mode = ModeIndex(-1, 1)
    grid = ev.RadialGrid(129)
    with pytest.raises(ValueError):
        ev.make_initial_data(ev.DataFamily("monopole-charge", q=1.0), mode, grid, BG)
    with pytest.raises(ValueError):
        ev.make_initial_data(ev.DataFamily("compact-bump", r_c=4.0, w=0.5), mode, grid, BG)
    with pytest.raises(ValueError):
        ev.make_initial_data(ev.DataFamily("npc-charged", N_inf=1.0), ModeIndex(-1, 2), grid, BG)
    with pytest.raises(ValueError):
        ev.RadialGrid(32)


def test_observer_series_and_sampling():
    system, state = _setup()
    run = ev.evolve_hyperboloidal(system, state, 5.0, sample_dt=0.5, observers=(0.0, 0.2, 0.37))
    assert run.status == "ok"
    assert run.series["Phi0"].shape == (3, len(run.tau))
    assert run.tau[-1] == pytest.approx(5.0, abs=system.dt_max())
    # exact node sample
    i = system.grid.node_of(0.0)
    assert run.series["Phi0"][0, -1] == run.final.fields["Phi0"][i]


def _char(h, extent=20.0, fields=("Phi0", "Phi1", "psi0", "psi0_l0"), q=0.25):
    n = int(round(extent / h))
    cu, cv = ev.maxwell_cone_data(BG, 1, lambda r: ev.bump(r, 8.0, 1.0), 0.0, 0.0, h, n, n, q=q)
    cu = {k: cu[k] for k in fields}
    cv = {k: cv[k] for k in fields}
    return ev.evolve_characteristic(cu, cv, 0.0, 0.0, h, n, n, BG, ModeIndex(-1, 1),
                                    observers_rstar=[float(tortoise(BG, 10.0))])


def test_characteristic_second_order():
    sols = [_char(h) for h in (0.2, 0.1, 0.05)]
    s0 = sols[0].fields["Phi0"]
    s1 = sols[1].fields["Phi0"][::2, ::2]
    s2 = sols[2].fields["Phi0"][::4, ::4]
    ratio = np.max(np.abs(s0 - s1)) / np.max(np.abs(s1 - s2))
    assert 3.2 < ratio < 4.8


def test_characteristic_charge_is_constant():
    sol = _char(0.1)
    c = sol.fields["psi0_l0"]
    assert np.max(np.abs(c - c[0, 0])) <= 1e-14 * abs(c[0, 0])


def test_cone_data_corner_mismatch_rejected():
    n = 50
    cu, cv = ev.maxwell_cone_data(BG, 1, lambda r: ev.bump(r, 8.0, 1.0), 0.0, 0.0, 0.1, n, n)
    cv = {k: v.copy() for k, v in cv.items()}
    cv["Phi0"][0] += 1.0
    with pytest.raises(ValueError):
        ev.evolve_characteristic(cu, cv, 0.0, 0.0, 0.1, n, n, BG, ModeIndex(-1, 1))


def test_cone_recorder_fills_both_cones():
    system, state = _setup(N=257)
    rec = ev.ConeRecorder(BG, system.grid, ("Phi0", "Phi1"), 0.0, 0.0, 0.1, 100, 120)
    ev.evolve_hyperboloidal(system, state, rec.tau_max + 1.0, observers=(0.0,), per_step=rec,
                            per_step_until=rec.tau_max + 1.0)
    assert rec.complete
    cu, cv = rec.cone_data()
    assert cu["Phi0"][0] == pytest.approx(cv["Phi0"][0], abs=1e-12)
