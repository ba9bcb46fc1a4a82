import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from maxwell_tails import evolve as ev, observe as ob
from maxwell_tails.background import Background
from maxwell_tails.spinweight import ModeIndex

BG = Background(1.0)


@given(st.floats(0.5, 5.0), st.floats(1e-3, 1e3), st.sampled_from([1.0, -1.0, 1j]))
def test_lpi_exact_for_power_laws(p, c, phase):
    tau = np.linspace(10, 2000, 1991)
    fit = ob.local_power_index(tau, phase * c * tau**-p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.window == (1000.0, 2000.0)
    assert not fit.flagged


def test_window_moves_past_last_zero_crossing():
    tau = np.linspace(10, 2000, 1991)
    f = tau**-3.0 * (1 - 1200.3 / tau)  # one sign change, between samples
    fit = ob.local_power_index(tau, f)
    assert fit.advanced
    assert fit.window[0] >= 1200.3
    # window no longer spans a factor 2
    assert fit.exponent is None and "factor" in fit.reason


def test_floor_plateau_is_flagged_without_exponent():
    tau = np.linspace(1, 2000, 2000)
    f = np.full_like(tau, 1e-18)
    f[:5] = [1.0, 0.5, 0.1, 1e-3, 1e-9]
    fit = ob.local_power_index(tau, f)
    assert fit.flagged
    assert fit.exponent is None


def test_floor_flags_are_sticky():
    f = np.array([1.0, 1e-14, 1.0, 1.0])
    assert ob.floor_flags(f).tolist() == [False, True, True, True]


def test_explicit_window_too_short():
    tau = np.linspace(10, 100, 200)
    fit = ob.local_power_index(tau, tau**-2.0, window=(60.0, 100.0))
    assert fit.exponent is None


def _state_from_profile(N, f):
    mode = ModeIndex(1, 1)
    grid = ev.RadialGrid(N)
    system = ev.build_system(BG, mode, grid)
    vals = f(grid.sigma)
    st_ = ev.HyperState(0.0, {"Psi_plus": vals.astype(complex)}, {"Psi_plus": np.zeros(N, complex)}, mode)
    return st_, system


def test_energy_matches_quadrature():
    # F(0, 2) = int (r - R)^2 |f_r|^2 dr + int |f|^2 / r^2 dr for a static profile
    R = BG.r_plus
    g = lambda r: np.exp(-(r - 5.0) ** 2)
    gr = lambda r: -2 * (r - 5.0) * g(r)

    def prof(sig):
        with np.errstate(divide="ignore"):
            r = np.where(sig > 0, R / np.where(sig > 0, sig, 1.0), np.inf)
        return np.where(sig > 0, g(r), 0.0)

    st_, system = _state_from_profile(8193, prof)
    val = ob.energy_F(st_, ob.EnergySpec(0, 2.0, "Psi_plus"), system)
    ref = (integrate.quad(lambda r: (r - R) ** 2 * gr(r) ** 2, R, 60, epsabs=0, epsrel=1e-13, limit=200)[0]
           + integrate.quad(lambda r: g(r) ** 2 / r**2, R, 60, epsabs=0, epsrel=1e-13, limit=200)[0])
    assert val == pytest.approx(ref, rel=1e-8)


@given(st.floats(0.1, 3.0))
def test_energy_is_quadratic(c):
    st_, system = _state_from_profile(257, lambda s: np.sin(3 * s) * s)
    spec = ob.EnergySpec(0, 1.0, "Psi_plus")
    assert ob.energy_F(st_.scaled(c), spec, system) == pytest.approx(c * c * ob.energy_F(st_, spec, system),
                                                                      rel=1e-12)


def test_energy_spec_ranges():
    with pytest.raises(ob.MeasurementError):
        ob.EnergySpec(0, 2.5, "Phi0")
    with pytest.raises(ob.MeasurementError):
        ob.EnergySpec(0, 5.0, "P2")
    with pytest.raises(ob.MeasurementError):
        ob.EnergySpec(2, 1.0, "Phi0")
    ob.EnergySpec(1, 4.5, "P2")


def test_first_order_energy_dominates_zeroth():
    st_, system = _state_from_profile(257, lambda s: np.sin(3 * s) * s)
    e0 = ob.energy_F(st_, ob.EnergySpec(0, 1.0, "Psi_plus"), system)
    e1 = ob.energy_F(st_, ob.EnergySpec(1, 1.0, "Psi_plus"), system)
    assert e1 > e0


def test_np_constant_errors():
    st_, system = _state_from_profile(257, lambda s: s)
    with pytest.raises(ob.MeasurementError):
        ob.np_constant(st_, 2, 1, system)
    with pytest.raises(ob.MeasurementError):
        ob.np_constant(st_, 1, -1, system)


def test_npc_of_exact_tail_profile():
    # Psi_plus = -sigma/R near scri: curlyV_R (Psi/(1-sigma)) -> 1 at sigma = 0
    st_, system = _state_from_profile(513, lambda s: -s / BG.r_plus * (1 - ev.smooth_step((s - 0.1) / 0.1)))
    assert ob.np_constant(st_, 1, 1, system)[1] == pytest.approx(1.0, rel=1e-10)


def test_charge_record():
    q = 0.3 - 0.1j
    samples = np.full(50, math.sqrt(4 * math.pi) * q)
    rec = ob.charge(samples, reference=q)
    assert rec.q == pytest.approx(q)
    assert rec.spread < 1e-15
    with pytest.raises(ob.MeasurementError):
        ob.charge(np.array([np.nan]))


def test_stationary_subtraction():
    r = np.array([3.0, 10.0])
    psi0 = np.array([0.5 + 0.2, 0.5 + 0.01])
    assert np.allclose(ob.stationary_subtraction(psi0, 0.5, r), np.array([0.2, 0.01]) / r**2)


def test_npc_drift():
    rec = ob.NPConstantRecord(1, -1)
    for t, v in ((100, 2.0), (200, 1.0), (300, 1.01), (400, 0.995)):
        rec.append(t, v, v, False)
    assert rec.drift(200) == pytest.approx(0.01)
    with pytest.raises(ob.MeasurementError):
        rec.drift(1000)


def test_fast_decay_reaches_floor():
    # tau^-6 from tau = 10 to 2000 spans more than 1e3 ulps: the tail end is flagged
    tau = np.linspace(10, 2000, 1991)
    fit = ob.local_power_index(tau, tau**-6.0)
    assert fit.flagged
    assert fit.window[1] < 2000
    assert fit.exponent == pytest.approx(6.0, abs=1e-9)


def test_quadratic_series_floor_uses_square_root():
    tau = np.linspace(10, 2000, 1991)
    energy = tau**-10.0  # square of a tau^-5 field
    assert ob.local_power_index(tau, energy).flagged
    fit = ob.local_power_index(tau, energy, quadratic=True)
    assert not fit.flagged
    assert fit.exponent == pytest.approx(10.0, abs=1e-9)
