from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from maxwell_tails import equations as eq
from maxwell_tails.background import Background, height_gauge
from maxwell_tails.spinweight import ModeError, ModeIndex

BG = Background(1.0)
R = BG.r_plus


def test_hierarchy_known_entries():
    spec = eq.hierarchy_coefficients(4)
    assert spec.x[(1, 0)] == 3
    assert spec.x[(2, 0)] == Fraction(-72, 5)
    assert float(spec.x[(2, 0)]) == -14.4
    assert spec.x[(2, 1)] == 8


@given(st.integers(0, 10))
def test_cancellation_residuals_vanish(i_max):
    spec = eq.hierarchy_coefficients(i_max)
    assert all(v == 0 for v in eq.cancellation_residuals(spec).values())
    assert all(isinstance(v, Fraction) for v in spec.x.values())


def test_tilde_transform_linear_combination():
    spec = eq.hierarchy_coefficients(3)
    phis = [np.full(3, 1.0), np.full(3, 2.0), np.full(3, 5.0)]
    out = eq.tilde_transform(phis, spec, M=0.5)
    assert np.allclose(out[1], 2.0 + 3 * 0.5 * 1.0)
    assert np.allclose(out[2], 5.0 + 8 * 0.5 * out[1] + (-14.4) * 0.25 * out[0])


# ---------------------------------------------------------------------------
# the hyperboloidal and double-null forms are one PDE: map the double-null operator
# through tau = t + r* - h(r), sigma = 2M/r and compare coefficient vectors

_tau, _s = sp.symbols("tau s")
_F = sp.Function("F")(_tau, _s)


def _Drs(e):
    # d/dr* at fixed t: (1 - mu h') d_tau + (d sigma / d r*) d_sigma, mu h' = 2(1 - s^2)
    return (2 * _s**2 - 1) * sp.diff(e, _tau) - (1 - _s) * _s**2 / R * sp.diff(e, _s)


def _Du(e):
    return sp.diff(e, _tau) - _Drs(e)


def _Dv(e):
    return sp.diff(e, _tau) + _Drs(e)


_BASIS = [sp.diff(_F, _tau, 2), sp.diff(_F, _tau, _s), sp.diff(_F, _s, 2), sp.diff(_F, _tau), sp.diff(_F, _s), _F]
_PARTS = [sp.expand(x) for x in (_Du(_Dv(_F)), _Du(_F), _Dv(_F), _F)]


def _dn_vector(a, s0):
    total = sum(ai * p for ai, p in zip(a, _PARTS))
    total = sp.expand(total)
    vec = []
    for b in _BASIS:
        c = total.coeff(b) if b is not _F else total.subs({x: 0 for x in _BASIS[:-1]}).coeff(_F)
        vec.append(float(sp.N(c.subs(_s, s0))))
    return np.array(vec)


def _pairs():
    out = []
    for l in (1, 2, 3):
        hyp = eq.assemble_minus_system(BG, l, height_gauge(BG), np.linspace(0, 1, 9), "hyperboloidal")
        s_nodes = np.linspace(0, 1, 9)[1:-1]
        dn = eq.assemble_minus_system(BG, l, None, R / s_nodes, "double-null")
        out += list(zip(hyp, dn))
        out.append((eq.assemble_plus(BG, l, None, np.linspace(0, 1, 9), "hyperboloidal"),
                    eq.assemble_plus(BG, l, None, R / s_nodes, "double-null")))
    return out


@pytest.mark.parametrize("pair", _pairs(), ids=lambda p: f"{p[0].name}_l{p[0].equation.l}")
def test_forms_agree(pair):
    hyp, dn = pair
    for k, s0 in enumerate(hyp.nodes[1:-1]):
        a = dn.coefficients[:, k]
        v_dn = _dn_vector(a, s0)
        v_h = hyp.coefficients[:, k + 1]
        kfac = v_dn[2] / v_h[2]
        assert np.allclose(v_dn, kfac * v_h, rtol=1e-10, atol=1e-10 * np.max(np.abs(v_dn)))
        for (n1, c1), (n2, c2) in zip(hyp.couplings, dn.couplings):
            assert n1 == n2
            assert c2[k] == pytest.approx(kfac * c1[k + 1], rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("l", [1, 2, 4])
def test_outflow_at_both_boundaries(l):
    grid = np.linspace(0, 1, 65)
    ops = list(eq.assemble_minus_system(BG, l, None, grid)) + [eq.assemble_plus(BG, l, None, grid)]
    for op in ops:
        lo, hi = op.characteristic_speeds()
        assert op.outflow_ok()
        assert np.all(np.maximum(np.abs(lo), np.abs(hi)) <= 1 / (2 * R) + 1e-12)


def test_static_ell1_middle_solution():
    # psi_0 = r^2 is a static l = 1 solution; in sigma it is R^2 / sigma^2
    op = eq.assemble_middle(BG, 1, None, np.linspace(0, 1, 41), "hyperboloidal")
    s = op.nodes[1:]
    op = eq.ModeOperator(op.name, op.form, s, op.coefficients[:, 1:], op.couplings, 0, op.equation, BG)
    u = R**2 / s**2
    res = eq.apply_operator(op, u, -2 * R**2 / s**3, 6 * R**2 / s**4, 0 * s, 0 * s, 0 * s)
    assert np.max(np.abs(res)) < 1e-12 * np.max(np.abs(u))


def test_weighted_form_requires_b_minus_two():
    with pytest.raises(eq.AssemblyError):
        eq.assemble_plus(BG, 1, None, np.linspace(0, 1, 9), "hyperboloidal", weight=1, level=1)


def test_kerr_assembly_rejected():
    with pytest.raises(eq.AssemblyError):
        eq.assemble_plus(Background(1.0, 0.5), 1, None, np.linspace(0, 1, 9))


def test_tsi_residual_mode_checks():
    with pytest.raises(ModeError):
        eq.tsi_residual(1.0, 2.0, ModeIndex(1, 1), ModeIndex(-1, 2))
    assert eq.tsi_residual(1.0, 2.0, ModeIndex(1, 1), ModeIndex(-1, 1)) == pytest.approx(0.0, abs=1e-14)


def test_curlyVR_slice_and_cone_agree_on_static_field():
    # static f(r): slice form -R d_sigma f, cone form r^2/mu d_v f with d_v = mu d_r along u = const
    sig = np.linspace(0.05, 0.9, 200)
    f = np.sin(3 * sig)
    a = eq.apply_curlyVR(f, BG, sigma=sig, f_tau=np.zeros_like(f))
    assert np.allclose(a, -R * 3 * np.cos(3 * sig), atol=1e-6)


@pytest.mark.parametrize("s", [-1, 0, 1])
@pytest.mark.parametrize("a", [0.0, 0.6])
def test_teukolsky_transcriptions_converge(s, a):
    bg = Background(1.0, a)
    F = lambda R_, T: np.exp(-(R_ - 5) ** 2 / 7) * (np.sin(T) ** 2 + np.cos(T) * np.sin(T) * R_ / 9 + 0.3)
    errs = []
    for n in (60, 120):
        r = np.linspace(3.0, 8.0, n)
        th = np.linspace(0.4, 2.7, n)
        Rm, Tm = np.meshgrid(r, th, indexing="ij")
        chk = eq.apply_teukolsky_operator(s, bg, r, th, F(Rm, Tm), omega=0.37, m=1)
        errs.append(np.max(np.abs(chk.difference)) / np.max(np.abs(chk.tme)))
    assert errs[1] < 1e-4
    assert errs[0] / errs[1] > 8
