import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import sph_harm_y

from maxwell_tails import spinweight as sw
from maxwell_tails.selfcheck import self_check


@given(st.integers(-2, 2), st.integers(0, 12))
def test_eigenvalue_formula(s, dl):
    l = abs(s) + dl
    assert sw.eigenvalue_lambda(s, l) == (l + s) * (l - s + 1)


@given(st.integers(-1, 1), st.integers(1, 6), st.integers(-1, 1))
def test_lowering_matches_differential_edth(s, l, m):
    if l < max(abs(s), abs(s - 1)) or abs(m) > l:
        return
    th = np.linspace(0.5, 2.6, 5)
    ph = np.full_like(th, 0.7)
    mode = sw.ModeIndex(s, l, m)
    f = lambda t, p: sw.evaluate_swsh(mode, t, p)
    lowered = sw.edth_numeric(f, s, th, ph, prime=True)
    ref = sw.alpha_lower(s, l) * sw.evaluate_swsh(sw.ModeIndex(s - 1, l, m), th, ph)
    assert np.allclose(lowered, ref, atol=1e-8)


@given(st.integers(-1, 1), st.integers(1, 6), st.integers(-1, 1))
def test_raising_matches_differential_edth(s, l, m):
    if l < max(abs(s), abs(s + 1)) or abs(m) > l:
        return
    th = np.linspace(0.5, 2.6, 5)
    ph = np.full_like(th, 0.7)
    mode = sw.ModeIndex(s, l, m)
    raised = sw.edth_numeric(lambda t, p: sw.evaluate_swsh(mode, t, p), s, th, ph)
    ref = sw.beta_raise(s, l) * sw.evaluate_swsh(sw.ModeIndex(s + 1, l, m), th, ph)
    assert np.allclose(raised, ref, atol=1e-8)


@pytest.mark.parametrize("l,m", [(0, 0), (1, 0), (1, 1), (2, -1), (3, 2), (5, -4)])
def test_spin_zero_matches_scipy(l, m):
    th = np.linspace(0.1, 3.0, 9)
    ph = np.linspace(0.0, 6.0, 9)
    ours = sw.evaluate_swsh(sw.ModeIndex(0, l, m), th, ph)
    ref = sph_harm_y(l, m, th, ph)
    assert np.allclose(ours, ref, atol=1e-13)


def test_orthonormality_and_projection():
    grid = sw.make_sphere_grid(5)
    rng = np.random.default_rng(0)
    coeffs = {sw.ModeIndex(-1, l, m): complex(*rng.normal(size=2)) for l in range(1, 5) for m in range(-l, l + 1)}
    f = sw.synthesize(coeffs, grid)
    for mode, c in coeffs.items():
        assert sw.project_mode(f, grid, mode) == pytest.approx(c, abs=1e-12)


def test_tsi_coefficient_is_l_l_plus_1():
    for l in range(1, 10):
        assert sw.tsi_coefficient(l) == pytest.approx(l * (l + 1), rel=1e-14)


def test_perturbed_ladder_sign_is_detected():
    with sw.perturbed_ladder_sign(1):
        assert sw.tsi_coefficient(1) == pytest.approx(-2.0)
        rep = self_check()
    failed = {name for _, name, ok, _ in rep.results if not ok}
    assert "tsi_coefficient" in failed
    assert sw.tsi_coefficient(1) == pytest.approx(2.0)


def test_mode_errors():
    with pytest.raises(sw.ModeError):
        sw.ModeIndex(1, 0)
    with pytest.raises(sw.ModeError):
        sw.ModeIndex(0, 1, 2)
    with pytest.raises(sw.ModeError):
        sw.alpha_lower(2, 1)
