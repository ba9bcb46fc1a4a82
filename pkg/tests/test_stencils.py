import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxwell_tails import stencils


@given(st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_exact_on_quartics(c):
    x = np.linspace(-1, 2, 23)
    h = x[1] - x[0]
    p = np.polynomial.Polynomial(c)
    assert np.allclose(stencils.d1(p(x), h), p.deriv()(x), atol=1e-9)
    # second derivative rows are exact to degree 4 as well
    assert np.allclose(stencils.d2(p(x), h), p.deriv(2)(x), atol=1e-7)


def test_fourth_order_convergence():
    errs = []
    for n in (41, 81, 161):
        x = np.linspace(0, 1, n)
        h = x[1] - x[0]
        errs.append(np.max(np.abs(stencils.d1(np.sin(3 * x), h) - 3 * np.cos(3 * x))))
    assert np.log2(errs[0] / errs[1]) > 3.7
    assert np.log2(errs[1] / errs[2]) > 3.7


def test_axis_argument():
    x = np.linspace(0, 1, 11)
    f = np.outer(x**2, np.ones(3))
    assert np.allclose(stencils.d1(f, x[1] - x[0], axis=0), np.outer(2 * x, np.ones(3)))


def test_too_few_points():
    with pytest.raises(ValueError):
        stencils.d1(np.zeros(6), 0.1)


@given(st.floats(0.0, 1.0))
def test_interpolation_exact_on_quintics(x0):
    grid = np.linspace(0, 1, 33)
    idx, w = stencils.interp_stencil(grid, x0)
    p = np.polynomial.Polynomial([0.3, -1, 2, 0.5, -0.7, 1.1])
    assert np.dot(w, p(grid[idx])) == pytest.approx(p(x0), abs=1e-12)
