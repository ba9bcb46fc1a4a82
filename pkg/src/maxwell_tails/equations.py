"""Per-mode radial operators for spin +-1 Maxwell fields on Schwarzschild.

Every equation handled here has the template

    -r^2 Y V Phi + beta(r) curlyV_R Phi + V0(r) Phi + sum_j c_j(r) Phi_j = 0,

with ``curlyV_R = (r^2+a^2)^2 / Delta * V``, ``beta = b (r-3M)/r^2`` and
``V0 = v0 + v1 M / r``.  Two concrete forms are produced:

* ``hyperboloidal``: coordinates ``(tau, sigma)`` with ``sigma = r_plus / r``
  and the height gauge of :mod:`background`.  Coefficients multiply
  ``[d_tautau, d_sigmatau, d_sigmasigma, d_tau, d_sigma, 1]``.
* ``double-null``: ``(u, v)`` with ``d_u = mu Y`` and ``d_v = V``.  Coefficients
  multiply ``[d_uv, d_u, d_v, 1]``.

Fields with ``b = -2`` are evolved in the weighted variable ``U = mu Phi``,
which is regular on the horizon (for ``a = 0``, ``mu Phi_{+1} = Psi_{+1}``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import stencils
from .background import Background, BackgroundError, HeightGauge, inverse_tortoise
from .spinweight import alpha_lower, beta_raise, eigenvalue_lambda, ModeError, tsi_coefficient

FORMS = ("hyperboloidal", "double-null")


class AssemblyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# hierarchy tables


@dataclass(frozen=True)
class HierarchySpec:
    """Exact rational tables ``f1, f2, g`` and the triangular ``x`` table."""

    i_max: int
    x: dict = field(repr=False)

    @staticmethod
    def f1(i: int) -> int:
        return (i + 1) * (i + 2)

    @staticmethod
    def f2(i: int) -> int:
        return -2 * (i + 2)

    @staticmethod
    def g(i: int) -> int:
        return 2 * i * (i + 1) * (i + 2)

    def x_row(self, i: int) -> list[Fraction]:
        return [self.x[(i, j)] for j in range(i)]


def hierarchy_coefficients(i_max: int) -> HierarchySpec:
    if i_max < 0:
        raise ValueError("i_max must be nonnegative")
    f1, g = HierarchySpec.f1, HierarchySpec.g
    x: dict = {}
    for i in range(i_max):
        x[(i + 1, i)] = Fraction(g(i + 1), f1(i + 1) - f1(i))
        for j in range(i):
            x[(i + 1, j)] = Fraction(-g(i + 1)) * x[(i, j)] / (f1(i + 1) - f1(j))
    return HierarchySpec(i_max, x)


def cancellation_residuals(spec: HierarchySpec) -> dict:
    """The O(1) zeroth-order couplings ``e_{i+1,j}`` left in the tilde equations.

    They all vanish for the tabulated ``x``; this is evaluated directly from
    the cancellation conditions, not from the recursion.
    """
    f1, g = spec.f1, spec.g
    e = {}
    for i in range(spec.i_max):
        e[(i + 1, i)] = -spec.x[(i + 1, i)] * (f1(i + 1) - f1(i)) + g(i + 1)
        for j in range(i):
            e[(i + 1, j)] = -spec.x[(i + 1, j)] * (f1(i + 1) - f1(j)) - g(i + 1) * spec.x[(i, j)]
    return e


def tilde_transform(phis: Sequence, spec: HierarchySpec, M: float, spin: int = 1) -> list:
    """Tilde variables from a hierarchy ``[Phi^(0), Phi^(1), ...]``.

    For ``spin = -1`` the recursion starts at ``Phi^(2)`` and the table index is
    shifted by two.
    """
    if spin not in (1, -1):
        raise ValueError("spin must be +1 or -1")
    shift = 0 if spin == 1 else 2
    n = len(phis)
    if n - 1 - shift > spec.i_max:
        raise ValueError(f"hierarchy table too short: need i_max >= {n - 1 - shift}")
    out = [np.asarray(p) for p in phis[: shift + 1]]
    for k in range(shift + 1, n):
        acc = np.asarray(phis[k]).copy() if hasattr(phis[k], "copy") else phis[k]
        for j in range(shift, k):
            acc = acc + float(spec.x[(k - shift, j - shift)]) * M ** (k - j) * out[j]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# field definitions


class FieldFamily:
    """Definitions tying the evolved scalars to the NP components ``psi_s``."""

    @staticmethod
    def radiation(bg: Background, r, psi):
        """``Psi = sqrt(r^2 + a^2) psi``."""
        return np.sqrt(np.asarray(r) ** 2 + bg.a**2) * psi

    @staticmethod
    def phi_plus(bg: Background, r, psi_plus):
        """``Phi_{+1} = (r^2+a^2)^{3/2} psi_{+1} / Delta``."""
        r = np.asarray(r, dtype=float)
        return (r * r + bg.a**2) ** 1.5 * psi_plus / bg.delta(r)

    @staticmethod
    def phi_minus0(bg: Background, r, psi_minus):
        """``Phi^(0)_{-1} = Delta psi_{-1} / sqrt(r^2 + a^2)``."""
        r = np.asarray(r, dtype=float)
        return bg.delta(r) * psi_minus / np.sqrt(r * r + bg.a**2)

    @staticmethod
    def psi_minus_from_phi0(bg: Background, r, phi0):
        r = np.asarray(r, dtype=float)
        return phi0 * np.sqrt(r * r + bg.a**2) / bg.delta(r)

    @staticmethod
    def regular_components(bg: Background, r, psi_plus, psi0, psi_minus):
        """Horizon-regular NP components ``(phi_+1, phi_0, phi_-1)`` for ``a = 0``."""
        if not bg.is_schwarzschild:
            raise AssemblyError("regular components implemented for a = 0 only")
        r = np.asarray(r, dtype=float)
        return psi_plus / (np.sqrt(2.0) * r * r), psi0 / (r * r), np.sqrt(2.0) * psi_minus


# ---------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class RadialEquation:
    """Template data ``(b, v0, v1, couplings)``.

    Couplings are ``(source, c_M, c_b, source_weight)`` meaning
    ``c(r) = c_M M + c_b (r-3M)/r^2`` multiplying ``Phi_source``.
    """

    name: str
    spin: int
    l: int
    b: float
    v0: float
    v1: float
    couplings: tuple = ()

    def beta(self, bg: Background, r):
        r = np.asarray(r, dtype=float)
        return self.b * (r - 3 * bg.M) / r**2

    def V0(self, bg: Background, r):
        return self.v0 + self.v1 * bg.M / np.asarray(r, dtype=float)

    def coupling(self, bg: Background, r, c_M: float, c_b: float):
        r = np.asarray(r, dtype=float)
        return c_M * bg.M + c_b * (r - 3 * bg.M) / r**2


@dataclass(frozen=True)
class ModeOperator:
    """An assembled per-mode radial operator on a fixed set of nodes."""

    name: str
    form: str
    nodes: np.ndarray  # sigma (hyperboloidal) or r (double-null)
    coefficients: np.ndarray
    couplings: tuple  # (source name, per-node coefficient)
    weight: int  # evolved variable is mu**weight * Phi
    equation: RadialEquation
    bg: Background

    def characteristic_speeds(self):
        """``d sigma / d tau`` of the two characteristic families (hyperboloidal form)."""
        if self.form != "hyperboloidal":
            raise AssemblyError("speeds are defined for the hyperboloidal form")
        att, ast, ass = self.coefficients[:3]
        disc = np.sqrt(np.maximum(ast * ast - 4 * att * ass, 0.0))
        return (ast - disc) / (2 * att), (ast + disc) / (2 * att)

    def outflow_ok(self, tol: float = 1e-12) -> bool:
        lo, hi = self.characteristic_speeds()
        at_scri = max(lo[0], hi[0]) <= tol
        at_horizon = min(lo[-1], hi[-1]) >= -tol
        return bool(at_scri and at_horizon)


def _nodes_from(grid, form):
    if form == "hyperboloidal":
        return np.asarray(getattr(grid, "sigma", grid), dtype=float)
    return np.asarray(getattr(grid, "r", grid), dtype=float)


def _hyperboloidal_coefficients(eq: RadialEquation, bg: Background, sigma, weight: int):
    R = bg.r_plus
    s = sigma
    att = -4 * R * R * (1 + s)
    ast = 2 * R * (1 - 2 * s * s)
    ass = s * s * (1 - s)
    # (r - 3M)/r^2 in sigma
    q = s * (2 - 3 * s) / (2 * R)
    v0 = eq.v0 + eq.v1 * s / 2
    if weight == 0:
        at = -4 * R * s
        if eq.b != 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                at = at + eq.b * R * s * (2 - 3 * s) / (1 - s)
        asg = 2 * s - 3 * s * s - eq.b / 2 * s * (2 - 3 * s)
        a0 = v0 * np.ones_like(s)
    elif weight == 1:
        if eq.b != -2:
            raise AssemblyError("the mu-weighted form is horizon-regular only for b = -2")
        at = 2 * R * (1 - 3 * s)
        asg = 4 * s - 4 * s * s
        a0 = v0 + 4 * s
    else:
        raise AssemblyError("weight must be 0 or 1")
    coeffs = np.array([att, ast, ass, at, asg, a0])
    cpl = []
    for src, c_M, c_b, w_src in eq.couplings:
        c = c_M * bg.M + c_b * q
        if weight - w_src == 1:
            c = c * (1 - s)
        elif weight - w_src == -1:
            raise AssemblyError("coupling to a weighted source from an unweighted field is singular")
        cpl.append((src, np.asarray(c * np.ones_like(s))))
    return coeffs, tuple(cpl)


def _double_null_coefficients(eq: RadialEquation, bg: Background, r, weight: int):
    M = bg.M
    mu = 1 - 2 * M / r
    beta = eq.beta(bg, r)
    pot = mu * eq.V0(bg, r) / r**2
    one = np.ones_like(r)
    if weight == 0:
        coeffs = np.array([one, 0 * one, -beta, -pot])
    elif weight == 1:
        mup = 2 * M / r**2
        mupp = -4 * M / r**3
        coeffs = np.array([one, -mup, mup - beta, mu * mupp - mup**2 + beta * mup - pot])
    else:
        raise AssemblyError("weight must be 0 or 1")
    cpl = []
    for src, c_M, c_b, w_src in eq.couplings:
        c = -(mu / r**2) * eq.coupling(bg, r, c_M, c_b)
        if weight - w_src == 1:
            c = c * mu
        elif weight - w_src == -1:
            c = c / mu
        cpl.append((src, c))
    return coeffs, tuple(cpl)


def _assemble(eq: RadialEquation, bg: Background, gauge, grid, form: str, weight: int) -> ModeOperator:
    if not bg.is_schwarzschild:
        raise AssemblyError("time-domain assembly is implemented for a = 0 only")
    if form not in FORMS:
        raise AssemblyError(f"form must be one of {FORMS}")
    if gauge is not None and (not isinstance(gauge, HeightGauge) or gauge.bg != bg):
        raise AssemblyError("gauge must be the height gauge of the same background")
    nodes = _nodes_from(grid, form)
    if form == "hyperboloidal":
        coeffs, cpl = _hyperboloidal_coefficients(eq, bg, nodes, weight)
    else:
        if np.any(nodes <= bg.r_plus):
            raise AssemblyError("double-null nodes must lie outside the horizon")
        coeffs, cpl = _double_null_coefficients(eq, bg, nodes, weight)
    if not np.all(np.isfinite(coeffs)) or not all(np.all(np.isfinite(c)) for _, c in cpl):
        raise AssemblyError(f"non-finite coefficient in {eq.name} ({form}, weight {weight})")
    op = ModeOperator(eq.name, form, nodes, coeffs, cpl, weight, eq, bg)
    if form == "hyperboloidal" and not op.outflow_ok():
        raise AssemblyError("characteristic speeds do not point out of the domain")
    return op


def plus_equation(l: int, level: int = 0) -> RadialEquation:
    """Equation of ``Phi_{+1}^{(level)}``; ``level = 0`` is ``Phi_{+1}`` itself."""
    if l < 1:
        raise ModeError("spin +1 modes need l >= 1")
    f1 = HierarchySpec.f1(level)
    L = eigenvalue_lambda(1, l)
    cpl = ()
    if level > 0:
        cpl = ((f"Phi_plus^{level - 1}", HierarchySpec.g(level), 0.0, 0),)
    return RadialEquation(f"Phi_plus^{level}", 1, l, HierarchySpec.f2(level) + 2, f1 - L, -6.0 * f1, cpl)


def minus_equations(l: int) -> tuple[RadialEquation, RadialEquation, RadialEquation]:
    if l < 1:
        raise ModeError("spin -1 modes need l >= 1")
    L = l * (l + 1)
    e0 = RadialEquation("Phi0", -1, l, 0.0, -L, 0.0, (("Phi1", 0.0, 2.0, 0),))
    e1 = RadialEquation("Phi1", -1, l, 0.0, -L, 0.0)
    e2 = RadialEquation("Phi2", -1, l, -2.0, 2.0 - L, -12.0)
    return e0, e1, e2


def middle_equation(l: int) -> RadialEquation:
    """Per-mode wave equation of ``psi_0`` on Schwarzschild."""
    if l < 0:
        raise ModeError("l >= 0 required")
    return RadialEquation("psi0", 0, l, 0.0, -float(l * (l + 1)), 0.0)


def assemble_plus(bg: Background, l: int, gauge, grid, form: str = "hyperboloidal",
                  weight: int = 1, level: int = 0) -> ModeOperator:
    """Operator for ``Phi_{+1}`` (``weight = 1`` evolves ``Psi_{+1} = mu Phi_{+1}``)."""
    return _assemble(plus_equation(l, level), bg, gauge, grid, form, weight)


def assemble_minus_system(bg: Background, l: int, gauge, grid, form: str = "hyperboloidal",
                          top_weight: int = 1) -> tuple[ModeOperator, ModeOperator, ModeOperator]:
    """Operators for ``Phi^(0)``, ``Phi^(1)`` and ``Phi^(2)`` of spin -1."""
    e0, e1, e2 = minus_equations(l)
    return (
        _assemble(e0, bg, gauge, grid, form, 0),
        _assemble(e1, bg, gauge, grid, form, 0),
        _assemble(e2, bg, gauge, grid, form, top_weight),
    )


def assemble_middle(bg: Background, l: int, gauge, grid, form: str = "double-null") -> ModeOperator:
    return _assemble(middle_equation(l), bg, gauge, grid, form, 0)


def template_coefficients(eq: RadialEquation, bg: Background, r):
    """``(b_V, b_phi, b_0)`` of the generic form ``sqhat_s phi - b_V V phi - b_phi d_phi phi - b_0 phi``.

    Uses the per-mode value ``-lambda(s, l)`` of ``2 edth edth'`` and ``s = eq.spin``.
    """
    r = np.asarray(r, dtype=float)
    mu = bg.mu(r)
    s = eq.spin
    bV = -eq.beta(bg, r) * r * r / mu
    b0 = -eq.V0(bg, r) - eigenvalue_lambda(s, eq.l) - s * s * 2 * bg.M / r
    return bV, np.zeros_like(r), b0


def apply_operator(op: ModeOperator, u, u_s, u_ss, u_t, u_st, u_tt, sources: dict | None = None):
    """Evaluate a hyperboloidal operator on supplied derivative arrays."""
    c = op.coefficients
    out = c[0] * u_tt + c[1] * u_st + c[2] * u_ss + c[3] * u_t + c[4] * u_s + c[5] * u
    for src, coef in op.couplings:
        out = out + coef * sources[src]
    return out


# ---------------------------------------------------------------------------
# curlyV_R and the identities


def apply_curlyVR(f, bg: Background, *, sigma=None, f_tau=None, v=None, r=None, tol: float = 1e-12):
    """``curlyV_R f = (r^2+a^2)^2/Delta V f`` on a hyperboloidal slice or along an outgoing cone.

    Slice: pass ``sigma`` nodes and ``f_tau``; then
    ``curlyV_R f = -r_plus d_sigma f + 2 r_plus^2 f_tau / (1 - sigma)``.  At the
    horizon node the quotient is replaced by ``-d_sigma f_tau`` when ``f_tau``
    vanishes there and set to ``nan`` otherwise.

    Cone: pass uniformly spaced ``v`` and radii ``r``; ``curlyV_R f = r^2/mu d_v f``.
    """
    if not bg.is_schwarzschild:
        raise AssemblyError("curlyV_R is implemented for a = 0 only")
    f = np.asarray(f)
    if sigma is not None:
        if f_tau is None:
            raise AssemblyError("the slice form needs the tau derivative")
        sigma = np.asarray(sigma, dtype=float)
        R = bg.r_plus
        h = sigma[1] - sigma[0]
        ft = np.asarray(f_tau)
        out = -R * stencils.d1(f, h)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = ft / (1 - sigma)
        if sigma[-1] == 1.0:
            scale = max(np.max(np.abs(ft)), np.finfo(float).tiny)
            if abs(ft[-1]) <= tol * scale:
                q[-1] = -stencils.d1(ft, h)[-1]
            else:
                q[-1] = np.nan
        return out + 2 * R * R * q
    if v is None or r is None:
        raise AssemblyError("pass either sigma/f_tau or v/r")
    v = np.asarray(v, dtype=float)
    r = np.asarray(r, dtype=float)
    return r * r / bg.mu(r) * stencils.d1(f, v[1] - v[0])


def tsi_residual(phi_plus, phi_minus2, mode_plus, mode_minus):
    """``l(l+1) Phi_{+1} - Phi^(2)_{-1}`` with the coefficient taken from the ladder table."""
    if (mode_plus.l, mode_plus.m) != (mode_minus.l, mode_minus.m):
        raise ModeError("TSI needs the same (l, m) on both sides")
    if mode_plus.s != 1 or mode_minus.s != -1:
        raise ModeError("TSI relates spin +1 to spin -1")
    return tsi_coefficient(mode_plus.l) * np.asarray(phi_plus) - np.asarray(phi_minus2)


def first_order_residuals(psi_plus, psi0, psi_minus, u, v, bg: Background, l: int) -> dict:
    """Sup norms of the four per-mode first-order Maxwell equations on a ``(u, v)`` patch.

    Arrays have shape ``(len(u), len(v))``; derivatives are second-order
    centred differences, evaluated on interior nodes only.
    """
    if not bg.is_schwarzschild:
        raise AssemblyError("first-order residuals are implemented for a = 0")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r = inverse_tortoise(bg, v[None, :] - u[:, None])
    mu = bg.mu(r)
    hu, hv = u[1] - u[0], v[1] - v[0]

    def du(f):
        return (f[2:, 1:-1] - f[:-2, 1:-1]) / (2 * hu)

    def dv(f):
        return (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * hv)

    def inner(f):
        return f[1:-1, 1:-1]

    ri, mui = inner(r), inner(mu)
    s2 = np.sqrt(2.0)
    a0 = alpha_lower(0, l) if l >= 0 else 0.0
    b0 = beta_raise(0, l)
    a1 = alpha_lower(1, l) if l >= 1 else 0.0
    bm = beta_raise(-1, l) if l >= 1 else 0.0
    res = {
        "angular_plus": s2 * b0 * inner(psi0) - 2 * ri**2 * du(psi_plus / r) / mui,
        "angular_minus": s2 * a0 * inner(psi0) - 2 * ri**2 / mui * dv(r * mu * psi_minus),
        "radial_plus": dv(psi0) - 2 * s2 * a1 * inner(psi_plus) / ri,
        "radial_minus": du(psi0) / mui - 2 * s2 * ri * bm * inner(psi_minus),
    }
    return {k: float(np.max(np.abs(x))) if x.size else 0.0 for k, x in res.items()}


def reconstruct_middle_on_cone(psi_minus, v, bg: Background, l: int, r=None):
    """Build ``(psi_0, psi_{+1})`` on an outgoing cone from ``psi_{-1}``.

    ``psi_0 = sqrt(2) curlyV_R(r mu psi_{-1}) / alpha_lower(0, l)`` and
    ``psi_{+1} = r d_v psi_0 / (2 sqrt(2) alpha_lower(1, l))``.
    """
    if not bg.is_schwarzschild:
        raise AssemblyError("cone reconstruction is implemented for a = 0")
    if l < 1:
        raise ModeError("reconstruction needs l >= 1 (spins -1, 0, +1)")
    v = np.asarray(v, dtype=float)
    if r is None:
        raise AssemblyError("radii along the cone are required")
    r = np.asarray(r, dtype=float)
    phi0 = r * bg.mu(r) * psi_minus
    phi1 = apply_curlyVR(phi0, bg, v=v, r=r)
    psi0 = np.sqrt(2.0) * phi1 / alpha_lower(0, l)
    psi_plus = r * stencils.d1(psi0, v[1] - v[0]) / (2 * np.sqrt(2.0) * alpha_lower(1, l))
    return psi0, psi_plus


# ---------------------------------------------------------------------------
# Teukolsky operator, two transcriptions


@dataclass(frozen=True)
class TeukolskyCheck:
    tme: np.ndarray
    hat: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.hat - self.tme


def apply_teukolsky_operator(s: int, bg: Background, r, theta, field_rt, omega: complex = 0.0,
                             m: int = 0, trim: int = 3) -> TeukolskyCheck:
    """Apply the Teukolsky operator in Boyer-Lindquist form and via the spin-weighted
    wave operator ``sqhat_s`` to ``psi = F(r, theta) exp(-i omega t + i m phi)``.

    ``field_rt`` is sampled on the uniform product grid ``r x theta``.  Both
    results are expressed as the Teukolsky operator acting on ``psi`` and
    trimmed by ``trim`` nodes at every edge.
    """
    if s not in (-1, 0, 1):
        raise ValueError("s must be -1, 0 or +1")
    r = np.asarray(r, dtype=float)
    th = np.asarray(theta, dtype=float)
    F = np.asarray(field_rt, dtype=complex)
    if F.shape != (len(r), len(th)):
        raise ValueError("field shape must be (len(r), len(theta))")
    if len(r) < stencils.MIN_POINTS + 2 * trim or len(th) < stencils.MIN_POINTS + 2 * trim:
        raise ValueError("grid too coarse for the fourth-order stencils")
    if np.any(r <= bg.r_plus):
        raise BackgroundError("Boyer-Lindquist operator evaluated at or inside the horizon")
    if np.any(th <= 0) or np.any(th >= np.pi):
        raise ValueError("theta grid must avoid the poles")
    M, a = bg.M, bg.a
    hr, ht = r[1] - r[0], th[1] - th[0]
    R, T = np.meshgrid(r, th, indexing="ij")
    dt = -1j * omega
    dphi = 1j * m
    D = bg.delta(R)
    R2 = R * R + a * a
    sn, cs = np.sin(T), np.cos(T)

    def dr(f):
        return stencils.d1(f, hr, axis=0)

    def dth(f):
        return stencils.d1(f, ht, axis=1)

    tme = (
        -(R2**2 / D - a * a * sn**2) * dt**2 * F
        - 4 * M * a * R / D * dt * dphi * F
        - (a * a / D - 1 / sn**2) * dphi**2 * F
        + D * stencils.d2(F, hr, axis=0) + (1 - s) * 2 * (R - M) * dr(F)
        + stencils.d2(F, ht, axis=1) + cs / sn * dth(F)
        + 2 * s * (a * (R - M) / D + 1j * cs / sn**2) * dphi * F
        + 2 * s * (M * (R * R - a * a) / D - R - 1j * a * cs) * dt * F
        - (s * s * cs**2 / sn**2 + s) * F
    )

    def V(f):
        return (R2 * dt + a * dphi) / R2 * f + D / R2 * dr(f)

    def Y(f):
        return (R2 * dt + a * dphi) / D * f - dr(f)

    def sqhat(f, sw):
        # edth' on spin sw, then edth on spin sw-1
        lo = (dth(f) + m / sn * f + sw * cs / sn * f) / np.sqrt(2.0)
        ang = (dth(lo) - m / sn * lo - (sw - 1) * cs / sn * lo) / np.sqrt(2.0)
        return (
            -R2 * Y(V(f)) + 2 * ang + 2 * a * dt * dphi * f + a * a * sn**2 * dt**2 * f
            - 2j * a * sw * cs * dt * f + 2 * a * R / R2 * dphi * f
            - sw * sw * (2 * M * R**3 + a * a * R * R - 4 * a * a * M * R + a**4) / R2**2 * f
        )

    PR = R**3 - 3 * M * R**2 + a * a * R + a * a * M
    if s == 1:
        w = R2**1.5 / D
        Phi = w * F
        Z = -2 + (10 * M * R**3 + 2 * a * a * R * R - 14 * a * a * M * R + 2 * a**4) / R2**2
        hat = sqhat(Phi, 1) - (2 * PR / D * V(Phi) - 4 * a * R / R2 * dphi * Phi + Z * Phi)
    elif s == -1:
        w = D / np.sqrt(R2)
        Phi0 = w * F
        Phi1 = R2**2 / D * V(Phi0)
        Z = 2 * (R**4 - M * R**3 + a * a * R * R + 3 * a * a * M * R) / R2**2
        hat = sqhat(Phi0, -1) - (-2 * PR / R2**2 * Phi1 + Z * Phi0 + 4 * a * R / R2 * dphi * Phi0)
    else:
        w = np.sqrt(R2)
        Phi = w * F
        Z = (2 * M * R**3 + a * a * R * R - 4 * a * a * M * R + a**4) / R2**2
        hat = sqhat(Phi, 0) - Z * Phi
    hat = hat / w
    sl = (slice(trim, -trim), slice(trim, -trim))
    return TeukolskyCheck(tme[sl], hat[sl])
