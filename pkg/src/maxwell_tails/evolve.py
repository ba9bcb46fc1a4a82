"""Time integration: hyperboloidal method of lines and a double-null diamond scheme.

The hyperboloidal solver evolves ``(U, pi = U_tau)`` for every field of a
per-mode system on a uniform ``sigma`` grid that contains both scri
(``sigma = 0``) and the horizon (``sigma = 1``).  No boundary conditions are
imposed: all characteristic speeds leave the domain there.  Spatial
derivatives are fourth order, time stepping is classical RK4.

Kreiss-Oliger dissipation acts on ``pi`` at every node whose stencil fits and on
``U`` only away from the five outermost nodes at each end.  Because RK4
preserves linear invariants, this keeps the discrete scri quantities that depend
on those nodes (the Newman-Penrose constant) conserved to round-off.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numba as nb
import numpy as np

from . import stencils
from .background import Background, height_gauge, inverse_tortoise, tortoise
from .equations import (
    AssemblyError,
    ModeOperator,
    apply_curlyVR,
    assemble_middle,
    assemble_minus_system,
    assemble_plus,
)
from .spinweight import ModeIndex, alpha_lower

log = logging.getLogger(__name__)

FIELD_NAMES = {-1: ("Phi0", "Phi1", "P2"), 1: ("Psi_plus",)}


class EvolutionAborted(RuntimeError):
    def __init__(self, message: str, tau: float, snapshot: "HyperState | None" = None):
        super().__init__(message)
        self.tau = tau
        self.snapshot = snapshot


class CFLError(ValueError):
    pass


# ---------------------------------------------------------------------------
# grids, states, systems


@dataclass(frozen=True)
class RadialGrid:
    N: int
    fd_order: int = 4
    sigma: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.N < 64:
            raise ValueError("need N >= 64 radial nodes")
        if self.fd_order != 4:
            raise ValueError("only fourth-order stencils are implemented")
        object.__setattr__(self, "sigma", np.linspace(0.0, 1.0, self.N))

    @property
    def h(self) -> float:
        return 1.0 / (self.N - 1)

    def r(self, bg: Background) -> np.ndarray:
        return bg.radius(self.sigma)

    def node_of(self, sigma: float) -> int | None:
        i = sigma * (self.N - 1)
        return int(round(i)) if abs(i - round(i)) < 1e-9 else None


@dataclass
class HyperState:
    tau: float
    fields: dict
    pis: dict
    mode: ModeIndex

    def copy(self) -> "HyperState":
        return HyperState(self.tau, {k: v.copy() for k, v in self.fields.items()},
                          {k: v.copy() for k, v in self.pis.items()}, self.mode)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in (*self.fields.values(), *self.pis.values()))

    def scaled(self, c: complex) -> "HyperState":
        return HyperState(self.tau, {k: c * v for k, v in self.fields.items()},
                          {k: c * v for k, v in self.pis.items()}, self.mode)


@dataclass(frozen=True)
class HyperSystem:
    """Assembled hyperboloidal operators packed for the kernel."""

    bg: Background
    grid: RadialGrid
    mode: ModeIndex
    names: tuple
    operators: tuple
    dissipation: float = 1e-2
    cfl: float = 0.5
    B: np.ndarray = field(init=False, repr=False, compare=False)
    cpl_src: np.ndarray = field(init=False, repr=False, compare=False)
    cpl_dst: np.ndarray = field(init=False, repr=False, compare=False)
    cpl_coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        K, N = len(self.operators), self.grid.N
        B = np.zeros((K, 6, N))
        cs, cd, cc = [], [], []
        for k, op in enumerate(self.operators):
            A = op.coefficients
            B[k, 0] = -1.0 / A[0]
            for j in range(1, 6):
                B[k, j] = A[j] * B[k, 0]
            for src, coef in op.couplings:
                if src not in self.names:
                    raise AssemblyError(f"{op.name} couples to unknown field {src}")
                cs.append(self.names.index(src))
                cd.append(k)
                cc.append(coef * B[k, 0])
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "cpl_src", np.array(cs, dtype=np.int64))
        object.__setattr__(self, "cpl_dst", np.array(cd, dtype=np.int64))
        object.__setattr__(self, "cpl_coef", np.array(cc, dtype=float).reshape(len(cc), N))
        if not self.outflow_ok():
            raise AssemblyError("characteristic speeds point into the domain")

    def max_speed(self) -> float:
        return max(float(np.max(np.abs(np.concatenate(op.characteristic_speeds())))) for op in self.operators)

    def dt_max(self, cfl: float | None = None) -> float:
        return (self.cfl if cfl is None else cfl) * self.grid.h / self.max_speed()

    def outflow_ok(self) -> bool:
        return all(op.outflow_ok() for op in self.operators)

    def operator(self, name: str) -> ModeOperator:
        return self.operators[self.names.index(name)]

    def pi_tau(self, state: HyperState) -> dict:
        """``d pi / d tau`` from the evolution equations (no dissipation)."""
        h = self.grid.h
        out = {}
        for k, name in enumerate(self.names):
            op = self.operators[k]
            A = op.coefficients
            u, p = state.fields[name], state.pis[name]
            acc = A[1] * stencils.d1(p, h) + A[2] * stencils.d2(u, h) + A[3] * p + A[4] * stencils.d1(u, h) + A[5] * u
            for src, coef in op.couplings:
                acc = acc + coef * state.fields[src]
            out[name] = -acc / A[0]
        return out


def build_system(bg: Background, mode: ModeIndex, grid: RadialGrid, dissipation: float = 1e-2,
                 cfl: float = 0.5) -> HyperSystem:
    """The spin -1 triple ``(Phi0, Phi1, mu Phi2)`` or the spin +1 field ``Psi_plus``."""
    gauge = height_gauge(bg)
    if mode.s == -1:
        ops = assemble_minus_system(bg, mode.l, gauge, grid, "hyperboloidal")
    elif mode.s == 1:
        ops = (assemble_plus(bg, mode.l, gauge, grid, "hyperboloidal"),)
    else:
        raise AssemblyError("hyperboloidal evolution is provided for spin +1 and -1")
    return HyperSystem(bg, grid, mode, FIELD_NAMES[mode.s], tuple(ops), dissipation, cfl)


# ---------------------------------------------------------------------------
# kernels


@nb.njit(cache=True, fastmath=True)
def _rhs1(u, p, a1, a2, a3, a4, a5, h, ck, du_o, dp_o):
    n = u.shape[0]
    c1 = 1.0 / (12 * h)
    c2 = 1.0 / (12 * h * h)
    for i in range(3, n - 3):
        dp = (p[i - 2] - 8 * p[i - 1] + 8 * p[i + 1] - p[i + 2]) * c1
        du = (u[i - 2] - 8 * u[i - 1] + 8 * u[i + 1] - u[i + 2]) * c1
        duu = (-u[i - 2] + 16 * u[i - 1] - 30 * u[i] + 16 * u[i + 1] - u[i + 2]) * c2
        ko = p[i - 3] - 6 * p[i - 2] + 15 * p[i - 1] - 20 * p[i] + 15 * p[i + 1] - 6 * p[i + 2] + p[i + 3]
        dp_o[i] = a1[i] * dp + a2[i] * duu + a3[i] * p[i] + a4[i] * du + a5[i] * u[i] + ck * ko
        du_o[i] = p[i]
    for i in range(5, n - 5):
        du_o[i] += ck * (u[i - 3] - 6 * u[i - 2] + 15 * u[i - 1] - 20 * u[i] + 15 * u[i + 1] - 6 * u[i + 2] + u[i + 3])
    for i in (0, 1, 2, n - 3, n - 2, n - 1):
        if i == 0:
            dp = (-25 * p[0] + 48 * p[1] - 36 * p[2] + 16 * p[3] - 3 * p[4]) * c1
            du = (-25 * u[0] + 48 * u[1] - 36 * u[2] + 16 * u[3] - 3 * u[4]) * c1
            duu = (45 * u[0] - 154 * u[1] + 214 * u[2] - 156 * u[3] + 61 * u[4] - 10 * u[5]) * c2
        elif i == 1:
            dp = (-3 * p[0] - 10 * p[1] + 18 * p[2] - 6 * p[3] + p[4]) * c1
            du = (-3 * u[0] - 10 * u[1] + 18 * u[2] - 6 * u[3] + u[4]) * c1
            duu = (10 * u[0] - 15 * u[1] - 4 * u[2] + 14 * u[3] - 6 * u[4] + u[5]) * c2
        elif i == n - 1:
            dp = (25 * p[n - 1] - 48 * p[n - 2] + 36 * p[n - 3] - 16 * p[n - 4] + 3 * p[n - 5]) * c1
            du = (25 * u[n - 1] - 48 * u[n - 2] + 36 * u[n - 3] - 16 * u[n - 4] + 3 * u[n - 5]) * c1
            duu = (45 * u[n - 1] - 154 * u[n - 2] + 214 * u[n - 3] - 156 * u[n - 4] + 61 * u[n - 5] - 10 * u[n - 6]) * c2
        elif i == n - 2:
            dp = (3 * p[n - 1] + 10 * p[n - 2] - 18 * p[n - 3] + 6 * p[n - 4] - p[n - 5]) * c1
            du = (3 * u[n - 1] + 10 * u[n - 2] - 18 * u[n - 3] + 6 * u[n - 4] - u[n - 5]) * c1
            duu = (10 * u[n - 1] - 15 * u[n - 2] - 4 * u[n - 3] + 14 * u[n - 4] - 6 * u[n - 5] + u[n - 6]) * c2
        else:
            dp = (p[i - 2] - 8 * p[i - 1] + 8 * p[i + 1] - p[i + 2]) * c1
            du = (u[i - 2] - 8 * u[i - 1] + 8 * u[i + 1] - u[i + 2]) * c1
            duu = (-u[i - 2] + 16 * u[i - 1] - 30 * u[i] + 16 * u[i + 1] - u[i + 2]) * c2
        dp_o[i] = a1[i] * dp + a2[i] * duu + a3[i] * p[i] + a4[i] * du + a5[i] * u[i]
        du_o[i] = p[i]


@nb.njit(cache=True, fastmath=True)
def _rhs(U, P, B, cs, cd, cc, h, ck, dU, dP):
    K, n = U.shape
    for k in range(K):
        kk = k % B.shape[0]
        _rhs1(U[k], P[k], B[kk, 1], B[kk, 2], B[kk, 3], B[kk, 4], B[kk, 5], h, ck, dU[k], dP[k])
    # stacked copies (real and imaginary parts) share couplings
    reps = K // B.shape[0]
    for r in range(reps):
        off = r * B.shape[0]
        for q in range(cs.shape[0]):
            a = cd[q] + off
            b = cs[q] + off
            for i in range(n):
                dP[a, i] += cc[q, i] * U[b, i]


@nb.njit(cache=True, fastmath=True)
def _axpy(out, x, a, y):
    K, n = x.shape
    for k in range(K):
        for i in range(n):
            out[k, i] = x[k, i] + a * y[k, i]


@nb.njit(cache=True, fastmath=True)
def _advance(U, P, B, cs, cd, cc, h, eps, dt, nsteps):
    K, n = U.shape
    ck = eps / (64 * h)
    k1U = np.empty((K, n)); k1P = np.empty((K, n))
    k2U = np.empty((K, n)); k2P = np.empty((K, n))
    k3U = np.empty((K, n)); k3P = np.empty((K, n))
    k4U = np.empty((K, n)); k4P = np.empty((K, n))
    tU = np.empty((K, n)); tP = np.empty((K, n))
    for _ in range(nsteps):
        _rhs(U, P, B, cs, cd, cc, h, ck, k1U, k1P)
        _axpy(tU, U, 0.5 * dt, k1U); _axpy(tP, P, 0.5 * dt, k1P)
        _rhs(tU, tP, B, cs, cd, cc, h, ck, k2U, k2P)
        _axpy(tU, U, 0.5 * dt, k2U); _axpy(tP, P, 0.5 * dt, k2P)
        _rhs(tU, tP, B, cs, cd, cc, h, ck, k3U, k3P)
        _axpy(tU, U, dt, k3U); _axpy(tP, P, dt, k3P)
        _rhs(tU, tP, B, cs, cd, cc, h, ck, k4U, k4P)
        for k in range(K):
            for i in range(n):
                U[k, i] += dt / 6 * (k1U[k, i] + 2 * k2U[k, i] + 2 * k3U[k, i] + k4U[k, i])
                P[k, i] += dt / 6 * (k1P[k, i] + 2 * k2P[k, i] + 2 * k3P[k, i] + k4P[k, i])


def _pack(state: HyperState, system: HyperSystem):
    U = np.array([state.fields[n] for n in system.names])
    P = np.array([state.pis[n] for n in system.names])
    is_complex = bool(np.any(np.iscomplex(U)) or np.any(np.iscomplex(P)))
    if is_complex:
        Ur = np.ascontiguousarray(np.concatenate([U.real, U.imag]))
        Pr = np.ascontiguousarray(np.concatenate([P.real, P.imag]))
    else:
        Ur = np.ascontiguousarray(U.real.astype(float))
        Pr = np.ascontiguousarray(P.real.astype(float))
    return Ur, Pr, is_complex


def _unpack(Ur, Pr, is_complex, system: HyperSystem, tau: float, mode: ModeIndex) -> HyperState:
    K = len(system.names)
    if is_complex:
        U = Ur[:K] + 1j * Ur[K:]
        P = Pr[:K] + 1j * Pr[K:]
    else:
        U, P = Ur.astype(complex), Pr.astype(complex)
    return HyperState(tau, {n: U[k].copy() for k, n in enumerate(system.names)},
                      {n: P[k].copy() for k, n in enumerate(system.names)}, mode)


def _check_dt(system: HyperSystem, dt: float):
    if not dt > 0:
        raise CFLError("time step must be positive")
    lim = system.dt_max()
    if dt > lim * (1 + 1e-12):
        raise CFLError(f"dt={dt:.6g} exceeds the CFL limit {lim:.6g} (cfl={system.cfl})")


def step_hyperboloidal(state: HyperState, system: HyperSystem, dt: float, nsteps: int = 1) -> HyperState:
    """Advance ``nsteps`` RK4 steps of size ``dt``; returns a new state."""
    _check_dt(system, dt)
    Ur, Pr, cplx = _pack(state, system)
    _advance(Ur, Pr, system.B, system.cpl_src, system.cpl_dst, system.cpl_coef, system.grid.h,
             system.dissipation, dt, nsteps)
    new = _unpack(Ur, Pr, cplx, system, state.tau + nsteps * dt, state.mode)
    if not new.is_finite():
        raise EvolutionAborted(f"non-finite values at tau={new.tau:.6g}", new.tau, state.copy())
    return new


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class DataFamily:
    """``compact-bump`` {A, r_c, w}, ``npc-charged`` {A, N_inf, r_cut, r_c, w} or
    ``monopole-charge`` {q}.  ``time_profile`` is ``time-symmetric`` or ``ingoing``."""

    kind: str
    A: float = 1.0
    r_c: float = 10.0
    w: float = 1.5
    N_inf: float = 0.0
    r_cut: float = 20.0
    q: complex = 0.0
    time_profile: str = "time-symmetric"
    target: str | None = None

    KINDS = ("compact-bump", "npc-charged", "monopole-charge")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown data family {self.kind!r}")
        if self.time_profile not in ("time-symmetric", "ingoing"):
            raise ValueError("time_profile must be 'time-symmetric' or 'ingoing'")
        if self.w <= 0:
            raise ValueError("bump width must be positive")


def bump(r, r_c: float, w: float):
    """``(1 - x^2)^16`` with ``x = (r - r_c)/(4w)``: close to ``exp(-(r-r_c)^2/w^2)``,
    identically zero outside ``[r_c - 4w, r_c + 4w]``."""
    x = (np.asarray(r, dtype=float) - r_c) / (4 * w)
    return np.where(np.abs(x) < 1, np.clip(1 - x * x, 0, None) ** 16, 0.0)


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        f = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        g = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
    return f / (f + g)


def npc_tail_profile(bg: Background, mode: ModeIndex, sigma, r_cut: float):
    """Unit-NPC tail: ``-sigma^3/(6 R^3)`` (spin -1) or ``-sigma/R`` (spin +1), cut off inside ``r_cut``."""
    if mode.l != 1:
        raise ValueError("npc-charged data are constructed for l = 1")
    R = bg.r_plus
    sc = R / r_cut
    if not 0 < 2 * sc < 1:
        raise ValueError("cutoff radius must exceed twice the horizon radius")
    chi = 1.0 - smooth_step((np.asarray(sigma) - sc) / sc)
    if mode.s == -1:
        return -(sigma**3) / (6 * R**3) * chi
    if mode.s == 1:
        return -sigma / R * chi
    raise ValueError("npc-charged data need spin +1 or -1")


def _profile(family: DataFamily, mode: ModeIndex, grid: RadialGrid, bg: Background):
    sigma = grid.sigma
    r = grid.r(bg)
    if family.kind == "monopole-charge":
        raise ValueError("monopole-charge data apply to the characteristic harness (psi_0, l = 0)")
    lo, hi = family.r_c - 4 * family.w, family.r_c + 4 * family.w
    f = np.zeros_like(sigma)
    if family.A != 0:
        if lo <= bg.r_plus * (1 + 2 * grid.h) or not np.isfinite(hi):
            raise ValueError("bump support touches the horizon")
        with np.errstate(invalid="ignore"):
            f = family.A * bump(np.where(sigma > 0, r, np.inf), family.r_c, family.w)
        f[0] = 0.0
    if family.kind == "npc-charged":
        f = f + family.N_inf * npc_tail_profile(bg, mode, sigma, family.r_cut)
    if family.time_profile == "ingoing":
        # V f = 0 approximately: f_tau = mu f_sigma / (2R)
        pi = (1 - sigma) * stencils.d1(f, grid.h) / (2 * bg.r_plus)
    else:
        pi = np.zeros_like(f)
    return f.astype(complex), pi.astype(complex)


def weighted_curlyVR(f, f_tau, sigma, bg: Background, h: float):
    """``mu curlyV_R f = -R (1-sigma) d_sigma f + 2 R^2 f_tau`` (regular everywhere)."""
    R = bg.r_plus
    return -R * (1 - sigma) * stencils.d1(f, h) + 2 * R * R * f_tau


def make_initial_data(family: DataFamily, mode: ModeIndex, grid: RadialGrid, bg: Background,
                      system: HyperSystem | None = None) -> HyperState:
    system = system or build_system(bg, mode, grid)
    f, pi = _profile(family, mode, grid, bg)
    if mode.s == 1:
        return HyperState(0.0, {"Psi_plus": f}, {"Psi_plus": pi}, mode)
    sigma, h = grid.sigma, grid.h
    op0, op1 = system.operator("Phi0"), system.operator("Phi1")
    phi1 = apply_curlyVR(f, bg, sigma=sigma, f_tau=pi)
    st = HyperState(0.0, {"Phi0": f, "Phi1": phi1}, {"Phi0": pi}, mode)
    pi0_t = _pi_tau_single(op0, f, pi, h, {"Phi1": phi1})
    pi1 = apply_curlyVR(pi, bg, sigma=sigma, f_tau=pi0_t)
    pi1_t = _pi_tau_single(op1, phi1, pi1, h, {})
    P2 = weighted_curlyVR(phi1, pi1, sigma, bg, h)
    piP2 = weighted_curlyVR(pi1, pi1_t, sigma, bg, h)
    st.fields.update({"P2": P2})
    st.pis.update({"Phi1": pi1, "P2": piP2})
    if not st.is_finite():
        raise ValueError("initial data are not finite; data must vanish near the horizon")
    return st


def _pi_tau_single(op: ModeOperator, u, p, h, sources):
    A = op.coefficients
    acc = A[1] * stencils.d1(p, h) + A[2] * stencils.d2(u, h) + A[3] * p + A[4] * stencils.d1(u, h) + A[5] * u
    for src, coef in op.couplings:
        acc = acc + coef * sources[src]
    return -acc / A[0]


def constraint_drift(state: HyperState, system: HyperSystem) -> dict:
    """Max norms of ``Phi1 - curlyV_R Phi0`` and ``mu Phi2 - mu curlyV_R Phi1`` on a slice,
    plus the same relative to the field scale."""
    if state.mode.s != -1:
        raise ValueError("constraints exist for the spin -1 hierarchy")
    bg, sigma, h = system.bg, system.grid.sigma, system.grid.h
    F, P = state.fields, state.pis
    # weighted forms avoid the horizon quotient
    c1 = (1 - sigma) * F["Phi1"] - weighted_curlyVR(F["Phi0"], P["Phi0"], sigma, bg, h)
    c2 = F["P2"] - weighted_curlyVR(F["Phi1"], P["Phi1"], sigma, bg, h)
    s1 = max(np.max(np.abs(F["Phi1"])), np.finfo(float).tiny)
    s2 = max(np.max(np.abs(F["P2"])), np.finfo(float).tiny)
    return {
        "phi1": float(np.max(np.abs(c1))),
        "phi2": float(np.max(np.abs(c2))),
        "phi1_rel": float(np.max(np.abs(c1)) / s1),
        "phi2_rel": float(np.max(np.abs(c2)) / s2),
    }


# ---------------------------------------------------------------------------
# driver with observers


@dataclass
class HyperRun:
    tau: np.ndarray
    observers: tuple  # sigma values
    series: dict  # field -> array (n_obs, n_samples) of U
    monitors: dict  # name -> array of samples
    final: HyperState
    dt: float
    steps: int
    wall: float
    status: str = "ok"
    message: str = ""


def interp_at(f: np.ndarray, grid: RadialGrid, sigma: float) -> complex:
    node = grid.node_of(sigma)
    if node is not None:
        return complex(f[node])
    idx, w = stencils.interp_stencil(grid.sigma, sigma)
    return complex(np.dot(w, f[idx]))


def evolve_hyperboloidal(system: HyperSystem, state: HyperState, tau_end: float, *, dt: float | None = None,
                         sample_dt: float = 1.0, observers: Sequence[float] = (0.0,),
                         monitors: Mapping[str, Callable] | None = None,
                         per_step: Callable | None = None, per_step_until: float = 0.0) -> HyperRun:
    """Run to ``tau_end`` recording every evolved field at the ``sigma`` observers.

    ``per_step(old, new)`` is called after every step while ``tau <= per_step_until``
    (used to record data on null cones).
    """
    dt = system.dt_max() if dt is None else dt
    _check_dt(system, dt)
    monitors = dict(monitors or {})
    every = max(1, int(round(sample_dt / dt)))
    n_total = int(np.ceil((tau_end - state.tau) / dt - 1e-9))
    t0 = time.perf_counter()
    taus, rows, mon = [], {n: [] for n in system.names}, {k: [] for k in monitors}

    def record(st):
        taus.append(st.tau)
        for n in system.names:
            rows[n].append([interp_at(st.fields[n], system.grid, s) for s in observers])
        for k, fn in monitors.items():
            mon[k].append(fn(st))

    cur = state
    record(cur)
    done = 0
    status, msg = "ok", ""
    try:
        while done < n_total:
            if per_step is not None and cur.tau <= per_step_until:
                new = step_hyperboloidal(cur, system, dt, 1)
                per_step(cur, new)
                cur = new
                done += 1
                if done % every == 0:
                    record(cur)
                continue
            n = min(every - done % every, n_total - done)
            cur = step_hyperboloidal(cur, system, dt, n)
            done += n
            if done % every == 0 or done == n_total:
                if not system.outflow_ok():
                    raise EvolutionAborted("outflow property violated", cur.tau, cur)
                record(cur)
    except EvolutionAborted as exc:
        status, msg = "aborted", str(exc)
        log.error("evolution aborted: %s", exc)
        if exc.snapshot is not None:
            cur = exc.snapshot
    series = {n: np.array(rows[n], dtype=complex).T for n in system.names}
    return HyperRun(np.array(taus), tuple(observers), series,
                    {k: np.array(v) for k, v in mon.items()}, cur, dt, done,
                    time.perf_counter() - t0, status, msg)


# ---------------------------------------------------------------------------
# characteristic (double-null) scheme


@nb.njit(cache=True)
def _march(data_u0, data_v0, coef, cpl_src, cpl_dst, cpl_coef, koff, h, stride, obs_k, out_store, out_obs):
    """Diamond recurrence; rows are u = const.

    coef[k, c, d] holds the coefficients of field k at diagonal d = j - i + koff
    for the cell with south corner (i, j): [d_uv, d_u, d_v, 1].
    """
    K, nv1 = data_u0.shape
    nu1 = data_v0.shape[1]
    cur = data_u0.copy()
    new = np.empty_like(cur)
    nobs = obs_k.shape[0]
    for k in range(K):
        for j in range(0, nv1, stride):
            out_store[k, 0, j // stride] = cur[k, j]
    for o in range(nobs):
        j = obs_k[o]
        if 0 <= j < nv1:
            for k in range(K):
                out_obs[o, k, 0] = cur[k, j]
    ih2 = 1.0 / (h * h)
    ih = 0.5 / h
    for i in range(nu1 - 1):
        for k in range(K):
            new[k, 0] = data_v0[k, i + 1]
        for j in range(nv1 - 1):
            d = j - i + koff
            for k in range(K):
                S = cur[k, j]
                E = cur[k, j + 1]
                W = new[k, j]
                a_uv = coef[k, 0, d]
                a_u = coef[k, 1, d]
                a_v = coef[k, 2, d]
                a_0 = coef[k, 3, d]
                rest = (-W - E + S) * a_uv * ih2 + a_u * (-E + W - S) * ih + a_v * (-W + E - S) * ih + a_0 * 0.5 * (W + E)
                for q in range(cpl_src.shape[0]):
                    if cpl_dst[q] == k:
                        b = cpl_src[q]
                        rest += cpl_coef[q, d] * 0.5 * (new[b, j] + cur[b, j + 1])
                new[k, j + 1] = -rest / (a_uv * ih2 + (a_u + a_v) * ih)
        tmp = cur
        cur = new
        new = tmp
        if (i + 1) % stride == 0:
            for k in range(K):
                for j in range(0, nv1, stride):
                    out_store[k, (i + 1) // stride, j // stride] = cur[k, j]
        for o in range(nobs):
            j = obs_k[o] + i + 1
            if 0 <= j < nv1:
                for k in range(K):
                    out_obs[o, k, i + 1] = cur[k, j]


@dataclass
class DiamondSolution:
    """Stored (possibly subsampled) lattice values and observer series."""

    u: np.ndarray
    v: np.ndarray
    h: float
    stride: int
    fields: dict  # name -> (len(u), len(v))
    names: tuple
    mode: ModeIndex
    bg: Background
    obs_rstar: np.ndarray = field(default_factory=lambda: np.zeros(0))
    obs_u: np.ndarray = field(default_factory=lambda: np.zeros(0))
    obs_series: dict = field(default_factory=dict)  # name -> (n_obs, n_u)
    obs_dv: dict = field(default_factory=dict)  # d_v of each field at the observers
    wall: float = 0.0

    def r(self) -> np.ndarray:
        return inverse_tortoise(self.bg, self.v[None, :] - self.u[:, None])

    def observer_tau(self, o: int) -> np.ndarray:
        """Hyperboloidal time ``tau = 2 v - h(r)`` along observer ``o``."""
        rs = self.obs_rstar[o]
        r = inverse_tortoise(self.bg, rs)
        return 2 * (self.obs_u + rs) - height_gauge(self.bg).h(r)

    def observer_radius(self, o: int) -> float:
        return float(inverse_tortoise(self.bg, self.obs_rstar[o]))

    def spin_plus_at_observer(self, o: int) -> np.ndarray:
        """``psi_{+1} = r d_v psi_0 / (2 sqrt(2) alpha_lower(1, l))`` from the evolved ``psi_0``."""
        if "psi0" not in self.obs_dv:
            raise ValueError("psi0 was not evolved")
        r = self.observer_radius(o)
        return r * self.obs_dv["psi0"][o] / (2 * np.sqrt(2.0) * alpha_lower(1, self.mode.l))


RSTAR_CUTOFF = -1000.0


def characteristic_operators(bg: Background, mode: ModeIndex, r_nodes, fields: Sequence[str]):
    """Double-null operators for the requested fields among
    ``Phi0, Phi1, P2 (= mu Phi2), Psi_plus (= mu Phi_{+1}), psi0``."""
    ops = {}
    if any(f in fields for f in ("Phi0", "Phi1", "P2")):
        o0, o1, o2 = assemble_minus_system(bg, mode.l, None, r_nodes, "double-null", top_weight=1)
        ops.update({"Phi0": o0, "Phi1": o1, "P2": o2})
    if "Psi_plus" in fields:
        ops["Psi_plus"] = assemble_plus(bg, mode.l, None, r_nodes, "double-null", weight=1)
    for f in fields:
        if f.startswith("psi0"):
            ell = mode.l if f == "psi0" else int(f.split("_l")[1])
            ops[f] = assemble_middle(bg, ell, None, r_nodes, "double-null")
    return [ops[f] for f in fields]


def evolve_characteristic(cone_u0: Mapping[str, np.ndarray], cone_v0: Mapping[str, np.ndarray] | None,
                          u0: float, v0: float, h: float, n_u: int, n_v: int, bg: Background,
                          mode: ModeIndex, *, stride: int = 1, observers_rstar: Sequence[float] = (),
                          ) -> DiamondSolution:
    """Second-order diamond integration on ``[u0, u0 + n_u h] x [v0, v0 + n_v h]``.

    ``cone_u0[name]`` holds values on ``u = u0`` at the ``n_v + 1`` nodes
    ``v0 + j h``; ``cone_v0[name]`` (default zero) holds values on ``v = v0`` at
    the ``n_u + 1`` nodes ``u0 + i h``.
    """
    names = tuple(cone_u0)
    K = len(names)
    data_u0 = np.array([np.asarray(cone_u0[n]) for n in names])
    if data_u0.shape != (K, n_v + 1):
        raise ValueError("u-cone data must have n_v + 1 samples per field")
    if cone_v0 is None:
        data_v0 = np.zeros((K, n_u + 1), dtype=data_u0.dtype)
        data_v0[:, 0] = data_u0[:, 0]
    else:
        data_v0 = np.array([np.asarray(cone_v0[n]) for n in names])
        if data_v0.shape != (K, n_u + 1):
            raise ValueError("v-cone data must have n_u + 1 samples per field")
    if not np.allclose(data_v0[:, 0], data_u0[:, 0], rtol=1e-10, atol=1e-14):
        raise ValueError("cone data disagree at the corner")
    koff = n_u
    rstar_c = (v0 - u0) + h * np.arange(-n_u, n_v + 1)
    if rstar_c.min() < RSTAR_CUTOFF:
        warnings.warn("characteristic domain approaches the horizon; clipping r* at the tortoise cutoff")
        rstar_c = np.maximum(rstar_c, RSTAR_CUTOFF)
    r_c = inverse_tortoise(bg, rstar_c)
    r_c = np.maximum(r_c, bg.r_plus * (1 + 1e-15))
    ops = characteristic_operators(bg, mode, r_c, names)
    coef = np.ascontiguousarray(np.array([op.coefficients for op in ops]))
    cs, cd, cc = [], [], []
    for k, op in enumerate(ops):
        for src, c in op.couplings:
            if src not in names:
                raise ValueError(f"{op.name} needs field {src} in the cone data")
            cs.append(names.index(src)); cd.append(k); cc.append(c)
    cs_a = np.array(cs, dtype=np.int64)
    cd_a = np.array(cd, dtype=np.int64)
    cc_a = np.array(cc, dtype=float).reshape(len(cc), len(r_c))
    obs = np.asarray(observers_rstar, dtype=float)
    # four neighbouring diagonals per observer: values by linear interpolation,
    # d_v by centred differences along rows
    kf = (obs - (v0 - u0)) / h
    k_lo = np.floor(kf).astype(np.int64)
    frac = kf - k_lo
    obs_k = np.concatenate([k_lo - 1, k_lo, k_lo + 1, k_lo + 2]).astype(np.int64)
    t0 = time.perf_counter()
    cplx = np.iscomplexobj(data_u0) or np.iscomplexobj(data_v0)
    parts = [(data_u0.real, data_v0.real)] + ([(data_u0.imag, data_v0.imag)] if cplx else [])
    stores, obses = [], []
    for du, dv in parts:
        store = np.zeros((K, n_u // stride + 1, n_v // stride + 1))
        ob = np.full((len(obs_k), K, n_u + 1), np.nan)
        _march(np.ascontiguousarray(du, dtype=float), np.ascontiguousarray(dv, dtype=float), coef,
               cs_a, cd_a, cc_a, koff, h, stride, obs_k, store, ob)
        stores.append(store)
        obses.append(ob)
    store = stores[0] + (1j * stores[1] if cplx else 0)
    ob = obses[0] + (1j * obses[1] if cplx else 0)
    n_obs = len(obs)
    Dm, D0, D1, D2 = (ob[q * n_obs:(q + 1) * n_obs] for q in range(4))
    fr = frac[:, None, None]
    ob_val = (1 - fr) * D0 + fr * D1
    ob_dv = (1 - fr) * (D1 - Dm) / (2 * h) + fr * (D2 - D0) / (2 * h)
    u = u0 + h * np.arange(0, n_u + 1, stride)
    v = v0 + h * np.arange(0, n_v + 1, stride)
    sol = DiamondSolution(u, v, h, stride, {n: store[k] for k, n in enumerate(names)}, names, mode, bg,
                          obs, u0 + h * np.arange(n_u + 1),
                          {n: ob_val[:, k, :] for k, n in enumerate(names)},
                          {n: ob_dv[:, k, :] for k, n in enumerate(names)}, time.perf_counter() - t0)
    return sol


def characteristic_constraint_drift(sol: DiamondSolution) -> dict:
    """Max norms of ``Phi1 - r^2/mu d_v Phi0`` (and ``P2 - r^2 d_v Phi1``) on the lattice."""
    if sol.stride != 1:
        raise ValueError("constraint drift needs the unsubsampled lattice")
    r = sol.r()[1:-1, 1:-1]
    mu = sol.bg.mu(r)
    out = {}

    def dv(f):
        return (f[1:-1, 2:] - f[1:-1, :-2]) / (2 * sol.h)

    F = sol.fields
    if "Phi0" in F and "Phi1" in F:
        out["phi1"] = float(np.max(np.abs(F["Phi1"][1:-1, 1:-1] - r * r / mu * dv(F["Phi0"]))))
    if "Phi1" in F and "P2" in F:
        out["phi2"] = float(np.max(np.abs(F["P2"][1:-1, 1:-1] - r * r * dv(F["Phi1"]))))
    return out


class ConeRecorder:
    """Samples a hyperboloidal run on the cones ``u = u0`` and ``v = v0``.

    Values between time steps use cubic Hermite interpolation in ``tau``
    (from ``U`` and ``pi``) and six-point Lagrange interpolation in ``sigma``.
    """

    def __init__(self, bg: Background, grid: RadialGrid, names: Sequence[str], u0: float, v0: float,
                 h: float, n_u: int, n_v: int):
        self.bg, self.grid, self.names = bg, grid, tuple(names)
        gauge = height_gauge(bg)
        rs_u = v0 + h * np.arange(n_v + 1) - u0  # along u = u0
        rs_v = v0 - (u0 + h * np.arange(n_u + 1))  # along v = v0
        self.points = []
        for rs, vv in ((rs_u, v0 + h * np.arange(n_v + 1)), (rs_v, np.full(n_u + 1, v0))):
            r = inverse_tortoise(bg, np.maximum(rs, RSTAR_CUTOFF))
            sig = np.clip(bg.r_plus / r, 0.0, 1.0)
            tau = 2 * vv - gauge.h(r)
            self.points.append((sig, tau))
        self.values = [{n: np.full(len(p[0]), np.nan, dtype=complex) for n in self.names} for p in self.points]
        self.filled = [np.zeros(len(p[0]), dtype=bool) for p in self.points]
        self.tau_max = max(float(np.max(p[1])) for p in self.points)
        self.tau_min = min(float(np.min(p[1])) for p in self.points)
        self._stencils = []
        for sig, _ in self.points:
            idx = np.empty((len(sig), 6), dtype=np.int64)
            w = np.empty((len(sig), 6))
            for m, s in enumerate(sig):
                idx[m], w[m] = stencils.interp_stencil(grid.sigma, float(s))
            self._stencils.append((idx, w))

    def __call__(self, old: HyperState, new: HyperState):
        t0, t1 = old.tau, new.tau
        dt = t1 - t0
        for c, (sig, tau) in enumerate(self.points):
            sel = np.nonzero((~self.filled[c]) & (tau <= t1 + 1e-12) & (tau >= t0 - 1e-12))[0]
            if sel.size == 0:
                continue
            s = (tau[sel] - t0) / dt
            h00 = 2 * s**3 - 3 * s**2 + 1
            h10 = s**3 - 2 * s**2 + s
            h01 = -2 * s**3 + 3 * s**2
            h11 = s**3 - s**2
            idx, w = self._stencils[c]
            for n in self.names:
                f0 = np.sum(w[sel] * old.fields[n][idx[sel]], axis=1)
                f1 = np.sum(w[sel] * new.fields[n][idx[sel]], axis=1)
                p0 = np.sum(w[sel] * old.pis[n][idx[sel]], axis=1)
                p1 = np.sum(w[sel] * new.pis[n][idx[sel]], axis=1)
                self.values[c][n][sel] = h00 * f0 + h10 * dt * p0 + h01 * f1 + h11 * dt * p1
            self.filled[c][sel] = True

    @property
    def complete(self) -> bool:
        return all(np.all(f) for f in self.filled)

    def cone_data(self):
        return self.values[0], self.values[1]


def maxwell_cone_data(bg: Background, l: int, psi_minus_fn: Callable, u0: float, v0: float, h: float,
                      n_v: int, n_u: int, q: complex = 0.0, with_monopole: bool = True):
    """Consistent characteristic data for the Maxwell triple from free ``psi_{-1}`` on ``u = u0``.

    Returns ``(cone_u0, cone_v0)`` with fields ``Phi0, Phi1, P2, Psi_plus, psi0`` (mode
    ``l``) and, when requested, ``psi0_l0`` carrying the charge ``q`` (the
    ``l = 0`` coefficient is ``sqrt(4 pi) q``).  The ``v = v0`` cone is empty of
    radiation, so all its values are zero apart from the constant monopole.
    """
    from .equations import reconstruct_middle_on_cone

    v = v0 + h * np.arange(n_v + 1)
    r = inverse_tortoise(bg, v - u0)
    psi_m = psi_minus_fn(r)
    psi0, psi_p = reconstruct_middle_on_cone(psi_m, v, bg, l, r=r)
    mu = bg.mu(r)
    phi0 = r * mu * psi_m
    phi1 = apply_curlyVR(phi0, bg, v=v, r=r)
    P2 = r * r * stencils.d1(phi1, h)
    cone_u0 = {"Phi0": phi0, "Phi1": phi1, "P2": P2, "Psi_plus": r * psi_p, "psi0": psi0}
    cone_v0 = {k: np.zeros(n_u + 1) for k in cone_u0}
    for k in cone_u0:
        cone_v0[k][0] = cone_u0[k][0]
    if with_monopole:
        c00 = np.sqrt(4 * np.pi) * q
        cone_u0["psi0_l0"] = np.full(n_v + 1, c00)
        cone_v0["psi0_l0"] = np.full(n_u + 1, c00)
    return cone_u0, cone_v0
