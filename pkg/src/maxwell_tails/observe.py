"""Measurements on evolved data: energies, Newman-Penrose constants, charges and tail fits."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import stencils
from .evolve import HyperState, HyperSystem
from .spinweight import alpha_lower, beta_raise

EPS = np.finfo(float).eps
FLOOR_FACTOR = 1e3

# allowed p per energy selector; the top hierarchy scalar admits the extended range
P_RANGES = {"Psi_plus": (0.0, 2.0), "Phi0": (0.0, 2.0), "Phi1": (0.0, 2.0), "P2": (0.0, 5.0)}


class MeasurementError(ValueError):
    pass


# ---------------------------------------------------------------------------
# energies


@dataclass(frozen=True)
class EnergySpec:
    k: int = 0
    p: float = 0.0
    which: str = "Psi_plus"

    def __post_init__(self):
        if self.k not in (0, 1):
            raise MeasurementError("energy regularity k must be 0 or 1")
        if self.which not in P_RANGES:
            raise MeasurementError(f"unknown energy selector {self.which!r}")
        lo, hi = P_RANGES[self.which]
        if not (lo <= self.p <= hi) or (self.p == hi and self.which == "P2"):
            raise MeasurementError(f"p={self.p} outside the range [{lo}, {hi}] for {self.which}")


def _simpson_sigma(integrand: np.ndarray, sigma: np.ndarray) -> float:
    return float(integrate.simpson(integrand, x=sigma))


def _fill_scri(g: np.ndarray) -> np.ndarray:
    """Replace the sigma = 0 entry by cubic extrapolation from nodes 1..4."""
    g = g.copy()
    g[0] = 4 * g[1] - 6 * g[2] + 4 * g[3] - g[4]
    return g


def _derivative_set(f, f_t, sigma, h, R):
    """``(Y f, rV f)`` on the slice from ``f`` and ``d_tau f``."""
    f_s = stencils.d1(f, h)
    Y = 2 * (1 + sigma) * f_t + sigma**2 / R * f_s
    rV = sigma * (2 * R * f_t - (1 - sigma) * f_s)
    return Y, rV


def _weighted_norm(f, f_t, f_tt, gamma: float, k: int, sigma, h, R, ang2: float) -> float:
    """Per-mode ``W^k_gamma`` norm squared with ``d^3 mu = dr dOmega``."""
    dens = np.abs(f) ** 2
    if k == 1:
        Y, rV = _derivative_set(f, f_t, sigma, h, R)
        dens = dens * (1 + ang2) + np.abs(Y) ** 2 + np.abs(rV) ** 2
    # r^gamma dr = R^(gamma+1) sigma^(-gamma-2) dsigma
    with np.errstate(divide="ignore", invalid="ignore"):
        g = R ** (gamma + 1) * sigma ** (-gamma - 2) * dens
    if not np.isfinite(g[0]):
        g = _fill_scri(g)
    return _simpson_sigma(g, sigma)


def energy_F(state: HyperState, spec: EnergySpec, system: HyperSystem) -> float:
    """``F(k, p) = ||rV Psi||^2_{W^k_{p-2}} + ||Psi||^2_{W^k_{-2}}`` for the selected field.

    The selector names an evolved variable that is finite at scri.  ``k = 1``
    uses the derivative set ``{Y, rV}`` plus the ladder-weighted angular terms.
    """
    if spec.which not in state.fields:
        raise MeasurementError(f"state has no field {spec.which}")
    grid, bg = system.grid, system.bg
    sigma, h, R = grid.sigma, grid.h, bg.r_plus
    f, ft = state.fields[spec.which], state.pis[spec.which]
    s, l = state.mode.s, state.mode.l
    ang2 = alpha_lower(s, l) ** 2 + beta_raise(s, l) ** 2
    need_tt = spec.k == 1
    ftt = system.pi_tau(state)[spec.which] if need_tt else None
    _, rVf = _derivative_set(f, ft, sigma, h, R)
    rVf_t = None
    if need_tt:
        _, rVf_t = _derivative_set(ft, ftt, sigma, h, R)
    e1 = _weighted_norm(rVf, rVf_t, None, spec.p - 2, spec.k, sigma, h, R, ang2)
    e2 = _weighted_norm(f, ft, None, -2.0, spec.k, sigma, h, R, ang2)
    return e1 + e2


# ---------------------------------------------------------------------------
# Newman-Penrose constants


@dataclass
class NPConstantRecord:
    index: int
    spin: int
    tau: list = field(default_factory=list)
    values: list = field(default_factory=list)
    node_values: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    order: int = 2

    def append(self, tau: float, value: complex, node_value: complex, flag: bool):
        self.tau.append(tau)
        self.values.append(value)
        self.node_values.append(node_value)
        self.flags.append(flag)

    def drift(self, tau_from: float, tau_to: float | None = None) -> float:
        """Relative spread ``max |N - N_ref| / |N_ref|`` over the window; ``N_ref`` is its first value."""
        t = np.asarray(self.tau)
        v = np.asarray(self.values, dtype=complex)
        sel = (t >= tau_from) & (t <= (np.inf if tau_to is None else tau_to))
        if not np.any(sel):
            raise MeasurementError("no NPC samples in the drift window")
        w = v[sel]
        ref = w[0]
        if ref == 0:
            return float(np.max(np.abs(w)))
        return float(np.max(np.abs(w - ref)) / abs(ref))


def _top_scalar(state: HyperState, i: int, spin: int):
    """Top hierarchy scalar and its tau derivative near scri (``Phi = U/(1-sigma)`` for weighted ``U``)."""
    if i != 1:
        raise MeasurementError("only the first N-P constant is available from the evolved hierarchy")
    if spin == 1:
        name = "Psi_plus"
    elif spin == -1:
        name = "P2"
    else:
        raise MeasurementError("N-P constants are defined for spin +1 and -1")
    if state.mode.s != spin or name not in state.fields:
        raise MeasurementError(f"state does not carry the spin {spin} hierarchy")
    return state.fields[name], state.pis[name]


def np_constant_profile(U, U_t, sigma, h, R):
    """``curlyV_R Phi`` near scri for ``Phi = U / (1 - sigma)``."""
    Us = stencils.d1(U, h)
    om = 1 - sigma
    phi_s = Us / om + U / om**2
    return -R * phi_s + 2 * R * R * U_t / om**2


def np_constant(state: HyperState, i: int, spin: int, system: HyperSystem, n_nodes: int = 3):
    """Return ``(value, node_value, flag)`` for the ``i``-th N-P constant.

    ``value`` is the quadratic (order 2) extrapolation to ``sigma = 0`` from the
    ``n_nodes`` outermost interior nodes; ``node_value`` is the scri node itself.
    """
    if n_nodes < 3:
        raise MeasurementError("extrapolation needs at least 3 nodes")
    U, Ut = _top_scalar(state, i, spin)
    sigma, h, R = system.grid.sigma, system.grid.h, system.bg.r_plus
    m = max(n_nodes + 1, stencils.MIN_POINTS)
    g = np_constant_profile(U[:m], Ut[:m], sigma[:m], h, R)
    # polynomial extrapolation in sigma = r_plus/r from the outermost interior nodes
    w = stencils.lagrange_weights(sigma[1:n_nodes + 1], 0.0)
    value = complex(np.dot(w, g[1:n_nodes + 1]))
    node_value = complex(g[0])
    flag = not (np.isfinite(value.real) and np.isfinite(value.imag))
    return value, node_value, flag


def np_constant_record(states, i: int, spin: int, system: HyperSystem) -> NPConstantRecord:
    rec = NPConstantRecord(i, spin)
    for st in states:
        v, nv, fl = np_constant(st, i, spin, system)
        rec.append(st.tau, v, nv, fl)
    return rec


# ---------------------------------------------------------------------------
# charges


@dataclass(frozen=True)
class ChargeRecord:
    q_E: float
    q_B: float
    samples: np.ndarray  # complex q at each (tau, r) sample
    spread: float

    @property
    def q(self) -> complex:
        return complex(self.q_E, self.q_B)


def charge(psi0_l0, reference: complex | None = None) -> ChargeRecord:
    """Charges from samples of the ``l = 0`` coefficient of ``psi_0``.

    ``psi_0`` of the stationary part is the constant ``q_E + i q_B`` on every
    sphere, so its ``l = 0`` coefficient equals ``sqrt(4 pi) (q_E + i q_B)``.
    """
    c = np.asarray(psi0_l0, dtype=complex).ravel()
    c = c[np.isfinite(c)]
    if c.size == 0:
        raise MeasurementError("no finite psi_0 samples")
    q = c / math.sqrt(4 * math.pi)
    ref = q[0] if reference is None else complex(reference)
    scale = abs(ref)
    dev = np.max(np.abs(q - ref))
    spread = float(dev / scale) if scale > 0 else float(dev)
    return ChargeRecord(float(ref.real), float(ref.imag), q, spread)


def stationary_subtraction(psi0, q: complex | ChargeRecord, r, theta=None, a: float = 0.0):
    """``phi_0 - phi_0^sta = kappa^-2 (psi_0 - (q_E + i q_B))`` per sample (full-sphere values)."""
    if isinstance(q, ChargeRecord):
        q = q.q
    r = np.asarray(r, dtype=float)
    kappa = r - 1j * a * np.cos(theta if theta is not None else 0.0) if a else r
    return (np.asarray(psi0) - q) / kappa**2


# ---------------------------------------------------------------------------
# tails


@dataclass
class TailFit:
    observer: str
    field: str
    window: tuple
    lpi_tau: np.ndarray
    lpi: np.ndarray
    exponent: float | None
    residual: float | None
    flagged: bool = False
    advanced: bool = False
    reason: str = ""

    def as_dict(self) -> dict:
        return {
            "observer": self.observer,
            "field": self.field,
            "window": [float(self.window[0]), float(self.window[1])],
            "exponent": None if self.exponent is None else float(self.exponent),
            "residual": None if self.residual is None else float(self.residual),
            "flagged": bool(self.flagged),
            "advanced": bool(self.advanced),
            "reason": self.reason,
        }


def floor_flags(f, factor: float = FLOOR_FACTOR) -> np.ndarray:
    """True where ``|f|`` has dropped below ``factor`` ulps of its running maximum."""
    a = np.abs(np.asarray(f))
    run = np.maximum.accumulate(a)
    flags = a < factor * EPS * run
    # once flagged, everything later counts as floor
    if np.any(flags):
        flags[np.argmax(flags):] = True
    return flags


def lpi_series(tau, f, n: int | None = None):
    """``-d ln|f| / d ln tau`` on log-spaced resamples (centred differences)."""
    tau = np.asarray(tau, dtype=float)
    a = np.abs(np.asarray(f))
    if np.any(tau <= 0):
        raise MeasurementError("tau must be positive for log resampling")
    n = n or max(50, len(tau))
    lt = np.linspace(np.log(tau[0]), np.log(tau[-1]), n)
    with np.errstate(divide="ignore"):
        la = np.interp(lt, np.log(tau), np.log(a))
    return np.exp(lt), -np.gradient(la, lt)


def _zero_crossings(tau, f):
    f = np.asarray(f)
    if np.iscomplexobj(f):
        # project on the phase of the last sample
        ph = f[-1] / abs(f[-1]) if abs(f[-1]) > 0 else 1.0
        g = (f * np.conj(ph)).real
    else:
        g = f
    s = np.sign(g)
    idx = np.nonzero(s[1:] * s[:-1] < 0)[0]
    return tau[idx + 1]


def local_power_index(tau, f, window=None, *, observer: str = "", field: str = "",
                      min_samples: int = 50, min_ratio: float = 2.0, quadratic: bool = False) -> TailFit:
    """Tail exponent as the median LPI over the last third of the fit window.

    The default window is ``[tau_end/2, tau_end]``.  Samples at the round-off
    floor are excluded; sign changes in the window move its start past the last
    zero crossing.  ``quadratic`` marks series that are squares of fields
    (energies): their floor is tested on ``sqrt|f|``.
    """
    tau = np.asarray(tau, dtype=float)
    f = np.asarray(f)
    flags = floor_flags(np.sqrt(np.abs(f)) if quadratic else f)
    good = ~flags & (tau > 0)
    if not np.any(good):
        return TailFit(observer, field, (np.nan, np.nan), np.zeros(0), np.zeros(0), None, None,
                       True, False, "series at round-off floor")
    t_last = tau[good][-1]
    t_a, t_b = (0.5 * t_last, t_last) if window is None else (float(window[0]), min(float(window[1]), t_last))
    t_req = tau[-1] if window is None else float(window[1])
    flagged = bool(np.any(flags[(tau >= t_a) & (tau <= t_req)]))
    sel = good & (tau >= t_a) & (tau <= t_b)
    advanced = False
    zc = _zero_crossings(tau[sel], f[sel])
    if zc.size:
        t_a = float(zc[-1])
        advanced = True
        sel = good & (tau >= t_a) & (tau <= t_b)
    reason = ""
    if t_b / max(t_a, 1e-300) < min_ratio:
        reason = f"window [{t_a:.4g}, {t_b:.4g}] spans less than a factor {min_ratio}"
    elif np.count_nonzero(sel) < min_samples:
        reason = f"fewer than {min_samples} usable samples"
    if reason:
        return TailFit(observer, field, (t_a, t_b), np.zeros(0), np.zeros(0), None, None, flagged, advanced, reason)
    lt, lp = lpi_series(tau[sel], f[sel])
    third = lt >= lt[0] * (lt[-1] / lt[0]) ** (2.0 / 3.0)
    fit = float(np.median(lp[third]))
    res = float(np.max(np.abs(lp[third] - fit)))
    return TailFit(observer, field, (t_a, t_b), lt, lp, fit, res, flagged, advanced, "")


def relative_deviation(a, b) -> float:
    """``max |a - b| / max |b|`` over matching samples."""
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
