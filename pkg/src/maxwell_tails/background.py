"""Kerr background scalars, tortoise coordinate and the hyperboloidal height gauge.

Units are geometric (G = c = 1).  Radii are measured in the same unit as the
mass ``M``.  All functions accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate
from scipy.special import wrightomega

CHARTS = ("BL", "EF", "hyp")


class BackgroundError(ValueError):
    """Raised on invalid mass/spin or points outside a chart's domain."""


def horizon_radii(M: float, a: float = 0.0) -> tuple[float, float]:
    """Return ``(r_plus, r_minus)``, the roots of ``r^2 - 2 M r + a^2``.

    The inner root is computed as ``a^2 / r_plus`` to avoid cancellation at
    small spin.
    """
    M = float(M)
    a = float(a)
    if not np.isfinite(M) or M <= 0.0:
        raise BackgroundError(f"mass must be positive, got M={M}")
    if not np.isfinite(a) or abs(a) >= M:
        raise BackgroundError(f"need |a| < M (sub-extremal), got a={a}, M={M}")
    r_plus = M + np.sqrt((M - a) * (M + a))
    r_minus = a * a / r_plus
    return r_plus, r_minus


@dataclass(frozen=True)
class Background:
    """A sub-extremal Kerr background, ``a = 0`` giving Schwarzschild."""

    M: float = 1.0
    a: float = 0.0
    r_plus: float = field(init=False)
    r_minus: float = field(init=False)

    def __post_init__(self):
        rp, rm = horizon_radii(self.M, self.a)
        object.__setattr__(self, "r_plus", rp)
        object.__setattr__(self, "r_minus", rm)

    @property
    def is_schwarzschild(self) -> bool:
        return self.a == 0.0

    def delta(self, r):
        r = np.asarray(r, dtype=float)
        # factored form keeps the roots exact
        return (r - self.r_plus) * (r - self.r_minus)

    def mu(self, r):
        r = np.asarray(r, dtype=float)
        return self.delta(r) / (r * r + self.a * self.a)

    def sigma(self, r):
        """Compactified coordinate ``r_plus / r``."""
        return self.r_plus / np.asarray(r, dtype=float)

    def radius(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        with np.errstate(divide="ignore"):
            return self.r_plus / sigma


class MetricScalars(NamedTuple):
    delta: np.ndarray
    sigma2: np.ndarray  # Sigma = r^2 + a^2 cos^2(theta)
    mu: np.ndarray
    kappa: np.ndarray  # r - i a cos(theta)


def metric_scalars(bg: Background, r, theta=np.pi / 2) -> MetricScalars:
    """Delta, Sigma, mu and kappa at ``(r, theta)``; requires ``r >= r_plus``."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r < bg.r_plus * (1 - 1e-14)):
        raise BackgroundError("metric scalars requested inside the event horizon")
    c = np.cos(theta)
    delta = bg.delta(r)
    sig = r * r + bg.a**2 * c * c
    mu = bg.mu(r)
    kappa = r - 1j * bg.a * c
    return MetricScalars(*np.broadcast_arrays(delta, sig, mu, kappa))


def _tortoise_consts(bg: Background):
    rp, rm = bg.r_plus, bg.r_minus
    A = 2 * bg.M * rp / (rp - rm)
    B = 2 * bg.M * rm / (rp - rm)
    return A, B


def _tortoise_raw(bg: Background, r):
    A, B = _tortoise_consts(bg)
    out = r + A * np.log(r - bg.r_plus)
    if B != 0.0:
        out = out - B * np.log(r - bg.r_minus)
    return out


def tortoise(bg: Background, r):
    """Tortoise coordinate ``r*`` with ``dr*/dr = (r^2+a^2)/Delta`` and ``r*(3M) = 0``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= bg.r_plus):
        raise BackgroundError("tortoise coordinate diverges at or inside r_plus")
    return _tortoise_raw(bg, r) - _tortoise_raw(bg, np.float64(3 * bg.M))


def inverse_tortoise(bg: Background, rstar):
    """Invert :func:`tortoise`.  Closed form (Wright omega) for ``a = 0``, Newton otherwise."""
    rs = np.asarray(rstar, dtype=float)
    M = bg.M
    if bg.is_schwarzschild:
        # y + ln y = z with y = (r - 2M)/(2M)
        z = (rs / M + 1.0) / 2.0 - np.log(2.0)
        y = np.real(wrightomega(z))
        return 2 * M + 2 * M * y
    A, _ = _tortoise_consts(bg)
    c3 = _tortoise_raw(bg, np.float64(3 * M))
    # Newton in x = ln(r - r_plus); f(x) is monotone with f' = (r^2+a^2)/(r - r_minus)
    x = np.where(rs < 3 * M, (rs + c3 - bg.r_plus) / A, np.log(np.maximum(rs, 3 * M)))
    for _ in range(100):
        r = bg.r_plus + np.exp(x)
        f = _tortoise_raw(bg, r) - c3 - rs
        df = (r * r + bg.a**2) / (r - bg.r_minus)
        dx = -f / df
        dx = np.clip(dx, -5.0, 5.0)
        x = x + dx
        if np.all(np.abs(dx) < 1e-15 * np.maximum(1.0, np.abs(x))):
            break
    return bg.r_plus + np.exp(x)


@dataclass(frozen=True)
class HeightGauge:
    """Height function ``h(r)`` with ``tau = v - h(r)``, normalised to ``h(3M) = 0``.

    ``H = 2/mu - h'`` equals ``(2/mu) (r_plus/r)^2``, so ``mu H`` vanishes like
    ``r^-2`` at infinity and is regular at the horizon.
    """

    bg: Background

    @property
    def c0(self) -> float:
        """``lim r^2 H`` at infinity."""
        return 2.0 * self.bg.r_plus**2

    @property
    def c1(self) -> float:
        """``lim (H - 2/mu)`` at the horizon."""
        bg = self.bg
        return -4.0 * (bg.r_plus**2 + bg.a**2) / (bg.r_plus * (bg.r_plus - bg.r_minus))

    def H(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 / self.bg.mu(r) * (self.bg.r_plus / r) ** 2

    def hprime(self, r):
        """``dh/dr``; the horizon pole of ``2/mu`` cancels analytically."""
        r = np.asarray(r, dtype=float)
        a2 = self.bg.a**2
        return 2 * (r * r + a2) * (r + self.bg.r_plus) / ((r - self.bg.r_minus) * r * r)

    def h(self, r):
        r = np.asarray(r, dtype=float)
        M = self.bg.M
        if self.bg.is_schwarzschild:
            return 2 * (r - 3 * M) + 4 * M * np.log(r / (3 * M))

        def one(x):
            val, _ = integrate.quad(lambda s: self.hprime(s) - 2.0, 3 * M, x, epsabs=1e-13, epsrel=1e-13, limit=200)
            return 2 * (x - 3 * M) + val

        return np.vectorize(one, otypes=[float])(r)


def height_gauge(bg: Background) -> HeightGauge:
    return HeightGauge(bg)


def _azimuth_shift(bg: Background, r):
    # phi_tilde - phi; vanishes at infinity
    if bg.is_schwarzschild:
        return np.zeros_like(r)
    rp, rm = bg.r_plus, bg.r_minus
    return bg.a / (rp - rm) * np.log((r - rp) / (r - rm))


def chart_convert(bg: Background, point, src: str, dst: str) -> np.ndarray:
    """Convert ``(x0, r, theta, phi)`` between the ``BL``, ``EF`` and ``hyp`` charts.

    ``BL`` is Boyer-Lindquist ``(t, r, theta, phi)``, ``EF`` is ingoing
    ``(v, r, theta, phi_tilde)`` with ``v = t + r*`` and ``hyp`` is
    ``(tau, r, theta, phi_tilde)`` with ``tau = v - h(r)``.  ``BL`` requires
    ``r > r_plus``; the other charts extend to the horizon.
    """
    if src not in CHARTS or dst not in CHARTS:
        raise BackgroundError(f"unknown chart; expected one of {CHARTS}")
    p = np.array(point, dtype=float)
    if p.shape[-1] != 4:
        raise BackgroundError("points must have four components (x0, r, theta, phi)")
    r = p[..., 1]
    if np.any(r < bg.r_plus) or ("BL" in (src, dst) and np.any(r <= bg.r_plus)):
        raise BackgroundError("point outside the domain of the requested chart")
    if src == dst:
        return p
    gauge = HeightGauge(bg)
    out = p.copy()
    # everything passes through EF
    if src == "BL":
        out[..., 0] = p[..., 0] + tortoise(bg, r)
        out[..., 3] = p[..., 3] + _azimuth_shift(bg, r)
    elif src == "hyp":
        out[..., 0] = p[..., 0] + gauge.h(r)
    if dst == "BL":
        out[..., 0] = out[..., 0] - tortoise(bg, r)
        out[..., 3] = out[..., 3] - _azimuth_shift(bg, r)
    elif dst == "hyp":
        out[..., 0] = out[..., 0] - gauge.h(r)
    return out
