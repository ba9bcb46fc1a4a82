"""Spin-weighted spherical harmonics, edth ladder coefficients and mode projection.

Edth conventions::

    edth  f = (d_theta + i csc(theta) d_phi - s cot(theta)) f / sqrt(2)    (spin s -> s+1)
    edth' f = (d_theta - i csc(theta) d_phi + s cot(theta)) f / sqrt(2)    (spin s -> s-1)

Harmonics are built from Wigner small-d functions with the phase chosen so
that ``s = 0`` reproduces the Condon-Shortley spherical harmonics and

    edth' Y^s_lm = alpha_lower(s, l) Y^{s-1}_lm  with alpha_lower = -sqrt((l+s)(l-s+1)/2)
    edth  Y^s_lm = beta_raise(s, l)  Y^{s+1}_lm  with beta_raise  = +sqrt((l-s)(l+s+1)/2)

Every convention-dependent sign downstream is read from :func:`ladder_coefficients`.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_SPIN = 2


class ModeError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class ModeIndex:
    s: int
    l: int
    m: int = 0

    def __post_init__(self):
        for name in ("s", "l", "m"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ModeError(f"{name} must be an integer")
        if abs(self.s) > MAX_SPIN:
            raise ModeError(f"|s| <= {MAX_SPIN} required, got s={self.s}")
        if self.l < abs(self.s):
            raise ModeError(f"l >= |s| required, got s={self.s}, l={self.l}")
        if abs(self.m) > self.l:
            raise ModeError(f"|m| <= l required, got l={self.l}, m={self.m}")


@dataclass(frozen=True)
class LadderCoefficients:
    s: int
    l: int
    lam: int  # (l+s)(l-s+1), the eigenvalue of -2 edth edth'
    alpha_lower: float
    beta_raise: float


def _check(s: int, l: int):
    if l < abs(s):
        raise ModeError(f"l >= |s| required, got s={s}, l={l}")


def eigenvalue_lambda(s: int, l: int) -> int:
    """``(l+s)(l-s+1)``; ``2 edth edth' Y = -lambda Y`` on spin ``s``."""
    _check(s, l)
    return (l + s) * (l - s + 1)


# hook used by the self-check to confirm sign errors are caught downstream
_ALPHA_SIGN_FLIP: set[int] = set()


@contextlib.contextmanager
def perturbed_ladder_sign(s: int):
    """Temporarily flip the sign of ``alpha_lower(s, .)`` (test hook)."""
    _ALPHA_SIGN_FLIP.add(s)
    try:
        yield
    finally:
        _ALPHA_SIGN_FLIP.discard(s)


def alpha_lower(s: int, l: int) -> float:
    _check(s, l)
    val = -math.sqrt((l + s) * (l - s + 1) / 2.0)
    return -val if s in _ALPHA_SIGN_FLIP else val


def beta_raise(s: int, l: int) -> float:
    _check(s, l)
    return math.sqrt((l - s) * (l + s + 1) / 2.0)


def ladder_coefficients(s: int, l: int) -> LadderCoefficients:
    _check(s, l)
    return LadderCoefficients(s, l, eigenvalue_lambda(s, l), alpha_lower(s, l), beta_raise(s, l))


def tsi_coefficient(l: int) -> float:
    """Mode reduction of ``2 edth'^2`` from spin +1 to spin -1."""
    return 2.0 * alpha_lower(1, l) * alpha_lower(0, l)


@lru_cache(maxsize=None)
def _wigner_terms(l: int, m1: int, m2: int):
    # d^l_{m1 m2}(theta) = sum_k c_k cos(theta/2)^p_k sin(theta/2)^q_k
    pref = math.sqrt(
        math.factorial(l + m1) * math.factorial(l - m1) * math.factorial(l + m2) * math.factorial(l - m2)
    )
    terms = []
    for k in range(max(0, m2 - m1), min(l + m2, l - m1) + 1):
        den = math.factorial(l + m2 - k) * math.factorial(k) * math.factorial(m1 - m2 + k) * math.factorial(l - m1 - k)
        c = (-1) ** (m1 - m2 + k) * pref / den
        terms.append((c, 2 * l + m2 - m1 - 2 * k, m1 - m2 + 2 * k))
    return tuple(terms)


def wigner_d(l: int, m1: int, m2: int, theta):
    """Wigner small-d ``d^l_{m1 m2}(theta)`` by the explicit factorial sum."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.zeros_like(theta)
    for coef, p, q in _wigner_terms(l, m1, m2):
        # integer powers; 0**0 = 1 gives the regular pole values
        out = out + coef * c**p * s**q
    return out


def evaluate_swsh(mode: ModeIndex, theta, phi=0.0):
    """Orthonormal ``Y^s_lm(theta, phi)``; finite at both poles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s, l, m = mode.s, mode.l, mode.m
    norm = math.sqrt((2 * l + 1) / (4 * math.pi))
    # d^l_{m,-s}: Condon-Shortley at s = 0, ladder signs as in the module docstring
    return norm * wigner_d(l, m, -s, theta) * np.exp(1j * m * phi)


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre in cos(theta) times uniform phi; exact to degree ``2 n - 1``."""

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray  # shape (n_theta, n_phi)
    l_max: int

    @property
    def shape(self):
        return self.weights.shape

    def mesh(self):
        return np.meshgrid(self.theta, self.phi, indexing="ij")


def make_sphere_grid(l_max: int) -> SphereGrid:
    n = 2 * l_max + 4
    x, w = np.polynomial.legendre.leggauss(n)
    theta = np.arccos(x)
    n_phi = 2 * l_max + 4
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    weights = np.outer(w, np.full(n_phi, 2 * np.pi / n_phi))
    return SphereGrid(theta, phi, weights, l_max)


def sample_swsh(mode: ModeIndex, grid: SphereGrid) -> np.ndarray:
    th, ph = grid.mesh()
    return evaluate_swsh(mode, th, ph)


def integrate_sphere(f: np.ndarray, grid: SphereGrid) -> complex:
    return complex(np.sum(f * grid.weights))


def project_mode(f: np.ndarray, grid: SphereGrid, mode: ModeIndex) -> complex:
    """Inner product of sampled ``f`` (spin ``mode.s``) with ``Y^s_lm``."""
    if f.shape != grid.shape:
        raise ModeError(f"samples have shape {f.shape}, grid expects {grid.shape}")
    if mode.l > grid.l_max:
        raise ModeError(f"grid resolves l <= {grid.l_max}, requested l={mode.l}")
    return integrate_sphere(f * np.conj(sample_swsh(mode, grid)), grid)


def synthesize(coeffs: dict, grid: SphereGrid) -> np.ndarray:
    """Sum ``c Y`` over a ``{ModeIndex: c}`` mapping on ``grid``."""
    out = np.zeros(grid.shape, dtype=complex)
    for mode, c in coeffs.items():
        if mode.l > grid.l_max:
            raise ModeError(f"grid resolves l <= {grid.l_max}, requested l={mode.l}")
        out += c * sample_swsh(mode, grid)
    return out


def _d1(f, x, h):
    return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h)


def edth_numeric(func, s: int, theta, phi, prime: bool = False, h: float = 1e-3):
    """Apply the differential edth (or edth') formula by central differences.

    ``func(theta, phi)`` evaluates a spin-``s`` quantity.  Poles are excluded.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    dth = _d1(lambda t: func(t, phi), theta, h)
    dph = _d1(lambda p: func(theta, p), phi, h)
    f0 = func(theta, phi)
    sgn = -1.0 if prime else 1.0
    return (dth + sgn * 1j * dph / np.sin(theta) - sgn * s * f0 / np.tan(theta)) / math.sqrt(2.0)
