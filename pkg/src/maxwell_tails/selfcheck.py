"""Exact-identity checks run by ``maxwell-tails check``."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import background as bgm
from . import equations as eqm
from . import spinweight as sw


@dataclass
class CheckReport:
    results: list = field(default_factory=list)  # (module, name, ok, detail)

    def add(self, module: str, name: str, ok: bool, detail: str = ""):
        self.results.append((module, name, bool(ok), detail))

    @property
    def failures(self) -> list:
        return [r for r in self.results if not r[2]]

    def counts(self) -> dict:
        out: dict = {}
        for mod, _, ok, _ in self.results:
            p, f = out.get(mod, (0, 0))
            out[mod] = (p + ok, f + (not ok))
        return out

    def lines(self) -> list[str]:
        rows = [f"{'PASS' if ok else 'FAIL'}  {mod}.{name}" + (f"  ({d})" if d else "")
                for mod, name, ok, d in self.results]
        for mod, (p, f) in self.counts().items():
            rows.append(f"{mod}: {p} passed, {f} failed")
        rows.append(f"total: {len(self.results) - len(self.failures)} passed, {len(self.failures)} failed")
        return rows


def _guard(report: CheckReport, module: str, name: str, fn: Callable[[], tuple]):
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash counts as a failure
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    report.add(module, name, ok, detail)


def check_spinweight(report: CheckReport, l_max: int = 8):
    def eig():
        bad = [(s, l) for s in range(-2, 3) for l in range(abs(s), l_max + 1)
               if sw.eigenvalue_lambda(s, l) != (l + s) * (l - s + 1)]
        return not bad, f"{bad}" if bad else ""

    def ladder_product():
        # 2 edth edth' Y = -lambda Y  <=>  2 beta(s-1) alpha(s) = -lambda(s)
        bad = []
        for s in range(-1, 3):
            for l in range(max(abs(s), abs(s - 1)), l_max + 1):
                lhs = 2 * sw.beta_raise(s - 1, l) * sw.alpha_lower(s, l)
                if abs(lhs + sw.eigenvalue_lambda(s, l)) > 1e-12:
                    bad.append((s, l))
        return not bad, f"{bad}" if bad else ""

    def tsi_coeff():
        bad = [l for l in range(1, l_max + 1) if abs(sw.tsi_coefficient(l) - l * (l + 1)) > 1e-12]
        return not bad, f"l={bad}" if bad else ""

    def edth_numeric():
        th = np.linspace(0.4, 2.7, 7)
        ph = np.full_like(th, 0.3)
        worst = 0.0
        for s in (-1, 0, 1):
            for l in range(max(abs(s), abs(s - 1), 1), 5):
                for m in (-1, 0, 1):
                    if abs(m) > l:
                        continue
                    mode = sw.ModeIndex(s, l, m)
                    fn = lambda t, p, mode=mode: sw.evaluate_swsh(mode, t, p)
                    lo = sw.edth_numeric(fn, s, th, ph, prime=True)
                    ref = sw.alpha_lower(s, l) * sw.evaluate_swsh(sw.ModeIndex(s - 1, l, m), th, ph) \
                        if l >= abs(s - 1) else 0
                    worst = max(worst, float(np.max(np.abs(lo - ref))))
        return worst < 1e-8, f"max error {worst:.2e}"

    def orthonormal():
        grid = sw.make_sphere_grid(6)
        worst = 0.0
        for s in (-1, 0, 1):
            modes = [sw.ModeIndex(s, l, m) for l in range(max(abs(s), 0), 5) for m in range(-l, l + 1)]
            Y = [sw.sample_swsh(md, grid) for md in modes]
            G = np.array([[sw.integrate_sphere(a * np.conj(b), grid) for b in Y] for a in Y])
            worst = max(worst, float(np.max(np.abs(G - np.eye(len(Y))))))
        return worst < 1e-12, f"max deviation {worst:.2e}"

    for name, fn in (("eigenvalues", eig), ("ladder_products", ladder_product), ("tsi_coefficient", tsi_coeff),
                     ("edth_against_harmonics", edth_numeric), ("orthonormality", orthonormal)):
        _guard(report, "spinweight", name, fn)


def check_background(report: CheckReport):
    def delta_factor():
        worst = 0.0
        for a in (0.0, 0.3, 0.9, 0.999):
            bg = bgm.Background(1.0, a)
            r = np.linspace(bg.r_plus, 20, 50)
            d1 = r * r - 2 * r + a * a
            worst = max(worst, float(np.max(np.abs(bg.delta(r) - d1) / np.maximum(1, r * r))))
            worst = max(worst, abs(bg.r_plus * bg.r_minus - a * a), abs(bg.r_plus + bg.r_minus - 2.0))
        return worst < 1e-13, f"max deviation {worst:.2e}"

    def tortoise_roundtrip():
        worst = 0.0
        for a in (0.0, 0.5):
            bg = bgm.Background(1.0, a)
            r = bg.r_plus + np.geomspace(1e-6, 1e3, 40)
            back = bgm.inverse_tortoise(bg, bgm.tortoise(bg, r))
            worst = max(worst, float(np.max(np.abs(back - r) / r)))
        return worst < 1e-10, f"max relative error {worst:.2e}"

    def charts():
        worst = 0.0
        for a in (0.0, 0.6):
            bg = bgm.Background(1.0, a)
            pts = np.array([[1.0, r, 1.0, 0.5] for r in (bg.r_plus * 1.01, 3.0, 10.0, 100.0)])
            for src, dst in (("BL", "EF"), ("BL", "hyp"), ("EF", "hyp")):
                back = bgm.chart_convert(bg, bgm.chart_convert(bg, pts, src, dst), dst, src)
                worst = max(worst, float(np.max(np.abs(back - pts))))
        return worst < 1e-9, f"max deviation {worst:.2e}"

    def gauge_constants():
        bg = bgm.Background(1.0, 0.0)
        g = bgm.height_gauge(bg)
        return g.c0 == 8.0 and g.c1 == -4.0, f"c0={g.c0}, c1={g.c1}"

    for name, fn in (("delta_factorization", delta_factor), ("tortoise_roundtrip", tortoise_roundtrip),
                     ("chart_roundtrips", charts), ("gauge_constants", gauge_constants)):
        _guard(report, "background", name, fn)


def check_equations(report: CheckReport):
    def tables():
        spec = eqm.hierarchy_coefficients(6)
        ok = spec.x[(1, 0)] == 3 and spec.x[(2, 0)] == Fraction(-72, 5)
        ok &= [spec.f1(i) for i in range(3)] == [2, 6, 12]
        ok &= [spec.f2(i) for i in range(3)] == [-4, -6, -8]
        ok &= [spec.g(i) for i in range(3)] == [0, 12, 48]
        res = eqm.cancellation_residuals(spec)
        ok &= all(v == 0 for v in res.values())
        return ok, f"x10={spec.x[(1, 0)]}, x20={spec.x[(2, 0)]}"

    def teukolsky():
        rows = []
        ok = True
        F = lambda R, T: np.exp(-(R - 5) ** 2 / 7) * (np.sin(T) ** 2 + np.cos(T) * np.sin(T) * R / 9 + 0.3)
        for a in (0.0, 0.6):
            bg = bgm.Background(1.0, a)
            for s in (-1, 0, 1):
                errs = []
                for n in (60, 120):
                    r = np.linspace(3.0, 8.0, n)
                    th = np.linspace(0.4, 2.7, n)
                    Rm, Tm = np.meshgrid(r, th, indexing="ij")
                    chk = eqm.apply_teukolsky_operator(s, bg, r, th, F(Rm, Tm), omega=0.37, m=1)
                    errs.append(float(np.max(np.abs(chk.difference)) / np.max(np.abs(chk.tme))))
                ratio = errs[0] / errs[1]
                good = errs[1] < 1e-4 and ratio > 8
                ok &= good
                rows.append(f"a={a},s={s}:{errs[1]:.1e}/x{ratio:.0f}")
        return ok, "; ".join(rows)

    def tsi_on_modes():
        # TSI residual of a consistent pair is zero; the coefficient comes from the ladder table
        r = np.linspace(3, 9, 11)
        phi_plus = np.exp(-r)
        ok = True
        for l in range(1, 6):
            res = eqm.tsi_residual(phi_plus, l * (l + 1) * phi_plus, sw.ModeIndex(1, l), sw.ModeIndex(-1, l))
            ok &= float(np.max(np.abs(res))) < 1e-12
        return ok, ""

    for name, fn in (("hierarchy_tables", tables), ("teukolsky_transcription", teukolsky),
                     ("tsi_identity", tsi_on_modes)):
        _guard(report, "equations", name, fn)


def self_check() -> CheckReport:
    report = CheckReport()
    check_spinweight(report)
    check_background(report)
    check_equations(report)
    return report
