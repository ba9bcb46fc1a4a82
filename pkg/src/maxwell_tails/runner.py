"""Execute configured runs and write their artifacts."""
from __future__ import annotations

import logging
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, evolve as ev, observe as ob, outputs
from .background import Background, tortoise
from .config import RunConfig, serialize
from .spinweight import ModeIndex, evaluate_swsh

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "MAXTAILS_OUTPUT_ROOT"
ENERGY_P = (0.0, 1.0, 2.0)
OBS_THETA = np.pi / 3  # sphere point for full-field characteristic observers


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))


def run_directory(cfg: RunConfig) -> Path:
    sub = cfg["outputs"]["directory"] or cfg["run"]["name"]
    p = Path(sub)
    return p if p.is_absolute() else output_root() / p


def versions() -> dict:
    import numba
    import scipy

    return {"maxwell_tails": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__}


@dataclass
class RunResult:
    name: str
    status: str
    directory: str
    series: dict = field(default_factory=dict)  # key -> (tau, values)
    monitors: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)  # key -> TailFit
    meta: dict = field(default_factory=dict)
    message: str = ""


def _window(cfg: RunConfig):
    w = cfg["fit"]["window"]
    return None if w == "auto" else w


def _family(cfg: RunConfig) -> ev.DataFamily:
    d = cfg["data"]
    return ev.DataFamily(d["family"], A=d["A"], r_c=d["r_c"], w=d["w"], N_inf=d["N_inf"], r_cut=d["r_cut"],
                         q=complex(d["q"], d["q_B"]), time_profile=d["time_profile"])


def _obs_label(sigma: float) -> str:
    return "scri" if sigma == 0 else f"sigma{sigma:g}"


def run_hyperboloidal(cfg: RunConfig, per_step=None, per_step_until: float = 0.0) -> RunResult:
    bg = Background(cfg["background"]["M"], cfg["background"]["a"])
    mode = ModeIndex(cfg["mode"]["s"], cfg["mode"]["l"], cfg["mode"]["m"])
    grid = ev.RadialGrid(cfg["grid"]["N"], cfg["grid"]["fd_order"])
    system = ev.build_system(bg, mode, grid, cfg["grid"]["dissipation"], cfg["integration"]["cfl"])
    state = ev.make_initial_data(_family(cfg), mode, grid, bg, system)
    observers = cfg["observers"]["sigma"]
    monitors = {}
    if mode.l == 1:
        monitors["npc"] = lambda st: ob.np_constant(st, 1, mode.s, system)[1]
        monitors["npc_extrapolated"] = lambda st: ob.np_constant(st, 1, mode.s, system)[0]
    which = "Psi_plus" if mode.s == 1 else "Phi0"
    for p in ENERGY_P:
        spec = ob.EnergySpec(0, p, which)
        monitors[f"F_k0_p{p:g}"] = lambda st, spec=spec: ob.energy_F(st, spec, system)
    if mode.s == -1:
        monitors["constraint_phi1"] = lambda st: ev.constraint_drift(st, system)["phi1"]
        monitors["constraint_phi2"] = lambda st: ev.constraint_drift(st, system)["phi2"]
    run = ev.evolve_hyperboloidal(system, state, cfg["integration"]["tau_end"],
                                  dt=system.dt_max(), sample_dt=cfg["integration"]["sample_dt"],
                                  observers=observers, monitors=monitors,
                                  per_step=per_step, per_step_until=per_step_until)
    res = RunResult(cfg["run"]["name"], run.status, "", message=run.message)
    for name in system.names:
        for o, sig in enumerate(observers):
            res.series[f"{name}_{_obs_label(sig)}"] = (run.tau, run.series[name][o])
    if mode.s == -1:
        # psi_{-1} at interior observers, radiation field Psi_{-1} = Phi0 / mu at scri
        for o, sig in enumerate(observers):
            if sig == 0:
                res.series["Psi_minus_scri"] = (run.tau, run.series["Phi0"][o])
            elif sig < 1:
                r = bg.r_plus / sig
                res.series[f"psi_minus_{_obs_label(sig)}"] = (run.tau, run.series["Phi0"][o] / (r * bg.mu(r)))
    res.monitors = {"tau": run.tau, **run.monitors}
    res.meta = {"dt": run.dt, "steps": run.steps, "wall_seconds": run.wall,
                "max_speed": system.max_speed(), "outflow_ok": system.outflow_ok()}
    if "npc" in run.monitors and len(run.tau):
        npc = np.asarray(run.monitors["npc"], dtype=complex)
        rec = ob.NPConstantRecord(1, mode.s, list(run.tau), list(npc), list(npc), [False] * len(npc))
        t0 = cfg["fit"]["npc_drift_from"]
        res.meta["npc"] = {"initial": npc[0], "final": npc[-1], "drift_from": t0,
                           "drift": rec.drift(t0) if run.tau[-1] >= t0 else None,
                           "extrapolated_final": run.monitors["npc_extrapolated"][-1]}
    if mode.s == -1:
        res.meta["constraint_drift"] = {
            "phi1_max": float(np.max(run.monitors["constraint_phi1"])),
            "phi2_max": float(np.max(run.monitors["constraint_phi2"])),
        }
    return res


def run_characteristic(cfg: RunConfig) -> RunResult:
    bg = Background(cfg["background"]["M"], cfg["background"]["a"])
    mode = ModeIndex(cfg["mode"]["s"], cfg["mode"]["l"], cfg["mode"]["m"])
    d, ch = cfg["data"], cfg["characteristic"]
    h = ch["h"]
    n_u, n_v = int(round(ch["u_max"] / h)), int(round(ch["v_max"] / h))
    q = complex(d["q"], d["q_B"])
    A, r_c, w = d["A"], d["r_c"], d["w"]
    cu, cv = ev.maxwell_cone_data(bg, mode.l, lambda r: A * ev.bump(r, r_c, w), 0.0, 0.0, h, n_v, n_u, q=q)
    keep = ("Phi0", "Phi1", "psi0", "psi0_l0")
    cu = {k: cu[k] for k in keep}
    cv = {k: cv[k] for k in keep}
    radii = cfg["observers"]["r"]
    rstars = [float(tortoise(bg, r)) for r in radii]
    t0 = time.perf_counter()
    sol = ev.evolve_characteristic(cu, cv, 0.0, 0.0, h, n_u, n_v, bg, mode, stride=ch["stride"],
                                   observers_rstar=rstars)
    res = RunResult(cfg["run"]["name"], "ok", "")
    chg_samples = []
    for o, r in enumerate(radii):
        tau = sol.observer_tau(o)
        ok = np.isfinite(sol.obs_series["Phi0"][o])
        lab = f"r{r:g}"
        mu = bg.mu(r)
        psi_m = sol.obs_series["Phi0"][o] / (r * mu)
        psi_p = sol.spin_plus_at_observer(o)
        psi0 = sol.obs_series["psi0"][o]
        res.series[f"psi_minus_{lab}"] = (tau[ok], psi_m[ok])
        res.series[f"psi0_{lab}"] = (tau[ok], psi0[ok])
        res.series[f"psi_plus_{lab}"] = (tau[ok], psi_p[ok])
        # full psi_0 at a sample point of the sphere: Coulomb part from l = 0 plus the radiative mode
        y00 = evaluate_swsh(ModeIndex(0, 0), OBS_THETA).real
        yl = evaluate_swsh(ModeIndex(0, mode.l, 0), OBS_THETA).real
        psi0_full = sol.obs_series["psi0_l0"][o] * y00 + psi0 * yl
        phi0_sub = ob.stationary_subtraction(psi0_full, q, r)
        res.series[f"phi0_raw_{lab}"] = (tau[ok], (psi0_full / r**2)[ok])
        res.series[f"phi_plus_{lab}"] = (tau[ok], (psi_p / (np.sqrt(2.0) * r * r))[ok])
        res.series[f"phi0_minus_sta_{lab}"] = (tau[ok], phi0_sub[ok])
        res.series[f"phi_minus_{lab}"] = (tau[ok], (np.sqrt(2.0) * psi_m)[ok])
        chg_samples.append(sol.obs_series["psi0_l0"][o][ok])
    # charge on the stored lattice after the first crossing
    t_cross = 2 * max(rstars) if rstars else 0.0
    lat = sol.fields["psi0_l0"]
    sel = sol.u >= min(t_cross, sol.u[-1])
    chg = ob.charge(np.concatenate([lat[sel].ravel()] + chg_samples), reference=q if q != 0 else None)
    res.meta = {"wall_seconds": time.perf_counter() - t0, "lattice": [n_u, n_v], "h": h,
                "charge": {"q_E": chg.q_E, "q_B": chg.q_B, "spread": chg.spread}}
    return res


def _write(cfg: RunConfig, res: RunResult, out: Path, fits: dict) -> None:
    fm = cfg["outputs"]["formats"]
    if "csv" in fm:
        for key, (tau, f) in res.series.items():
            outputs.write_series_csv(out / f"{key}.csv", tau, f)
        if res.monitors:
            cols = {"tau": res.monitors["tau"]}
            for k, v in res.monitors.items():
                if k == "tau":
                    continue
                v = np.asarray(v)
                if np.iscomplexobj(v):
                    cols[f"{k}_re"], cols[f"{k}_im"] = v.real, v.imag
                else:
                    cols[k] = v
            outputs.write_table_csv(out / "monitors.csv", cols)
    if "svg" in fm and res.series:
        outputs.svg_loglog(out / "series.svg", [(k, t, f) for k, (t, f) in res.series.items()], title=res.name)
        en = [(k, res.monitors["tau"], res.monitors[k]) for k in res.monitors if k.startswith("F_")]
        if en:
            outputs.svg_loglog(out / "energy.svg", en, title=f"{res.name}: energies")
    meta = {
        "name": res.name,
        "status": res.status,
        "message": res.message,
        "config": cfg.as_dict(),
        "config_text": serialize(cfg),
        "versions": versions(),
        "fits": {k: f.as_dict() for k, f in fits.items()},
        "diagnostics": res.meta,
    }
    # metadata is always written; it carries the run status
    res.meta = outputs.write_metadata(out / "metadata.json", meta)


def execute_run(cfg: RunConfig, **hooks) -> RunResult:
    """Run one configuration and write CSV/JSON/SVG artifacts into its directory.

    ``hooks`` (``per_step``, ``per_step_until``) are forwarded to hyperboloidal runs.
    """
    out = run_directory(cfg)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "ABORTED"
    if marker.exists():
        marker.unlink()
    try:
        if cfg["integration"]["scheme"] == "hyperboloidal":
            res = run_hyperboloidal(cfg, **hooks)
        else:
            res = run_characteristic(cfg)
    except ev.EvolutionAborted as exc:
        res = RunResult(cfg["run"]["name"], "aborted", str(out), message=str(exc))
    res.directory = str(out)
    fits = {}
    for key, (tau, f) in res.series.items():
        fits[key] = ob.local_power_index(tau, f, _window(cfg), observer=key.rsplit("_", 1)[-1], field=key)
    for key in [k for k in res.monitors if k.startswith("F_")]:
        fits[key] = ob.local_power_index(res.monitors["tau"], res.monitors[key], _window(cfg),
                                         observer="slice", field=key, quadratic=True)
    res.fits = fits
    _write(cfg, res, out, fits)
    if res.status != "ok":
        marker.write_text(res.message + "\n", encoding="utf-8")
    return res


def _execute_quiet(cfg_text: str):
    from .config import parse_config

    res = execute_run(parse_config(cfg_text))
    return res.name, res.status, res.directory


def run_suite(configs: Sequence[RunConfig], parallelism: int = 1) -> int:
    """Execute ``configs`` (in parallel when ``parallelism > 1``); 0 if every run completed."""
    if not configs:
        return 0
    texts = [serialize(c) for c in configs]
    if parallelism > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_execute_quiet, texts))
    else:
        results = [_execute_quiet(t) for t in texts]
    bad = 0
    for name, status, directory in results:
        print(f"{name}: {status} -> {directory}")
        bad += status != "ok"
    sys.stdout.flush()
    return 1 if bad else 0
