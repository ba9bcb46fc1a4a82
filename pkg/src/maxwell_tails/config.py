"""Run configuration: an INI document with fixed sections and typed keys.

Every key has a default; unknown sections or keys are rejected.  Errors carry
the dotted key path (``background.a``).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from types import MappingProxyType
from typing import Any, Callable

SCHEMES = ("hyperboloidal", "characteristic")
FAMILIES = ("compact-bump", "npc-charged", "monopole-charge")
FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _float(x: str) -> float:
    return float(x)


def _int(x: str) -> int:
    v = float(x)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _str(x: str) -> str:
    return x.strip()


def _floats(x: str) -> tuple:
    return tuple(float(t) for t in x.replace(",", " ").split())


def _observers(x: str) -> tuple:
    out = []
    for t in x.replace(",", " ").split():
        if t.lower() == "scri":
            out.append(0.0)
        else:
            v = float(t)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"sigma observer {v} outside [0, 1]")
            out.append(v)
    return tuple(dict.fromkeys(out))


def _formats(x: str) -> tuple:
    fm = tuple(t.strip() for t in x.replace(",", " ").split())
    bad = [f for f in fm if f not in FORMATS]
    if bad:
        raise ValueError(f"unknown format(s) {bad}; choose from {FORMATS}")
    return fm


def _window(x: str):
    x = x.strip()
    if x.lower() == "auto":
        return "auto"
    a, b = _floats(x)
    if not 0 < a < b:
        raise ValueError("window must satisfy 0 < start < end")
    return (a, b)


def _fmt(v: Any) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(t) for t in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable, Any]]] = {
    "background": {"M": (_float, 1.0), "a": (_float, 0.0)},
    "mode": {"s": (_int, -1), "l": (_int, 1), "m": (_int, 0)},
    "data": {
        "family": (_str, "compact-bump"),
        "A": (_float, 1.0),
        "r_c": (_float, 10.0),
        "w": (_float, 1.5),
        "N_inf": (_float, 0.0),
        "r_cut": (_float, 20.0),
        "q": (_float, 0.0),
        "q_B": (_float, 0.0),
        "time_profile": (_str, "time-symmetric"),
    },
    "grid": {"N": (_int, 1025), "fd_order": (_int, 4), "dissipation": (_float, 1e-2)},
    "integration": {
        "scheme": (_str, "hyperboloidal"),
        "cfl": (_float, 0.5),
        "tau_end": (_float, 2000.0),
        "sample_dt": (_float, 1.0),
    },
    "observers": {"sigma": (_observers, (0.0, 0.2)), "r": (_floats, (10.0,))},
    "characteristic": {"h": (_float, 0.1), "u_max": (_float, 400.0), "v_max": (_float, 420.0),
                       "stride": (_int, 10)},
    "outputs": {"directory": (_str, ""), "formats": (_formats, FORMATS)},
    "fit": {"window": (_window, "auto"), "npc_drift_from": (_float, 200.0)},
    "run": {"name": (_str, "run"), "seed": (_int, 0)},
}


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``sections[sec][key]`` holds typed values."""

    sections: MappingProxyType

    def __getitem__(self, item: str):
        return self.sections[item]

    def get(self, path: str):
        sec, key = path.split(".")
        return self.sections[sec][key]

    def as_dict(self) -> dict:
        return {s: {k: (list(v) if isinstance(v, tuple) else v) for k, v in kv.items()}
                for s, kv in self.sections.items()}

    def replace(self, **updates) -> "RunConfig":
        """``cfg.replace(**{"grid.N": 513})`` returns a revalidated copy."""
        raw = {s: dict(kv) for s, kv in self.sections.items()}
        for path, v in updates.items():
            sec, key = path.split(".")
            if sec not in SCHEMA or key not in SCHEMA[sec]:
                raise ConfigError(path, "unknown key")
            raw[sec][key] = v
        return _validate(raw)


def _validate(vals: dict) -> RunConfig:
    bg, mode, data, grid = vals["background"], vals["mode"], vals["data"], vals["grid"]
    integ, ch = vals["integration"], vals["characteristic"]
    if not bg["M"] > 0:
        raise ConfigError("background.M", "mass must be positive")
    if abs(bg["a"]) >= bg["M"]:
        raise ConfigError("background.a", "spin must be sub-extremal (|a| < M)")
    if bg["a"] != 0:
        raise ConfigError("background.a", "time-domain evolution is implemented for a = 0")
    if mode["s"] not in (-1, 1):
        raise ConfigError("mode.s", "target spin must be +1 or -1")
    if mode["l"] < 1:
        raise ConfigError("mode.l", "Maxwell modes need l >= 1")
    if abs(mode["m"]) > mode["l"]:
        raise ConfigError("mode.m", "|m| <= l required")
    if data["family"] not in FAMILIES:
        raise ConfigError("data.family", f"unknown family; choose from {FAMILIES}")
    if data["time_profile"] not in ("time-symmetric", "ingoing"):
        raise ConfigError("data.time_profile", "must be time-symmetric or ingoing")
    if not data["w"] > 0:
        raise ConfigError("data.w", "width must be positive")
    if data["r_c"] - 4 * data["w"] <= 2 * bg["M"]:
        raise ConfigError("data.r_c", "bump support must lie outside the horizon")
    if data["family"] == "npc-charged":
        if mode["l"] != 1:
            raise ConfigError("mode.l", "npc-charged data are constructed for l = 1")
        if data["r_cut"] <= 4 * bg["M"]:
            raise ConfigError("data.r_cut", "cutoff must exceed twice the horizon radius")
    if grid["N"] < 64:
        raise ConfigError("grid.N", "need at least 64 nodes")
    if grid["fd_order"] != 4:
        raise ConfigError("grid.fd_order", "only fourth-order stencils are implemented")
    if grid["dissipation"] < 0:
        raise ConfigError("grid.dissipation", "must be nonnegative")
    if integ["scheme"] not in SCHEMES:
        raise ConfigError("integration.scheme", f"choose from {SCHEMES}")
    if integ["scheme"] == "hyperboloidal" and data["family"] == "monopole-charge":
        raise ConfigError("data.family", "monopole-charge data need the characteristic scheme")
    if integ["scheme"] == "characteristic" and mode["s"] != -1:
        raise ConfigError("mode.s", "characteristic runs take free spin -1 data on the outgoing cone")
    if not 0 < integ["cfl"] <= 1:
        raise ConfigError("integration.cfl", "CFL factor must lie in (0, 1]")
    if not integ["tau_end"] > 0:
        raise ConfigError("integration.tau_end", "must be positive")
    if not integ["sample_dt"] > 0:
        raise ConfigError("integration.sample_dt", "must be positive")
    if not ch["h"] > 0 or ch["u_max"] <= 0 or ch["v_max"] <= 0:
        raise ConfigError("characteristic.h", "lattice spacing and extents must be positive")
    if ch["stride"] < 1:
        raise ConfigError("characteristic.stride", "must be >= 1")
    if any(r <= 2 * bg["M"] for r in vals["observers"]["r"]):
        raise ConfigError("observers.r", "observer radii must lie outside the horizon")
    frozen = {s: MappingProxyType(dict(kv)) for s, kv in vals.items()}
    return RunConfig(MappingProxyType(frozen))


def defaults() -> dict:
    return {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<document>", f"malformed config: {exc}") from None
    vals = defaults()
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        for key, raw in cp.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
            try:
                vals[sec][key] = SCHEMA[sec][key][0](raw)
            except ValueError as exc:
                raise ConfigError(f"{sec}.{key}", str(exc)) from None
    return _validate(vals)


def serialize(cfg: RunConfig) -> str:
    """Canonical INI text with every key present in schema order."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for sec, keys in SCHEMA.items():
        cp[sec] = {k: _fmt(cfg[sec][k]) for k in keys}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def normalize(text: str) -> str:
    return serialize(parse_config(text))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
