"""CSV, JSON and SVG writers for run artifacts."""
from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from .observe import floor_flags

CSV_COLUMNS = ("tau", "re", "im", "abs", "lpi", "flags")
FLAG_FLOOR = 1


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def pointwise_lpi(tau, f) -> np.ndarray:
    """``-d ln|f| / d ln tau`` by centred differences on the raw samples."""
    tau = np.asarray(tau, dtype=float)
    a = np.abs(np.asarray(f))
    out = np.full(len(tau), np.nan)
    ok = (tau > 0) & (a > 0)
    if np.count_nonzero(ok) >= 3 and np.all(ok):
        out = -np.gradient(np.log(a), np.log(tau))
    elif np.count_nonzero(ok) >= 3:
        idx = np.nonzero(ok)[0]
        out[idx] = -np.gradient(np.log(a[idx]), np.log(tau[idx]))
    return out


def write_series_csv(path: Path, tau, f) -> None:
    f = np.asarray(f, dtype=complex)
    lpi = pointwise_lpi(tau, f)
    flags = floor_flags(f).astype(int) * FLAG_FLOOR
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for t, z, lp, fl in zip(tau, f, lpi, flags):
            w.writerow((fmt17(t), fmt17(z.real), fmt17(z.imag), fmt17(abs(z)), fmt17(lp), int(fl)))


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0][:3]) != CSV_COLUMNS[:3]:
        raise ValueError(f"{path}: expected a header starting with {CSV_COLUMNS[:3]}")
    data = np.array([[float(x) for x in r[:3]] for r in rows[1:] if r], dtype=float)
    if data.size == 0:
        raise ValueError(f"{path}: no samples")
    return data[:, 0], data[:, 1] + 1j * data[:, 2]


def write_table_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    cols = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*cols):
            w.writerow([fmt17(x) for x in row])


def schema() -> dict:
    text = resources.files("maxwell_tails").joinpath("data/run_metadata.schema.json").read_text("utf-8")
    return json.loads(text)


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if math.isfinite(v) else None
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (complex, np.complexfloating)):
        return {"re": _jsonable(o.real), "im": _jsonable(o.imag)}
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    return o


def write_metadata(path: Path, meta: dict) -> dict:
    doc = _jsonable(meta)
    jsonschema.validate(doc, schema())
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return doc


PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_loglog(path: Path, curves: Sequence[tuple[str, np.ndarray, np.ndarray]], title: str = "",
               width: int = 640, height: int = 420) -> None:
    """Line plot of ``log10 |f|`` against ``log10 tau`` for each ``(label, tau, f)``."""
    pts = []
    for label, tau, f in curves:
        tau = np.asarray(tau, dtype=float)
        a = np.abs(np.asarray(f))
        ok = (tau > 0) & (a > 0) & np.isfinite(a)
        pts.append((label, np.log10(tau[ok]), np.log10(a[ok])))
    xs = np.concatenate([p[1] for p in pts]) if pts else np.zeros(0)
    ys = np.concatenate([p[2] for p in pts]) if pts else np.zeros(0)
    if xs.size == 0:
        xs = ys = np.array([0.0, 1.0])
    x0, x1 = float(xs.min()), float(xs.max()) or 1.0
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    ml, mr, mt, mb = 60, 20, 30, 45
    W, H = width - ml - mr, height - mt - mb

    def X(x):
        return ml + (x - x0) / (x1 - x0) * W

    def Y(y):
        return mt + (y1 - y) / (y1 - y0) * H

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{W}" height="{H}" fill="none" stroke="#444"/>']
    for k in range(int(math.ceil(x0)), int(math.floor(x1)) + 1):
        out.append(f'<line x1="{X(k):.1f}" y1="{mt + H}" x2="{X(k):.1f}" y2="{mt + H + 4}" stroke="#444"/>'
                   f'<text x="{X(k):.1f}" y="{mt + H + 16}" text-anchor="middle">1e{k}</text>')
    step = max(1, int((y1 - y0) // 8) or 1)
    for k in range(int(math.ceil(y0)), int(math.floor(y1)) + 1, step):
        out.append(f'<line x1="{ml - 4}" y1="{Y(k):.1f}" x2="{ml}" y2="{Y(k):.1f}" stroke="#444"/>'
                   f'<text x="{ml - 6}" y="{Y(k) + 4:.1f}" text-anchor="end">1e{k}</text>')
    for n, (label, lx, ly) in enumerate(pts):
        if lx.size < 2:
            continue
        # thin long series for file size
        stride = max(1, lx.size // 2000)
        d = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in zip(lx[::stride], ly[::stride]))
        c = PALETTE[n % len(PALETTE)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{d}"/>')
        out.append(f'<text x="{ml + W - 4}" y="{mt + 14 + 14 * n}" text-anchor="end" fill="{c}">{_esc(label)}</text>')
    out.append(f'<text x="{ml + W / 2}" y="{height - 8}" text-anchor="middle">tau / M</text>')
    if title:
        out.append(f'<text x="{ml + W / 2}" y="18" text-anchor="middle">{_esc(title)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
