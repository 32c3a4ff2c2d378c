"""Result files: histogram CSV, run summary JSON, entangling-draw lists, SVG heatmaps."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .environment import EnvironmentConstants
from .mc import Histogram2D

__all__ = [
    "CSV_HEADER",
    "OutputError",
    "histogram_csv_text",
    "write_histogram_csv",
    "read_histogram_csv",
    "write_summary_json",
    "write_draws_json",
    "read_draws_json",
    "heatmap_svg",
    "render_heatmap_svg",
]

CSV_HEADER = ("t_lo", "t_hi", "eps_lo", "eps_hi", "count")
_DRAW_META = ("index", "seed", "source_theta")


class OutputError(OSError):
    """File I/O failure, carrying the offending path in its message."""


def _write_text(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _read_text(path):
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def histogram_csv_text(h):
    """CSV text, one row per bin in t-major order; header only if nothing was binned."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    if h.counts.sum() > 0:
        te, ee = h.t_edges, h.eps_edges
        for i in range(len(te) - 1):
            for j in range(len(ee) - 1):
                w.writerow([repr(float(te[i])), repr(float(te[i + 1])),
                            repr(float(ee[j])), repr(float(ee[j + 1])), int(h.counts[i, j])])
    return buf.getvalue()


def write_histogram_csv(h, path):
    return _write_text(path, histogram_csv_text(h))


def read_histogram_csv(path):
    """Inverse of :func:`write_histogram_csv` (bin edges and counts only)."""
    rows = list(csv.reader(io.StringIO(_read_text(path))))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: not a histogram CSV (bad header)")
    body = rows[1:]
    if not body:
        return Histogram2D(np.zeros(0), np.zeros(0), np.zeros((0, 0), dtype=np.int64))
    t_lo = [float(r[0]) for r in body]
    n_eps = 1
    while n_eps < len(body) and t_lo[n_eps] == t_lo[0]:
        n_eps += 1
    if len(body) % n_eps:
        raise ValueError(f"{path}: ragged histogram")
    n_t = len(body) // n_eps
    t_edges = np.array([float(body[i * n_eps][0]) for i in range(n_t)] + [float(body[-1][1])])
    eps_edges = np.array([float(body[j][2]) for j in range(n_eps)] + [float(body[n_eps - 1][3])])
    counts = np.array([int(r[4]) for r in body], dtype=np.int64).reshape(n_t, n_eps)
    return Histogram2D(t_edges, eps_edges, counts)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_summary_json(summary, path):
    """Dump a run summary dict (sorted keys, NaN/inf as null)."""
    text = json.dumps(_jsonable(summary), indent=2, sort_keys=True, allow_nan=False) + "\n"
    return _write_text(path, text)


def write_draws_json(draws, path, seed=None, source_theta=None, indices=None):
    """Write environment draws as a JSON list with one field per constant."""
    out = []
    for k, env in enumerate(draws):
        rec = {}
        if indices is not None:
            rec["index"] = int(indices[k])
        if seed is not None:
            rec["seed"] = int(seed)
        if source_theta is not None:
            rec["source_theta"] = float(source_theta)
        rec.update(env.to_dict())
        out.append(rec)
    return _write_text(path, json.dumps(out, indent=2) + "\n")


def read_draws_json(path):
    data = json.loads(_read_text(path))
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON list of draws")
    draws = []
    for rec in data:
        rec = {k: v for k, v in rec.items() if k not in _DRAW_META}
        draws.append(EnvironmentConstants.from_dict(rec))
    return draws


# viridis sampled at 9 points
_PALETTE = np.array([
    (68, 1, 84), (71, 44, 122), (59, 81, 139), (44, 113, 142), (33, 144, 141),
    (39, 173, 129), (92, 200, 99), (170, 220, 50), (253, 231, 37),
], dtype=float)
BACKGROUND = "#ffffff"


def _color(frac):
    x = min(max(frac, 0.0), 1.0) * (len(_PALETTE) - 1)
    i = min(int(x), len(_PALETTE) - 2)
    c = _PALETTE[i] + (x - i) * (_PALETTE[i + 1] - _PALETTE[i])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def _fills(counts, scale):
    counts = np.asarray(counts)
    cmax = int(counts.max()) if counts.size else 0
    fills = np.full(counts.shape, BACKGROUND, dtype=object)
    for idx in zip(*np.nonzero(counts)):
        c = int(counts[idx])
        if scale == "log":
            frac = math.log(c) / math.log(cmax) if cmax > 1 else 1.0
        else:
            frac = c / cmax
        fills[idx] = _color(frac)
    return fills


def heatmap_svg(h, scale="linear", width=800, height=500, title=None):
    """Standalone SVG heatmap of ``h`` with t horizontal and epsilon vertical.

    Zero-count bins take the background colour in both scales; ``"log"``
    colours non-empty bins by ``log(count)``.
    """
    if scale not in ("linear", "log"):
        raise ValueError(f"scale must be 'linear' or 'log', got {scale!r}")
    ml, mr, mt, mb = 80, 110, 40 if title else 20, 60
    pw, ph = width - ml - mr, height - mt - mb
    f = "{:.3f}".format
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="{BACKGROUND}"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>')
    counts = np.asarray(h.counts)
    nt, ne = counts.shape if counts.ndim == 2 else (0, 0)
    if nt and ne:
        fills = _fills(counts, scale)
        bw, bh = pw / nt, ph / ne
        out.append('<g shape-rendering="crispEdges">')
        for i in range(nt):
            for j in range(ne):
                x = ml + i * bw
                y = mt + ph - (j + 1) * bh
                out.append(f'<rect x="{f(x)}" y="{f(y)}" width="{f(bw)}" height="{f(bh)}" '
                           f'fill="{fills[i, j]}"/>')
        out.append("</g>")
        t0, t1 = float(h.t_edges[0]), float(h.t_edges[-1])
        e0, e1 = float(h.eps_edges[0]), float(h.eps_edges[-1])
        for k in range(5):
            tv = t0 + (t1 - t0) * k / 4
            x = ml + pw * k / 4
            out.append(f'<line x1="{f(x)}" y1="{mt + ph}" x2="{f(x)}" y2="{mt + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{f(x)}" y="{mt + ph + 18}" text-anchor="middle">{tv:.3g}</text>')
            ev = e0 + (e1 - e0) * k / 4
            y = mt + ph - ph * k / 4
            out.append(f'<line x1="{ml - 5}" y1="{f(y)}" x2="{ml}" y2="{f(y)}" stroke="black"/>')
            out.append(f'<text x="{ml - 8}" y="{f(y + 4)}" text-anchor="end">{ev:.3g}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 15}" text-anchor="middle">t (trap units)</text>')
    out.append(f'<text x="20" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 20 {mt + ph / 2:.1f})">ε</text>')

    # colour bar
    cx, cw, steps = width - mr + 20, 16, 50
    for k in range(steps):
        y = mt + ph - (k + 1) * ph / steps
        out.append(f'<rect x="{cx}" y="{f(y)}" width="{cw}" height="{f(ph / steps)}" '
                   f'fill="{_color(k / (steps - 1))}" stroke="none"/>')
    cmax = int(counts.max()) if counts.size else 0
    label = "log count" if scale == "log" else "count"
    out.append(f'<text x="{cx + cw + 4}" y="{mt + 10}">{cmax}</text>')
    out.append(f'<text x="{cx + cw + 4}" y="{mt + ph}">{1 if scale == "log" else 0}</text>')
    out.append(f'<text x="{cx}" y="{mt + ph + 18}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_heatmap_svg(h, path, scale="linear", title=None):
    return _write_text(path, heatmap_svg(h, scale=scale, title=title))
