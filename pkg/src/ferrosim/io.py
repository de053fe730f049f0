"""Trace persistence: CSV (canonical), JSON manifests and minimal SVG charts."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .traces import TRACE_KINDS, Trace

FLOAT_FMT = "{:.9e}"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    f = float(x)
    if f.is_integer() and abs(f) < 1e15:
        return str(int(f))
    return FLOAT_FMT.format(f)


def write_table(path, columns, rows, header: dict | None = None) -> int:
    """Write ``rows`` under ``columns`` with ``# key: value`` header lines.

    Numbers use a fixed, locale-independent format. Returns the row count.
    """
    path = Path(path)
    lines = [f"# {k}: {v}" for k, v in (header or {}).items()]
    lines.append(",".join(columns))
    n = 0
    for row in rows:
        lines.append(",".join(_fmt(x) if not isinstance(x, str) else x for x in row))
        n += 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return n


def write_trace_csv(path, trace: Trace, header: dict | None = None) -> int:
    head = {"kind": trace.kind, "units": trace.units}
    head.update(header or {})
    for k, v in sorted(trace.meta.items()):
        if isinstance(v, (int, float, str, np.integer, np.floating)):
            head[f"meta.{k}"] = _fmt(v) if not isinstance(v, str) else v
    return write_table(path, trace.columns, trace.rows(), head)


def _cell(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def read_table(path) -> tuple[dict, list[str], np.ndarray]:
    """Inverse of :func:`write_table`: (header dict, column names, matrix).

    The matrix is float unless some cell is not a number, in which case it is
    an object array holding floats and strings.
    """
    header: dict[str, str] = {}
    columns = None
    data = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition(":")
                header[key.strip()] = val.strip()
            elif columns is None:
                columns = line.split(",")
            else:
                data.append([_cell(x) for x in line.split(",")])
    if columns is None:
        raise ValueError(f"{path}: no column header")
    numeric = all(isinstance(x, float) for row in data for x in row)
    arr = np.array(data, dtype=float if numeric else object).reshape(-1, len(columns))
    return header, columns, arr


def read_trace_csv(path) -> Trace:
    header, cols, arr = read_table(path)
    if len(cols) < 3 or cols[:2] != ["t", "v"] or cols[2] not in TRACE_KINDS:
        raise ValueError(f"{path}: not a trace file (columns {cols[:3]})")
    if arr.dtype != float:
        raise ValueError(f"{path}: trace file has non-numeric cells")
    aux = {c: arr[:, i] for i, c in enumerate(cols) if i >= 3}
    return Trace(arr[:, 0], arr[:, 1], arr[:, 2], kind=cols[2],
                 units=header.get("units", ""), aux=aux)


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n",
                          encoding="utf-8")


def write_trace_json(path, trace: Trace) -> None:
    from .analysis import _jsonable

    write_json(path, _jsonable({"kind": trace.kind, "units": trace.units,
                                "columns": {c: trace_column(trace, c) for c in trace.columns}}))


def trace_column(trace: Trace, name: str) -> np.ndarray:
    if name in ("t", "v", "value"):
        return getattr(trace, name)
    if name == trace.kind:
        return trace.value
    return trace.aux[name]


def svg_chart(series, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 480, height: int = 320) -> str:
    """Bare-bones SVG line chart. ``series`` is a list of (x, y) array pairs."""
    series = [(np.asarray(x, float), np.asarray(y, float)) for x, y in series]
    xs = np.concatenate([s[0] for s in series])
    ys = np.concatenate([s[1] for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    x0, x1 = (xs[ok].min(), xs[ok].max()) if ok.any() else (0.0, 1.0)
    y0, y1 = (ys[ok].min(), ys[ok].max()) if ok.any() else (0.0, 1.0)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    m = 50
    pw, ph = width - 2 * m, height - 2 * m
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="{m}" y="{m}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
           f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<text x="{width / 2:.0f}" y="{height - 10}" text-anchor="middle" font-size="12">{xlabel}</text>',
           f'<text x="15" y="{height / 2:.0f}" text-anchor="middle" font-size="12" '
           f'transform="rotate(-90 15 {height / 2:.0f})">{ylabel}</text>',
           f'<text x="{m}" y="{height - m + 15}" font-size="10">{x0:.3g}</text>',
           f'<text x="{width - m}" y="{height - m + 15}" text-anchor="end" font-size="10">{x1:.3g}</text>',
           f'<text x="{m - 5}" y="{height - m}" text-anchor="end" font-size="10">{y0:.3g}</text>',
           f'<text x="{m - 5}" y="{m + 10}" text-anchor="end" font-size="10">{y1:.3g}</text>']
    for k, (x, y) in enumerate(series):
        keep = np.isfinite(x) & np.isfinite(y)
        px = m + (x[keep] - x0) / (x1 - x0) * pw
        py = m + ph - (y[keep] - y0) / (y1 - y0) * ph
        pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
        out.append(f'<polyline fill="none" stroke="{colors[k % len(colors)]}" '
                   f'stroke-width="1.2" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
