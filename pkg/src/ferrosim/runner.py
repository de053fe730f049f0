"""Execute a resolved experiment and persist a self-describing output directory.

Layout of one run::

    <out>/config.toml      resolved config (re-runnable as is)
    <out>/manifest.json    experiment, seed, config hash, files, summary
    <out>/<name>.csv       one per trace/table, '#' header lines first
    <out>/metrics.json     MetricsReport, when the experiment produces one
    <out>/<name>.json|svg  optional extra formats
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .analysis import _jsonable
from .config import ExperimentConfig, build, read_toml, resolve
from .experiments import EXPERIMENTS, Result

CONFIG_DIR = Path(__file__).parent / "configs"

FIGURES = {
    "fig2": ["pv-loop", "cv-butterfly", "rv-hysteresis"],
    "fig3": ["minor-loops", "retention"],
    "fig4": ["potdep-amplitude", "potdep-width"],
    "fig5": ["metrics"],
    "figS1": ["pund", "endurance"],
    "figS6": ["xd-curve"],
}


def bundled_config(name: str) -> Path:
    return CONFIG_DIR / f"{name}.toml"


def execute(cfg: ExperimentConfig) -> Result:
    return EXPERIMENTS[cfg.experiment].run(cfg)


def write_outputs(cfg: ExperimentConfig, result: Result, out_dir) -> dict:
    """Write every artifact of ``result`` under ``out_dir``; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chash = cfg.config_hash()
    header = {"experiment": cfg.experiment, "seed": cfg.seed, "config_hash": chash,
              "ferrosim": __version__}
    (out / "config.toml").write_text(cfg.to_toml(), encoding="utf-8")
    files = []
    for o in result.outputs:
        path = out / f"{o.name}.csv"
        if o.trace is not None:
            n = io.write_trace_csv(path, o.trace, header)
        else:
            n = io.write_table(path, o.columns, o.rows, header)
        files.append({"file": path.name, "rows": n})
        if "json" in cfg.formats:
            jpath = out / f"{o.name}.json"
            if o.trace is not None:
                io.write_trace_json(jpath, o.trace)
            else:
                io.write_json(jpath, _jsonable({"columns": o.columns, "rows": o.rows}))
            files.append({"file": jpath.name})
        if "svg" in cfg.formats and o.plot is not None:
            x, y = o.plot
            spath = out / f"{o.name}.svg"
            spath.write_text(io.svg_chart([(o.column(x), o.column(y))], o.name, x, y),
                             encoding="utf-8")
            files.append({"file": spath.name})
    if result.report is not None:
        io.write_json(out / "metrics.json", result.report)
        files.append({"file": "metrics.json"})
    manifest = _jsonable({
        "experiment": cfg.experiment, "seed": cfg.seed, "config_hash": chash,
        "config_file": "config.toml", "ferrosim": __version__,
        "files": files, "summary": result.summary,
    })
    io.write_json(out / "manifest.json", manifest)
    return manifest


def run(cfg: ExperimentConfig, out_dir) -> dict:
    return write_outputs(cfg, execute(cfg), out_dir)


def run_figure(fig: str, out_root, seed: int | None = None, formats=None) -> list[dict]:
    """Run every experiment of one catalog entry into ``out_root/fig/experiment``."""
    entries = []
    for name in FIGURES[fig]:
        raw, errors = resolve(read_toml(bundled_config(name)), seed=seed)
        if formats:
            raw["output"]["formats"] = list(formats)
        cfg = build(raw)
        out = Path(out_root) / fig / name
        manifest = run(cfg, out)
        entries.append({"experiment": name, "directory": f"{fig}/{name}",
                        "config_hash": manifest["config_hash"],
                        "files": [f["file"] for f in manifest["files"]]})
    return entries


def write_index(out_root, figures: dict) -> None:
    io.write_json(Path(out_root) / "index.json", {"figures": figures})


def summary_lines(manifest: dict) -> list[str]:
    lines = [f"{manifest['experiment']}  seed={manifest['seed']}  hash={manifest['config_hash']}"]
    for k, v in manifest["summary"].items():
        if isinstance(v, (int, float, str)) or v is None:
            lines.append(f"  {k}: {v:.6g}" if isinstance(v, float) else f"  {k}: {v}")
        elif isinstance(v, dict):
            inner = ", ".join(f"{a}={b:.4g}" if isinstance(b, float) else f"{a}={b}"
                              for a, b in v.items() if not isinstance(b, (list, dict)))
            lines.append(f"  {k}: {inner}")
        elif isinstance(v, list) and v and isinstance(v[0], (int, float)):
            arr = np.asarray(v, float)
            lines.append(f"  {k}: {len(arr)} values in [{arr.min():.4g}, {arr.max():.4g}]")
    lines.append(f"  files: {len(manifest['files'])}")
    return lines
