"""Protocol registry: named experiments with default parameters and runners.

Every runner takes a resolved :class:`~ferrosim.config.ExperimentConfig` and
returns a :class:`Result` holding traces/tables and a JSON-safe summary.
Persistence lives in :mod:`ferrosim.runner`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis as an
from . import electrostatics as es
from . import instrument as ins
from .traces import Trace


@dataclass
class Output:
    """One CSV file: either a Trace or a plain table."""

    name: str
    trace: Trace | None = None
    columns: list | None = None
    rows: list | None = None
    plot: tuple[str, str] | None = None  # (x column, y column) for SVG

    def column(self, name: str) -> np.ndarray:
        if self.trace is not None:
            t = self.trace
            if name in ("t", "v"):
                return getattr(t, name)
            if name == t.kind:
                return t.value
            return np.asarray(t.aux[name], float)
        i = self.columns.index(name)
        return np.array([float(r[i]) for r in self.rows])


@dataclass
class Result:
    outputs: list[Output] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    report: dict | None = None  # MetricsReport, written as metrics.json


@dataclass(frozen=True)
class Experiment:
    name: str
    preset: str  # "capacitor" or "synapse": device defaults when a config omits them
    defaults: dict
    run: Callable
    description: str = ""


def _trace_out(name, trace, x="v", y=None):
    return Output(name, trace=trace, plot=(x, y or trace.kind))


def _add_r_norm(trace: Trace, r_on: float) -> Trace:
    trace.aux["r_norm"] = trace.value / r_on
    return trace


# -- capacitor experiments -----------------------------------------------------

def run_pv_loop(cfg) -> Result:
    p = cfg.params
    res = Result()
    dev = ins.build_device(cfg.device)
    tr = ins.pv_loop(dev, p["amplitude"], p["frequency"], p["periods"], p["points_per_period"])
    m = an.pv_metrics(tr)
    res.outputs.append(_trace_out("pv_woken", tr))
    res.summary["woken"] = vars(m)
    if p["pristine"]:
        pdev = ins.build_device(replace(cfg.device, wakeup_cycles=0.0))
        ptr = ins.pv_loop(pdev, p["amplitude"], p["frequency"], p["periods"],
                          p["points_per_period"])
        res.outputs.append(_trace_out("pv_pristine", ptr))
        res.summary["pristine"] = vars(an.pv_metrics(ptr))
    return res


def run_cv_butterfly(cfg) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    tr = ins.cv_butterfly(dev, p["v_range"], p["dv"])
    peaks = {}
    for b, name in ((1, "up"), (-1, "down")):
        m = tr.aux["branch"] == b
        peaks[f"v_peak_{name}"] = float(tr.v[m][np.argmax(tr.value[m])])
    peaks["c_lin"] = tr.meta["c_lin"]
    return Result([_trace_out("cv", tr)], peaks)


def run_rv_hysteresis(cfg) -> Result:
    p = cfg.params
    res = Result()
    devices = [(f"rv_d{d:g}nm".replace(".", "p"), replace(cfg.device, stack=replace(
        cfg.device.stack, d_wox=float(d)))) for d in p["thickness"]]
    if p["hfo2_control"]:
        ctrl = replace(cfg.device, ensemble=replace(cfg.device.ensemble, p_sat=0.0))
        devices.append(("rv_hfo2", ctrl))
    for name, dcfg in devices:
        dev = ins.build_device(dcfg)
        tr = _add_r_norm(ins.rv_hysteresis(dev, p["v_min"], p["v_max"], p["n_steps"],
                                           p["width"]), dev.r_on)
        res.outputs.append(_trace_out(name, tr, "v", "r_norm"))
        res.summary[name] = {
            "d_wox": dcfg.stack.d_wox, "r_on": dev.r_on,
            "r_min": float(tr.value.min()), "r_max": float(tr.value.max()),
            "on_off": float((tr.value.max() - dev.r_on) / dev.r_on),
            "loop_area": an.loop_area(tr.v, tr.aux["r_norm"]),
        }
    return res


def run_pund(cfg) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    q = ins.pund_charges(dev.clone(), p["amplitude"])
    total = ins.pund(dev, p["amplitude"], p["frequency"])
    rows = [(i, name, q[name]) for i, name in enumerate("PUND")]
    out = Output("pund", columns=["index", "pulse", "charge"], rows=rows, plot=("index", "charge"))
    return Result([out], {"charges": q, "two_p_r": total})


def run_endurance(cfg) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    fat = ins.Fatigue(p["fatigue_onset"], p["fatigue_rate"])
    tr = ins.endurance_run(dev, p["schedule"], p["amplitude"], p["pund_points"],
                           p["pund_frequency"], fat)
    return Result([_trace_out("endurance", tr, "n_cycles", "polarization")],
                  {"two_p_r": dict(zip((f"{n:g}" for n in tr.aux["n_cycles"]),
                                       tr.value.tolist()))})


def run_xd_curve(cfg) -> Result:
    p = cfg.params
    stack = cfg.device.stack
    n_d = np.logspace(np.log10(p["n_d_min"]), np.log10(p["n_d_max"]), p["n_points"])
    curves = es.xd_vs_nd_curve(p["v_gs"], n_d, stack)
    cols = ["n_d"] + [f"x_d_{c.v_gs:g}V" for c in curves]
    rows = [(n, *(c.x_d[i] for c in curves)) for i, n in enumerate(n_d)]
    at_nd = {f"{v:g}": es.depletion_width(v, stack) for v in p["v_gs"]}
    return Result([Output("xd_curve", columns=cols, rows=rows, plot=("n_d", cols[-1]))],
                  {"n_d": stack.n_d, "x_d_nm": at_nd})


# -- synapse experiments -------------------------------------------------------

def run_minor_loops(cfg) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    if p["precondition"]:
        # one unrecorded outer loop so the first recorded loop is not pristine
        ins.minor_loops(dev, p["ranges"][:1], p["step"], p["width"])
    traces = ins.minor_loops(dev, p["ranges"], p["step"], p["width"])
    res = Result()
    loops = []
    for k, tr in enumerate(traces):
        _add_r_norm(tr, dev.r_on)
        res.outputs.append(_trace_out(f"minor_loop_{k}", tr, "v", "resistance"))
        loops.append({"v_min": tr.meta["v_min"], "v_max": tr.meta["v_max"],
                      "r_min": float(tr.value.min()), "r_max": float(tr.value.max()),
                      "loop_area": an.loop_area(tr.v, tr.value)})
    res.summary = {"r_on": dev.r_on, "loops": loops}
    return res


def run_retention(cfg) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    traces = ins.retention_protocol(dev, p["states"], p["duration"], p["interval"],
                                    tuple(p["reset"]), p["v_max"], p["width"], p["decay_rate"])
    rows = []
    for tr in traces:
        for ti, r in zip(tr.t, tr.value):
            rows.append((tr.meta["state"], tr.meta["write_amplitude"], ti, r))
    out = Output("retention", columns=["state", "write_amplitude", "t", "resistance"],
                 rows=rows, plot=("t", "resistance"))
    means = [float(tr.value.mean()) for tr in traces]
    return Result([out], {"distinguishable": an.states_distinguishable(traces, p["k_sigma"]),
                          "k_sigma": p["k_sigma"], "state_means": means,
                          "write_amplitudes": [tr.meta["write_amplitude"] for tr in traces]})


def _cycle_table(tr: Trace, r_on: float) -> Output:
    series = an.PulseSeries.from_trace(tr)
    cs = an.cycle_stats(series, r_on)
    first = series.cycle_id == series.cycle_id.min()
    rows = [(i, b, pos, m, s, 100 * f) for i, (b, pos, m, s, f) in enumerate(zip(
        series.branch[first], series.position[first], cs.mean, cs.sigma, cs.sigma_over_ron))]
    return Output("cycle_stats", columns=["index", "branch", "position", "mean", "sigma",
                                          "sigma_pct"], rows=rows, plot=("index", "sigma_pct"))


def _potdep(cfg, scheme) -> Result:
    p = cfg.params
    dev = ins.build_device(cfg.device)
    tr = ins.potentiation_depression(dev, scheme, p["n_cycles"], p["precondition"])
    res = Result([_trace_out("potdep", tr, "pulse", "resistance")])
    res.summary = {"r_on": dev.r_on, "r_min": float(tr.value.min()),
                   "r_max": float(tr.value.max()), "n_pulses": len(tr)}
    if p["n_cycles"] >= 3:
        table = _cycle_table(tr, dev.r_on)
        res.outputs.append(table)
        pct = table.column("sigma_pct")
        res.summary.update(sigma_pct_mean=float(pct.mean()), sigma_pct_min=float(pct.min()),
                           sigma_pct_max=float(pct.max()))
    return res


def run_potdep_amplitude(cfg) -> Result:
    p = cfg.params
    return _potdep(cfg, ins.AmplitudeRamp.from_range(p["v_pot_max"], p["v_dep_min"],
                                                     p["step"], p["width"]))


def run_potdep_width(cfg) -> Result:
    p = cfg.params
    return _potdep(cfg, ins.WidthRamp(p["v_pot"], p["v_dep"], p["t_start"], p["t_stop"],
                                      p["n_pulses"]))


def run_metrics(cfg) -> Result:
    """Linearity, GPR, SNR and symmetry analysis of a potentiation/depression trace."""
    from .io import read_trace_csv

    p = cfg.params
    res = Result()
    dev_cfg = cfg.device
    r_on = dev_cfg.stack.r_on
    if p["input"]:
        path = Path(p["input"])
        if not path.is_file():
            raise FileNotFoundError(f"input trace not found: {path}")
        tr = read_trace_csv(path)
    else:
        dev = ins.build_device(dev_cfg)
        scheme = ins.AmplitudeRamp.from_range(p["v_pot_max"], p["v_dep_min"], p["step"],
                                              p["width"])
        tr = ins.potentiation_depression(dev, scheme, p["n_cycles"])
        res.outputs.append(_trace_out("potdep", tr, "pulse", "resistance"))
    series = an.PulseSeries.from_trace(tr)
    windows = an.FitWindows(tuple(p["window_pot"]), tuple(p["window_dep"]))
    v_e, t_e = p["energy"]
    energy = (v_e, dev_cfg.i_gate, t_e, dev_cfg.stack.width, dev_cfg.stack.length)
    rep, fits = an.metrics_report(series, windows, r_on, energy, p["n_grid"])

    a_rows, b_rows, c_rows, d_rows, e_rows = [], [], [], [], []
    for b, f in fits.items():
        x = f.series.position.astype(float)
        y = f.series.r_ds
        lin = f.linear.slope * x + f.linear.intercept
        gp = f.model.predict(x)
        for xi, yi, li, ri, gi in zip(x, y, lin, f.linear.residuals, gp):
            a_rows.append((b, xi, yi, li))
            b_rows.append((b, xi, abs(ri)))
            c_rows.append((b, xi, yi, gi))
        name = an.BRANCH_NAMES[b]
        br = rep.branches[name]
        for k, (s, dr) in enumerate(zip(br["snr"], br["delta_r"])):
            d_rows.append((b, k + 1, float(s)))
            e_rows.append((b, k + 1, abs(float(dr))))
    f_rows = [(r, s) for r, s in zip(rep.sf_grid, rep.sf)]
    res.outputs += [
        Output("fig5a_linear_fit", columns=["branch", "position", "r_ds", "r_fit"],
               rows=a_rows, plot=("position", "r_ds")),
        Output("fig5b_residuals", columns=["branch", "position", "abs_residual_norm"],
               rows=b_rows, plot=("position", "abs_residual_norm")),
        Output("fig5c_gpr", columns=["branch", "position", "r_ds", "r_gpr"],
               rows=c_rows, plot=("position", "r_gpr")),
        Output("fig5d_snr", columns=["branch", "pulse", "snr"], rows=d_rows,
               plot=("pulse", "snr")),
        Output("fig5e_delta_r", columns=["branch", "pulse", "abs_delta_r"], rows=e_rows,
               plot=("pulse", "abs_delta_r")),
        Output("fig5f_sf", columns=["r_ds", "sf"], rows=f_rows, plot=("r_ds", "sf")),
    ]
    res.report = rep.to_dict()
    res.summary = {"adj_r2": rep.adj_r2, "sf_mean": rep.sf_mean, "sf_center": rep.sf_center,
                   "cycle_sigma_pct_mean": rep.cycle_sigma_pct_mean,
                   "energy_per_area": rep.energy_per_area}
    return res


_POTDEP_COMMON = {"n_cycles": 5, "precondition": True}

EXPERIMENTS: dict[str, Experiment] = {e.name: e for e in [
    Experiment("pv-loop", "capacitor",
               {"amplitude": 3.8, "frequency": 5e3, "periods": 2, "points_per_period": 1600,
                "pristine": True}, run_pv_loop, "P-V loop, woken and pristine"),
    Experiment("cv-butterfly", "capacitor", {"v_range": 3.8, "dv": 0.02}, run_cv_butterfly,
               "small-signal C-V butterfly"),
    Experiment("rv-hysteresis", "capacitor",
               {"v_min": -4.0, "v_max": 4.0, "n_steps": 160, "width": 2e-6,
                "thickness": [8.0], "hfo2_control": False},
               run_rv_hysteresis, "R_DS-V_write loops over a channel thickness series"),
    Experiment("minor-loops", "synapse",
               {"ranges": [[-4.0, 4.0], [-3.5, 3.5], [-3.0, 3.0], [-2.5, 2.5], [-2.0, 2.0]],
                "step": 0.1, "width": 5e-6, "precondition": True}, run_minor_loops, "nested R-V loops"),
    Experiment("pund", "capacitor", {"amplitude": 3.5, "frequency": 1e3}, run_pund,
               "PUND remanent polarization"),
    Experiment("endurance", "capacitor",
               {"schedule": [[1e4, 1e3], [1e6, 1e5]], "amplitude": 3.5,
                "pund_points": [0.0, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6],
                "pund_frequency": 1e3, "fatigue_onset": 1e6, "fatigue_rate": 0.0},
               run_endurance, "wake-up and endurance via PUND"),
    Experiment("retention", "synapse",
               {"states": 18, "duration": 1500.0, "interval": 5.0, "reset": [-4.0, 1e-3],
                "v_max": 4.0, "width": 5e-6, "decay_rate": 0.0, "k_sigma": 2.0},
               run_retention, "multi-level retention"),
    Experiment("potdep-amplitude", "synapse",
               {"v_pot_max": 3.5, "v_dep_min": -3.0, "step": 0.1, "width": 10e-6,
                **_POTDEP_COMMON}, run_potdep_amplitude, "amplitude-ramp pulse trains"),
    Experiment("potdep-width", "synapse",
               {"v_pot": 3.5, "v_dep": -3.0, "t_start": 40e-9, "t_stop": 250e-9,
                "n_pulses": 22, **_POTDEP_COMMON}, run_potdep_width,
               "width-ramp pulse trains"),
    Experiment("xd-curve", "capacitor",
               {"v_gs": [1.0, 2.0, 3.0, 4.0], "n_d_min": 1e18, "n_d_max": 1e21,
                "n_points": 61}, run_xd_curve, "depletion width against N_D"),
    Experiment("metrics", "synapse",
               {"input": "", "n_cycles": 5, "v_pot_max": 3.5, "v_dep_min": -3.0,
                "step": 0.1, "width": 10e-6, "window_pot": [1.0, 3.1],
                "window_dep": [-3.0, -0.9], "n_grid": 32, "energy": [3.5, 200e-9]},
               run_metrics, "linearity, GPR, SNR, symmetry factor"),
]}


_POSITIVE = ("amplitude", "frequency", "v_range", "dv", "width", "step", "interval",
             "duration", "v_max", "v_pot_max", "v_pot", "t_start", "t_stop", "n_d_min",
             "n_d_max", "k_sigma", "pund_frequency", "fatigue_onset")


def _type_ok(default, value) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def params_violations(name: str, params: dict) -> list[str]:
    defaults = EXPERIMENTS[name].defaults
    out = []
    for key, val in params.items():
        if key not in defaults:
            out.append(f"unknown key 'experiment.params.{key}' for {name}")
        elif not _type_ok(defaults[key], val):
            out.append(f"experiment.params.{key} has wrong type "
                       f"(expected {type(defaults[key]).__name__})")
    merged = {**defaults, **params}
    for key in _POSITIVE:
        val = merged.get(key)
        if isinstance(val, (int, float)) and not isinstance(val, bool) and not val > 0:
            out.append(f"experiment.params.{key} must be > 0")
    for key in ("n_cycles", "n_steps", "n_points", "n_pulses", "states", "n_grid", "periods"):
        if key in merged and isinstance(merged[key], int) and merged[key] < 1:
            out.append(f"experiment.params.{key} must be >= 1")
    return out


def resolved_params(name: str, params: dict) -> dict:
    merged = {**EXPERIMENTS[name].defaults, **params}
    for key, default in EXPERIMENTS[name].defaults.items():
        if isinstance(default, float) and isinstance(merged[key], int):
            merged[key] = float(merged[key])
    return merged
