"""Linearity, symmetry, noise, retention and energy metrics for pulse data."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .gpr import GprModel, HyperGrid, gpr_fit
from .traces import Trace

POT, DEP = 1, -1
BRANCH_NAMES = {POT: "potentiation", DEP: "depression"}


@dataclass
class PulseSeries:
    pulse_index: np.ndarray
    r_ds: np.ndarray
    cycle_id: np.ndarray
    branch: np.ndarray
    position: np.ndarray
    amplitude: np.ndarray

    @classmethod
    def from_trace(cls, trace: Trace) -> "PulseSeries":
        a = trace.aux
        missing = {"pulse", "cycle", "branch", "position"} - set(a)
        if missing:
            raise ValueError(f"trace lacks pulse columns: {sorted(missing)}")
        return cls(a["pulse"].astype(int), trace.value.copy(), a["cycle"].astype(int),
                   a["branch"].astype(int), a["position"].astype(int), trace.v.copy())

    def __len__(self):
        return len(self.r_ds)

    def select(self, mask) -> "PulseSeries":
        mask = np.asarray(mask, bool)
        return PulseSeries(*(getattr(self, f)[mask] for f in
                             ("pulse_index", "r_ds", "cycle_id", "branch", "position", "amplitude")))

    def branch_window(self, branch: int, v_lo: float, v_hi: float) -> "PulseSeries":
        """Pulses of one branch with amplitude inside [v_lo, v_hi], positions re-based."""
        eps = 1e-9
        m = (self.branch == branch) & (self.amplitude >= v_lo - eps) & (self.amplitude <= v_hi + eps)
        sub = self.select(m)
        if len(sub):
            sub.position = sub.position - sub.position.min()
        return sub

    def matrix(self) -> np.ndarray:
        """R_DS as (cycles, positions-per-cycle); cycles must align."""
        cycles = np.unique(self.cycle_id)
        rows = [self.r_ds[self.cycle_id == c] for c in cycles]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("cycles are misaligned: unequal pulse counts")
        keys = [tuple(zip(self.branch[self.cycle_id == c], self.position[self.cycle_id == c]))
                for c in cycles]
        if any(k != keys[0] for k in keys[1:]):
            raise ValueError("cycles are misaligned: pulse positions differ")
        return np.vstack(rows)


# -- linearity -----------------------------------------------------------------

@dataclass
class LinearFit:
    slope: float
    intercept: float
    r2: float
    adj_r2: float
    residuals: np.ndarray  # normalized by the R window


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y = slope*x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 3 or len(y) != n:
        raise ValueError("linear fit needs at least 3 points")
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("x has zero variance")
    ym = y.mean()
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    res = y - (slope * x + intercept)
    sst = np.sum((y - ym) ** 2)
    r2 = 1.0 if sst == 0 else float(1.0 - np.sum(res ** 2) / sst)
    adj = 1.0 - (1.0 - r2) * (n - 1) / (n - 2)
    window = y.max() - y.min()
    norm = res / window if window > 0 else res
    return LinearFit(slope, intercept, r2, float(adj), norm)


# -- GPR-derived quantities ----------------------------------------------------

def delta_r(model: GprModel, indices) -> np.ndarray:
    """Pulse-to-pulse change of the posterior mean."""
    idx = np.asarray(indices, dtype=float)
    if len(idx) < 2:
        raise ValueError("need at least two indices")
    return np.diff(model.predict(idx))


def residual_sigma(model: GprModel, x, y) -> float:
    return float(np.std(np.asarray(y, float) - model.predict(x), ddof=1))


def snr(model: GprModel, x, y, indices=None) -> tuple[np.ndarray, bool]:
    """|dR| per pulse over the residual sigma.

    Returns ``(snr, infinite)``; when residuals vanish (below 1e-6 of the
    signal scale, the floor set by kernel jitter) every nonzero step is reported as ``inf`` and the flag is set.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx = np.unique(x) if indices is None else np.asarray(indices, float)
    dr = np.abs(delta_r(model, idx))
    sigma = residual_sigma(model, x, y)
    floor = 1e-6 * max(float(np.max(np.abs(y))), np.finfo(float).tiny)
    if sigma <= floor:
        flat = dr <= floor
        return np.where(flat, 0.0, np.inf), True
    return dr / sigma, False


def symmetry_factor(dr_pot, dr_dep):
    """|dR+ - dR-| / (dR+ + dR-) from step magnitudes at one resistance level."""
    a = np.asarray(dr_pot, dtype=float)
    b = np.asarray(dr_dep, dtype=float)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("step magnitudes must be >= 0")
    s = a + b
    if np.any(s == 0):
        raise ValueError("SF undefined at flat point")
    sf = np.abs(a - b) / s
    return float(sf) if np.ndim(sf) == 0 else sf


@dataclass
class SfProfile:
    r_grid: np.ndarray
    sf: np.ndarray
    sf_mean: float
    sf_center: float


def branch_steps(model: GprModel, indices) -> tuple[np.ndarray, np.ndarray]:
    """Resistance level (step midpoint) and |dR| for each step, sorted by level."""
    idx = np.asarray(indices, dtype=float)
    m = model.predict(idx)
    level = 0.5 * (m[1:] + m[:-1])
    step = np.abs(np.diff(m))
    order = np.argsort(level)
    return level[order], step[order]


def sf_profile(model_pot: GprModel, model_dep: GprModel, idx_pot=None, idx_dep=None,
               n_grid: int = 32) -> SfProfile:
    """SF over a shared resistance grid spanning the overlap of both branches."""
    idx_pot = np.unique(model_pot.x) if idx_pot is None else idx_pot
    idx_dep = np.unique(model_dep.x) if idx_dep is None else idx_dep
    lp, sp = branch_steps(model_pot, idx_pot)
    ld, sd = branch_steps(model_dep, idx_dep)
    lo, hi = max(lp[0], ld[0]), min(lp[-1], ld[-1])
    if not hi > lo:
        raise ValueError("branches share no resistance range")
    grid = np.linspace(lo, hi, n_grid)
    a = np.interp(grid, lp, sp)
    b = np.interp(grid, ld, sd)
    s = a + b
    sf = np.full(n_grid, np.nan)
    ok = s > 0
    sf[ok] = np.abs(a[ok] - b[ok]) / s[ok]
    third = n_grid // 3
    return SfProfile(grid, sf, float(np.nanmean(sf)),
                     float(np.nanmean(sf[third:n_grid - third])))


# -- cycle statistics ----------------------------------------------------------

@dataclass
class CycleStats:
    mean: np.ndarray
    sigma: np.ndarray
    sigma_over_ron: np.ndarray
    r_on: float


def cycle_stats(series_or_matrix, r_on: float | None = None) -> CycleStats:
    """Per-position mean and spread of R_DS across cycles."""
    if isinstance(series_or_matrix, PulseSeries):
        mat = series_or_matrix.matrix()
    else:
        mat = np.asarray(series_or_matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[0] < 3:
        raise ValueError("cycle statistics need at least 3 aligned cycles")
    mean = mat.mean(axis=0)
    sigma = mat.std(axis=0, ddof=1)
    ron = float(mean.min()) if r_on is None else float(r_on)
    return CycleStats(mean, sigma, sigma / ron, ron)


# -- energy and retention ------------------------------------------------------

def write_energy(v: float, i_gate: float, t: float, w: float, l: float) -> float:
    """Write energy per gate area, J/um^2 (``w`` and ``l`` in um)."""
    if v < 0 or i_gate < 0 or t < 0 or not (w > 0 and l > 0):
        raise ValueError("energy inputs must be positive")
    return v * i_gate * t / (w * l)


def states_distinguishable(traces, k_sigma: float = 2.0) -> int:
    """Size of the largest chain of states whose ordered time-averaged means are
    each separated by at least ``k_sigma`` pooled standard deviations."""
    if k_sigma <= 0:
        raise ValueError("k_sigma must be > 0")
    vals = [np.asarray(t.value if isinstance(t, Trace) else t, dtype=float) for t in traces]
    if not vals:
        raise ValueError("need at least one trace")
    means = np.array([v.mean() for v in vals])
    sig = np.array([v.std(ddof=1) if len(v) > 1 else 0.0 for v in vals])
    order = np.argsort(means)
    means, sig = means[order], sig[order]
    n = len(means)
    best = np.ones(n, dtype=int)
    for j in range(n):
        for i in range(j):
            pooled = np.sqrt(0.5 * (sig[i] ** 2 + sig[j] ** 2))
            if means[j] - means[i] >= k_sigma * pooled and best[i] + 1 > best[j]:
                best[j] = best[i] + 1
    return int(best.max())


# -- P-V loop ------------------------------------------------------------------

def _zero_crossing(x, y):
    s = np.sign(y)
    idx = np.nonzero(s[:-1] * s[1:] <= 0)[0]
    idx = [i for i in idx if not (y[i] == 0 and y[i + 1] == 0)]
    if not idx:
        return float("nan")
    i = idx[0]
    if y[i + 1] == y[i]:
        return float(x[i])
    return float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))


@dataclass
class LoopMetrics:
    p_r_plus: float
    p_r_minus: float
    v_c_plus: float
    v_c_minus: float


def pv_metrics(trace: Trace) -> LoopMetrics:
    """Remanence and coercive voltages from the last period of a triangle P-V trace."""
    v, p = trace.v, trace.value
    amp = float(np.max(np.abs(v)))
    i_max = int(np.nonzero(v >= amp - 1e-12)[0][-1])
    i_min = int(np.nonzero(v <= -amp + 1e-12)[0][-1])
    if i_min < i_max:
        raise ValueError("trace does not end with a negative half-period")
    i_up0 = int(np.nonzero(v[:i_max] <= -amp + 1e-12)[0][-1]) if np.any(v[:i_max] <= -amp + 1e-12) else 0
    up = slice(i_up0, i_max + 1)
    down = slice(i_max, i_min + 1)
    tail = slice(i_min, len(v))
    p_r_plus = float(np.interp(0.0, v[down][::-1], p[down][::-1]))
    p_r_minus = float(np.interp(0.0, v[tail], p[tail]))
    return LoopMetrics(p_r_plus, p_r_minus, _zero_crossing(v[up], p[up]),
                       _zero_crossing(v[down], p[down]))


def loop_area(v, r) -> float:
    """Enclosed area of a closed (V, R) path by the shoelace formula."""
    v = np.append(np.asarray(v, float), v[0])
    r = np.append(np.asarray(r, float), r[0])
    return float(abs(0.5 * np.sum(v[:-1] * r[1:] - v[1:] * r[:-1])))


# -- report --------------------------------------------------------------------

@dataclass
class BranchMetrics:
    slope: float
    intercept: float
    adj_r2: float
    residuals: list
    gpr: dict
    delta_r: list
    snr: list
    snr_infinite: bool


@dataclass
class MetricsReport:
    branches: dict = field(default_factory=dict)
    adj_r2: float = float("nan")
    sf_grid: list = field(default_factory=list)
    sf: list = field(default_factory=list)
    sf_mean: float = float("nan")
    sf_center: float = float("nan")
    cycle_sigma_pct: list = field(default_factory=list)
    cycle_sigma_pct_mean: float = float("nan")
    energy_per_area: float = float("nan")

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if np.isnan(f):
            return None
        if np.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


@dataclass
class FitWindows:
    pot: tuple[float, float] = (1.0, 3.1)
    dep: tuple[float, float] = (-3.0, -0.9)


@dataclass
class BranchFit:
    series: PulseSeries
    linear: LinearFit
    model: GprModel


def fit_branch(series: PulseSeries, branch: int, window, grid: HyperGrid | None = None) -> BranchFit:
    sub = series.branch_window(branch, *window)
    if len(sub) < 4:
        raise ValueError(f"too few {BRANCH_NAMES[branch]} pulses in window {window}")
    x = sub.position.astype(float)
    return BranchFit(sub, linear_fit(x, sub.r_ds), gpr_fit(x, sub.r_ds, grid))


def metrics_report(series: PulseSeries, windows: FitWindows | None = None,
                   r_on: float | None = None, energy: tuple | None = None,
                   n_grid: int = 32) -> tuple[MetricsReport, dict[int, BranchFit]]:
    """Full linearity/symmetry pipeline over a potentiation/depression series.

    ``energy`` is an optional ``(v, i_gate, t, w, l)`` tuple.
    """
    windows = windows or FitWindows()
    fits = {POT: fit_branch(series, POT, windows.pot),
            DEP: fit_branch(series, DEP, windows.dep)}
    rep = MetricsReport()
    for b, f in fits.items():
        x = f.series.position.astype(float)
        idx = np.unique(x)
        s, inf = snr(f.model, x, f.series.r_ds, idx)
        rep.branches[BRANCH_NAMES[b]] = asdict(BranchMetrics(
            f.linear.slope, f.linear.intercept, f.linear.adj_r2, f.linear.residuals,
            {"length_scale": f.model.length_scale,
             "signal_variance": f.model.signal_variance,
             "noise_variance": f.model.noise_variance},
            delta_r(f.model, idx), s, inf))
    rep.adj_r2 = min(f.linear.adj_r2 for f in fits.values())
    prof = sf_profile(fits[POT].model, fits[DEP].model, n_grid=n_grid)
    rep.sf_grid, rep.sf = prof.r_grid, prof.sf
    rep.sf_mean, rep.sf_center = prof.sf_mean, prof.sf_center
    if len(np.unique(series.cycle_id)) >= 3:
        cs = cycle_stats(series, r_on)
        rep.cycle_sigma_pct = 100 * cs.sigma_over_ron
        rep.cycle_sigma_pct_mean = float(100 * cs.sigma_over_ron.mean())
    if energy is not None:
        rep.energy_per_area = write_energy(*energy)
    return rep, fits
