"""Simulated FeFET and the measurement protocols run against it.

A device couples a hysteron ensemble (the HZO gate) with the closed-form
channel electrostatics. Polarization switched away from the fully
accumulating state depletes the WOx channel and raises R_DS.

All voltages are top-electrode voltages against the grounded gate, i.e. the
V_write applied to source and drain together. The equivalent gate-referenced
V_GS carries the opposite sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import electrostatics as es
from .domains import DomainEnsemble, EnsembleConfig, build_ensemble, run_waveform, set_wakeup
from .electrostatics import DeviceStack
from .traces import Trace, Waveform

READ_TIME = 10e-3  # s per +-200 mV IV sweep
NOISE_REFERENCES = ("r_on", "r_true")


@dataclass(frozen=True)
class PulseRule:
    """How pulse width enters switching.

    Pulses shorter than ``t_min`` switch nothing. With ``exponent > 0`` a pulse
    of width w acts like amplitude ``v * min(1, w/t_ref)**exponent``; the
    default exponent of 0 keeps switching width-independent.
    """

    t_min: float = 10e-9
    t_ref: float = 1e-6
    exponent: float = 0.0

    def effective_amplitude(self, amplitude: float, width: float) -> float:
        if width < self.t_min:
            return 0.0
        if self.exponent == 0:
            return amplitude
        return amplitude * min(1.0, width / self.t_ref) ** self.exponent


@dataclass(frozen=True)
class DeviceConfig:
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    stack: DeviceStack = field(default_factory=DeviceStack)
    scale: float = 0.30
    read_noise_sigma: float = 0.01
    noise_reference: str = "r_on"
    seed: int = 0
    wakeup_cycles: float = 1e5
    n_w: float = 1e4
    a_min: float = 0.5
    pulse_rule: PulseRule = field(default_factory=PulseRule)
    i_gate: float = 3.02e-8  # A at the write amplitude, for energy accounting

    def violations(self) -> list[str]:
        out = self.ensemble.violations() + self.stack.violations()
        if not 0 < self.scale <= 1:
            out.append("DeviceConfig.scale must lie in (0, 1]")
        if not self.read_noise_sigma >= 0:
            out.append("DeviceConfig.read_noise_sigma must be >= 0")
        if self.noise_reference not in NOISE_REFERENCES:
            out.append(f"DeviceConfig.noise_reference must be one of {NOISE_REFERENCES}")
        if not self.wakeup_cycles >= 0:
            out.append("DeviceConfig.wakeup_cycles must be >= 0")
        if not self.n_w > 0:
            out.append("DeviceConfig.n_w must be > 0")
        if not 0 <= self.a_min <= 1:
            out.append("DeviceConfig.a_min must lie in [0, 1]")
        if not self.pulse_rule.t_min >= 0:
            out.append("PulseRule.t_min must be >= 0")
        if not self.pulse_rule.t_ref > 0:
            out.append("PulseRule.t_ref must be > 0")
        if not self.i_gate >= 0:
            out.append("DeviceConfig.i_gate must be >= 0")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))


class FeFETDevice:
    def __init__(self, ensemble: DomainEnsemble, stack: DeviceStack, *,
                 scale: float = 0.30, read_noise_sigma: float = 0.01,
                 noise_reference: str = "r_on", rng_seed: int = 0,
                 pulse_rule: PulseRule | None = None, i_gate: float = 3.02e-8,
                 n_w: float = 1e4, a_min: float = 0.5):
        if noise_reference not in NOISE_REFERENCES:
            raise ValueError(f"noise_reference must be one of {NOISE_REFERENCES}")
        self.ensemble = ensemble
        self.stack = stack
        self.scale = scale
        self.read_noise_sigma = read_noise_sigma
        self.noise_reference = noise_reference
        self.rng_seed = rng_seed
        self.rng = np.random.default_rng(rng_seed)
        self.pulse_rule = pulse_rule or PulseRule()
        self.i_gate = i_gate
        self.n_w = n_w
        self.a_min = a_min
        self.clock = 0.0
        self.pulse_log: list[tuple[float, float]] = []

    @classmethod
    def from_config(cls, config: DeviceConfig) -> "FeFETDevice":
        config.validate()
        ens = build_ensemble(config.ensemble)
        set_wakeup(ens, config.wakeup_cycles, config.n_w, config.a_min)
        return cls(ens, config.stack, scale=config.scale,
                   read_noise_sigma=config.read_noise_sigma,
                   noise_reference=config.noise_reference, rng_seed=config.seed,
                   pulse_rule=config.pulse_rule, i_gate=config.i_gate,
                   n_w=config.n_w, a_min=config.a_min)

    def clone(self, seed: int | None = None) -> "FeFETDevice":
        dev = FeFETDevice(self.ensemble.copy(), self.stack, scale=self.scale,
                          read_noise_sigma=self.read_noise_sigma,
                          noise_reference=self.noise_reference,
                          rng_seed=self.rng_seed if seed is None else seed,
                          pulse_rule=self.pulse_rule, i_gate=self.i_gate,
                          n_w=self.n_w, a_min=self.a_min)
        if seed is None:
            dev.rng.bit_generator.state = self.rng.bit_generator.state
        dev.clock = self.clock
        return dev

    # -- state -> resistance -------------------------------------------------

    @property
    def r_on(self) -> float:
        return self.stack.r_on

    def depletion_charge(self) -> float:
        """Polarization switched away from the fully accumulating state, uC/cm^2."""
        ens = self.ensemble
        floor = -ens.p_sat * ens.active_weight
        return max(ens.polarization - floor, 0.0)

    def true_resistance(self) -> float:
        dp = self.depletion_charge()
        if dp <= 0:
            return es.channel_resistance(self.stack, 0.0, accumulation=True)
        v = es.gate_potential_from_polarization(dp, self.stack.c_hzo_area, self.scale)
        return es.channel_resistance(self.stack, es.depletion_width(v, self.stack))

    # -- operations ----------------------------------------------------------

    def write_pulse(self, amplitude: float, width: float) -> "FeFETDevice":
        if not width > 0:
            raise ValueError("pulse width must be > 0")
        v = self.pulse_rule.effective_amplitude(amplitude, width)
        self.ensemble.apply_voltage(v)
        self.ensemble.apply_voltage(0.0)
        self.pulse_log.append((amplitude, width))
        self.clock += width
        return self

    def read_rds(self) -> float:
        """Noisy R_DS read; the state is left untouched.

        One Gaussian draw stands in for the mean of the -200 mV and +200 mV
        sweep endpoints, which share the same true resistance here.
        """
        r = self.true_resistance()
        self.clock += READ_TIME
        if self.read_noise_sigma == 0:
            return r
        ref = self.r_on if self.noise_reference == "r_on" else r
        return r + ref * self.read_noise_sigma * self.rng.standard_normal()

    def write_energy(self, amplitude: float, width: float) -> float:
        """Energy per gate area (J/um^2) of one pulse at the configured gate current."""
        from .analysis import write_energy
        return write_energy(abs(amplitude), self.i_gate, width, self.stack.width, self.stack.length)


def build_device(config: DeviceConfig | None = None) -> FeFETDevice:
    return FeFETDevice.from_config(config or DeviceConfig())


# -- resistance protocols ------------------------------------------------------

def sweep_levels(v_min: float, v_max: float, n_steps: int) -> np.ndarray:
    """Staircase 0 -> v_max -> v_min -> 0 with ``n_steps`` roughly equal steps."""
    if not v_min < v_max:
        raise ValueError("need v_min < v_max")
    if n_steps < 4:
        raise ValueError("n_steps must be >= 4")
    legs = [(0.0, v_max), (v_max, v_min), (v_min, 0.0)]
    lengths = np.array([abs(b - a) for a, b in legs])
    counts = np.maximum(1, np.rint(n_steps * lengths / lengths.sum()).astype(int))
    counts[1] += n_steps - counts.sum()
    parts = [np.linspace(a, b, k + 1)[1:] for (a, b), k in zip(legs, counts) if k > 0]
    return np.round(np.concatenate(parts), 12)


def rv_hysteresis(dev: FeFETDevice, v_min: float = -4.0, v_max: float = 4.0,
                  n_steps: int = 160, width: float = 5e-6) -> Trace:
    """Write/read staircase giving R_DS against V_write."""
    levels = sweep_levels(v_min, v_max, n_steps)
    t, r = [], []
    for v in levels:
        dev.write_pulse(v, width)
        r.append(dev.read_rds())
        t.append(dev.clock)
    return Trace(t, levels, r, kind="resistance",
                 aux={"step": np.arange(len(levels))})


def minor_loops(dev: FeFETDevice, ranges, step: float = 0.1,
                width: float = 5e-6) -> list[Trace]:
    """Consecutive R-V loops with (v_min, v_max) taken from ``ranges`` in order."""
    out = []
    for v_min, v_max in ranges:
        n = max(4, int(round((2 * v_max - 2 * v_min) / step)))
        tr = rv_hysteresis(dev, v_min, v_max, n, width)
        tr.meta.update(v_min=v_min, v_max=v_max)
        out.append(tr)
    return out


# -- capacitor protocols -------------------------------------------------------

def pv_loop(dev: FeFETDevice, amplitude: float = 3.8, frequency: float = 5e3,
            periods: int = 2, points_per_period: int = 1600) -> Trace:
    """P-V loop from a bipolar triangle; frequency only sets the sample spacing."""
    wf = Waveform.triangle(amplitude, frequency, periods, points_per_period)
    _, trace = run_waveform(dev.ensemble, wf)
    trace.meta.update(amplitude=amplitude, frequency=frequency, periods=periods)
    return trace


def linear_capacitance(stack: DeviceStack) -> float:
    """Non-switching (dielectric) capacitance of the MSFM capacitor in F."""
    area_m2 = stack.area_cap * es.UM2
    c_ox = stack.c_hzo_area * es.UF_PER_CM2 * area_m2
    return es.series_capacitance(c_ox, stack.d_wox, stack.eps_wox, stack.area_cap)


def cv_butterfly(dev: FeFETDevice, v_range: float = 3.8, dv: float = 0.02,
                 dt: float = 1e-3) -> Trace:
    """C-V curve from central differences of switched charge along both sweeps.

    C = A*dP/dV + C_lin. The ensemble is preset at -v_range, then swept
    up to +v_range and back; the ``branch`` aux column is +1 going up.
    """
    if not dv > 0:
        raise ValueError("dv must be > 0")
    if dv > v_range / 10:
        raise ValueError("dv too large: must not exceed v_range/10")
    n = int(round(v_range / dv))
    up = np.linspace(-v_range, v_range, 2 * n + 1)
    down = up[::-1]
    ens = dev.ensemble
    ens.apply_voltage(-v_range)
    area_cm2 = dev.stack.area_cap * 1e-8
    c_lin = linear_capacitance(dev.stack)
    vs, cs, br = [], [], []
    for sign, volts in ((1, up), (-1, down)):
        p = np.empty_like(volts)
        for i, v in enumerate(volts):
            ens.apply_voltage(v)
            p[i] = ens.polarization
        dpdv = np.gradient(p, volts)  # central inside, one-sided at the ends
        vs.append(volts)
        cs.append(area_cm2 * dpdv * 1e-6 + c_lin)
        br.append(np.full(len(volts), sign))
    v_all = np.concatenate(vs)
    t = dt * np.arange(1, len(v_all) + 1)
    return Trace(t, v_all, np.concatenate(cs), kind="capacitance",
                 aux={"branch": np.concatenate(br)}, meta={"c_lin": c_lin})


def pund_charges(dev: FeFETDevice, amplitude: float = 3.5) -> dict[str, float]:
    """Peak charge (uC/cm^2) delivered by each pulse of a PUND train.

    Sequence: negative preset, then P(+), U(+), N(-), D(-). Each entry is
    P at the pulse peak minus P before the pulse.
    """
    if not amplitude > 0:
        raise ValueError("amplitude must be > 0")
    ens = dev.ensemble
    ens.apply_voltage(-amplitude)
    ens.apply_voltage(0.0)
    out = {}
    for name, v in (("P", amplitude), ("U", amplitude), ("N", -amplitude), ("D", -amplitude)):
        before = ens.polarization
        ens.apply_voltage(v)
        out[name] = ens.polarization - before
        ens.apply_voltage(0.0)
    return out


def pund(dev: FeFETDevice, amplitude: float = 3.5, frequency: float = 1e3) -> float:
    """Total remanent polarization |P_r-| + |P_r+| from a PUND train."""
    q = pund_charges(dev, amplitude)
    dev.clock += 5.0 / frequency
    switched = abs(q["P"] - q["U"]) + abs(q["N"] - q["D"])
    return switched / 2.0


@dataclass(frozen=True)
class Fatigue:
    """Phenomenological roll-off: P scales by 1 - rate*log10(n/onset) past onset."""

    onset: float = 1e6
    rate_per_decade: float = 0.0

    def factor(self, n: float) -> float:
        if self.rate_per_decade == 0 or n <= self.onset:
            return 1.0
        return max(0.0, 1.0 - self.rate_per_decade * math.log10(n / self.onset))


def endurance_run(dev: FeFETDevice, cycle_schedule, amplitude: float = 3.5,
                  pund_points=(0, 1, 10, 100, 1000, 10_000, 100_000, 1_000_000),
                  pund_frequency: float = 1e3, fatigue: Fatigue | None = None) -> Trace:
    """PUND polarization against cumulative field cycles.

    ``cycle_schedule`` is a list of ``(n_cycles_until, frequency)`` legs; a leg
    covers the cycles from the previous leg's end up to ``n_cycles_until``.
    The wake-up state is set from the absolute cycle count (cycle 0 is pristine).
    """
    sched = [(float(n), float(f)) for n, f in cycle_schedule]
    if not sched:
        raise ValueError("cycle schedule must be non-empty")
    ends = [n for n, _ in sched]
    if any(b <= a for a, b in zip([0.0] + ends, ends)):
        raise ValueError("schedule leg ends must increase")
    points = sorted(float(p) for p in pund_points)
    if points and points[-1] > ends[-1]:
        raise ValueError("pund point beyond the cycling schedule")

    def elapsed(n: float) -> float:
        t, start = 0.0, 0.0
        for end, f in sched:
            seg = min(n, end) - start
            if seg <= 0:
                break
            t += seg / f
            start = end
        return t

    fatigue = fatigue or Fatigue()
    ts, ps, ns = [], [], []
    for n in points:
        set_wakeup(dev.ensemble, n, dev.n_w, dev.a_min)
        p = pund(dev, amplitude, pund_frequency) * fatigue.factor(n)
        ts.append(elapsed(n))
        ps.append(p)
        ns.append(n)
    return Trace(ts, np.full(len(ts), amplitude), ps, kind="polarization",
                 aux={"n_cycles": np.array(ns)})


# -- synapse protocols ---------------------------------------------------------

def amplitude_ladder(dev: FeFETDevice, n_states: int, v_max: float = 4.0,
                     reset: tuple[float, float] = (-4.0, 1e-3),
                     width: float = 5e-6, tol: float = 1e-4) -> np.ndarray:
    """Write amplitudes giving ``n_states`` equally spaced true resistances after reset."""
    if n_states < 1:
        raise ValueError("need at least one state")

    def r_after(a: float) -> float:
        d = dev.clone()
        d.write_pulse(*reset)
        if a > 0:
            d.write_pulse(a, width)
        return d.true_resistance()

    r_lo, r_hi = r_after(0.0), r_after(v_max)
    if n_states == 1:
        return np.array([0.0])
    targets = np.linspace(r_lo, r_hi, n_states)
    amps = [0.0]
    for target in targets[1:-1]:
        lo, hi = amps[-1], v_max
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if r_after(mid) < target:
                lo = mid
            else:
                hi = mid
        amps.append(hi)
    amps.append(v_max)
    return np.array(amps)


def retention_protocol(dev: FeFETDevice, target_states: int = 18, duration: float = 1500.0,
                       interval: float = 5.0, reset: tuple[float, float] = (-4.0, 1e-3),
                       v_max: float = 4.0, width: float = 5e-6,
                       decay_rate: float = 0.0) -> list[Trace]:
    """Reset, write one ladder level, then read every ``interval`` s for ``duration``.

    ``decay_rate`` (1/s) relaxes the read resistance toward R_on
    exponentially; 0 keeps states perfectly stable.
    """
    if target_states < 1:
        raise ValueError("target_states must be >= 1")
    if not (interval > 0 and duration >= 0):
        raise ValueError("need interval > 0 and duration >= 0")
    amps = amplitude_ladder(dev, target_states, v_max, reset, width)
    t = np.arange(0.0, duration + 0.5 * interval, interval)
    traces = []
    for k, a in enumerate(amps):
        dev.write_pulse(*reset)
        if a > 0:
            dev.write_pulse(a, width)
        r = np.empty_like(t)
        for i, ti in enumerate(t):
            val = dev.read_rds()
            if decay_rate:
                val = dev.r_on + (val - dev.r_on) * math.exp(-decay_rate * ti)
            r[i] = val
        traces.append(Trace(t, np.full(len(t), a), r, kind="resistance",
                            meta={"state": k, "write_amplitude": float(a)}))
    return traces


@dataclass(frozen=True)
class AmplitudeRamp:
    """Pulse amplitudes grow by ``step`` per pulse at constant width."""

    pot_start: float = 0.1
    pot_step: float = 0.1
    n_pot: int = 35
    dep_start: float = -0.1
    dep_step: float = -0.1
    n_dep: int = 30
    width: float = 10e-6

    @classmethod
    def from_range(cls, v_pot_max: float = 3.5, v_dep_min: float = -3.0,
                   step: float = 0.1, width: float = 10e-6) -> "AmplitudeRamp":
        n_pot = int(round(v_pot_max / step))
        n_dep = int(round(-v_dep_min / step))
        return cls(step, step, n_pot, -step, -step, n_dep, width)

    def pulses(self):
        pot = [(self.pot_start + k * self.pot_step, self.width) for k in range(self.n_pot)]
        dep = [(self.dep_start + k * self.dep_step, self.width) for k in range(self.n_dep)]
        return pot, dep


@dataclass(frozen=True)
class WidthRamp:
    """Pulse widths grow at fixed amplitude."""

    v_pot: float = 3.5
    v_dep: float = -3.0
    t_start: float = 40e-9
    t_stop: float = 250e-9
    n_pulses: int = 22

    def pulses(self):
        widths = np.linspace(self.t_start, self.t_stop, self.n_pulses)
        return ([(self.v_pot, float(w)) for w in widths],
                [(self.v_dep, float(w)) for w in widths])


SCHEMES = {"amplitude": AmplitudeRamp, "width": WidthRamp}


def potentiation_depression(dev: FeFETDevice, scheme, n_cycles: int = 5,
                             precondition: bool = True) -> Trace:
    """Repeated ramp cycles, one read after every pulse.

    With ``precondition`` the negative train is applied once, unrecorded, so
    the first recorded cycle starts from the same state as all later ones.

    Aux columns: ``pulse`` (global index), ``cycle``, ``branch`` (+1 for the
    positive-amplitude ramp that raises R_DS, -1 for the negative ramp),
    ``position`` (index within the branch) and ``width``.
    """
    if not isinstance(scheme, (AmplitudeRamp, WidthRamp)):
        raise ValueError(f"unknown pulse scheme {scheme!r}")
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    pot, dep = scheme.pulses()
    if precondition:
        for a, w in dep:
            dev.write_pulse(a, w)
    t, v, r, cyc, br, pos, wid = [], [], [], [], [], [], []
    for c in range(n_cycles):
        for sign, train in ((1, pot), (-1, dep)):
            for k, (a, w) in enumerate(train):
                dev.write_pulse(a, w)
                r.append(dev.read_rds())
                t.append(dev.clock)
                v.append(a)
                cyc.append(c)
                br.append(sign)
                pos.append(k)
                wid.append(w)
    return Trace(t, v, r, kind="resistance",
                 aux={"pulse": np.arange(len(t)), "cycle": np.array(cyc),
                      "branch": np.array(br), "position": np.array(pos),
                      "width": np.array(wid)})
