"""Preisach hysteron ensemble for a multi-domain ferroelectric layer.

Every hysteron is a bistable relay with an up threshold ``v_up`` and a down
threshold ``v_down`` (``v_up > v_down``). Driving voltages are quasi-static:
only the instantaneous value matters, never the rate.

Voltages follow the top-electrode convention used for the P-V and write
measurements (signal on the W/WOx side, gate/substrate grounded). Positive
polarization depletes the WOx channel.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .traces import Trace, Waveform


@dataclass(frozen=True)
class Hysteron:
    v_up: float
    v_down: float
    weight: float
    state: int
    active: bool


@dataclass(frozen=True)
class EnsembleConfig:
    n_hysterons: int = 2000
    mean_v_up: float = 0.91
    mean_v_down: float = -1.27
    sigma_c: float = 0.475
    p_sat: float = 12.5
    seed: int = 0

    def violations(self) -> list[str]:
        out = []
        if not (isinstance(self.n_hysterons, (int, np.integer)) and self.n_hysterons >= 1):
            out.append("EnsembleConfig.n_hysterons must be an integer >= 1")
        if not (self.sigma_c >= 0 and math.isfinite(self.sigma_c)):
            out.append("EnsembleConfig.sigma_c must be >= 0")
        if not self.mean_v_up > self.mean_v_down:
            out.append("EnsembleConfig ordering: mean_v_up must exceed mean_v_down")
        if not (self.p_sat >= 0 and math.isfinite(self.p_sat)):
            out.append("EnsembleConfig.p_sat must be >= 0")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))


class DomainEnsemble:
    """Mutable ensemble state. Thresholds and weights are read-only arrays."""

    def __init__(self, v_up, v_down, weights, state, activation_rank,
                 p_sat: float, active_fraction: float = 1.0, rng_seed: int = 0):
        self.v_up = np.array(v_up, dtype=float)
        self.v_down = np.array(v_down, dtype=float)
        self.weights = np.array(weights, dtype=float)
        self.state = np.array(state, dtype=np.int8)
        self.activation_rank = np.array(activation_rank, dtype=np.int64)
        n = len(self.v_up)
        if not (len(self.v_down) == len(self.weights) == len(self.state)
                == len(self.activation_rank) == n):
            raise ValueError("hysteron arrays must share one length")
        if n == 0:
            raise ValueError("ensemble needs at least one hysteron")
        if np.any(self.v_up <= self.v_down):
            raise ValueError("every hysteron needs v_up > v_down")
        if np.any(self.weights < 0):
            raise ValueError("hysteron weights must be >= 0")
        if not np.all(np.isin(self.state, (-1, 1))):
            raise ValueError("hysteron states must be +1 or -1")
        for a in (self.v_up, self.v_down, self.weights, self.activation_rank):
            a.flags.writeable = False
        self.p_sat = float(p_sat)
        self.rng_seed = int(rng_seed)
        self._active = np.ones(n, dtype=bool)
        self.active_fraction = active_fraction

    def __len__(self):
        return len(self.v_up)

    @property
    def active_fraction(self) -> float:
        return self._active_fraction

    @active_fraction.setter
    def active_fraction(self, value: float):
        if not 0.0 <= value <= 1.0:
            raise ValueError("active_fraction must lie in [0, 1]")
        self._active_fraction = float(value)
        n_active = int(np.rint(value * len(self)))
        self._active = self.activation_rank < n_active

    @property
    def active(self) -> np.ndarray:
        return self._active

    @property
    def hysterons(self) -> list[Hysteron]:
        return [
            Hysteron(float(u), float(d), float(w), int(s), bool(a))
            for u, d, w, s, a in zip(self.v_up, self.v_down, self.weights,
                                     self.state, self._active)
        ]

    def apply_voltage(self, v: float) -> "DomainEnsemble":
        if not math.isfinite(v):
            raise ValueError("applied voltage must be finite")
        self.state[self._active & (v >= self.v_up)] = 1
        self.state[self._active & (v <= self.v_down)] = -1
        return self

    @property
    def polarization(self) -> float:
        """Net polarization in uC/cm^2; inactive domains contribute nothing."""
        if not self._active.any():
            raise ValueError("no active domains")
        w = self.weights
        total = w.sum()
        if total == 0:
            return 0.0
        return self.p_sat * float(np.dot(w, self.state * self._active)) / float(total)

    @property
    def active_weight(self) -> float:
        """Active share of total weight; the lowest attainable P is -p_sat times this."""
        total = self.weights.sum()
        return float(self.weights[self._active].sum() / total) if total else 0.0

    def copy(self) -> "DomainEnsemble":
        return DomainEnsemble(self.v_up, self.v_down, self.weights, self.state,
                              self.activation_rank, self.p_sat,
                              self.active_fraction, self.rng_seed)

    def to_dict(self) -> dict:
        return {
            "p_sat": self.p_sat,
            "active_fraction": self.active_fraction,
            "rng_seed": self.rng_seed,
            "v_up": self.v_up.tolist(),
            "v_down": self.v_down.tolist(),
            "weights": self.weights.tolist(),
            "state": self.state.tolist(),
            "activation_rank": self.activation_rank.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DomainEnsemble":
        return cls(d["v_up"], d["v_down"], d["weights"], d["state"],
                   d["activation_rank"], d["p_sat"], d["active_fraction"],
                   d.get("rng_seed", 0))

    def save(self, path, config: EnsembleConfig | None = None) -> None:
        doc = {"format": "ferrosim-ensemble/1", "ensemble": self.to_dict()}
        if config is not None:
            doc["config"] = asdict(config)
        Path(path).write_text(json.dumps(doc, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "DomainEnsemble":
        doc = json.loads(Path(path).read_text())
        return cls.from_dict(doc["ensemble"])


def build_ensemble(config: EnsembleConfig) -> DomainEnsemble:
    """Sample hysteron thresholds for ``config``; pristine 50/50 state split."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    n = int(config.n_hysterons)
    v_up = rng.normal(config.mean_v_up, config.sigma_c, n)
    v_down = rng.normal(config.mean_v_down, config.sigma_c, n)
    bad = v_up <= v_down
    while bad.any():
        k = int(bad.sum())
        v_up[bad] = rng.normal(config.mean_v_up, config.sigma_c, k)
        v_down[bad] = rng.normal(config.mean_v_down, config.sigma_c, k)
        bad = v_up <= v_down
    rank = rng.permutation(n)
    state = np.where(np.arange(n) % 2 == 0, 1, -1)
    weights = np.full(n, 1.0 / n)
    return DomainEnsemble(v_up, v_down, weights, state, rank, config.p_sat,
                          active_fraction=1.0, rng_seed=config.seed)


def apply_voltage(ensemble: DomainEnsemble, v: float) -> DomainEnsemble:
    return ensemble.apply_voltage(v)


def polarization(ensemble: DomainEnsemble) -> float:
    return ensemble.polarization


def run_waveform(ensemble: DomainEnsemble, waveform: Waveform) -> tuple[DomainEnsemble, Trace]:
    """Drive ``ensemble`` through every sample of ``waveform`` and record P(t, V)."""
    t, v = waveform.sample()
    p = np.empty_like(v)
    for i, vi in enumerate(v):
        ensemble.apply_voltage(vi)
        p[i] = ensemble.polarization
    return ensemble, Trace(t, v, p, kind="polarization")


def wakeup_fraction(n_cycles: float, n_w: float, a_min: float) -> float:
    if n_cycles < 0:
        raise ValueError("cycle count must be >= 0")
    if not n_w > 0:
        raise ValueError("n_w must be > 0")
    if not 0.0 <= a_min <= 1.0:
        raise ValueError("a_min must lie in [0, 1]")
    return a_min + (1.0 - a_min) * -math.expm1(-n_cycles / n_w)


def set_wakeup(ensemble: DomainEnsemble, n_cycles: float, n_w: float = 1e4,
               a_min: float = 0.5) -> DomainEnsemble:
    """Activate domains according to the cumulative field-cycle count.

    Activation order is fixed at construction, so the active set grows
    monotonically with ``n_cycles``. Newly activated domains keep their
    stored state until the next pulse reaches their thresholds.
    """
    ensemble.active_fraction = wakeup_fraction(n_cycles, n_w, a_min)
    return ensemble
