"""Piecewise-linear voltage programs and sampled measurement records."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRACE_KINDS = ("polarization", "resistance", "capacitance")

UNITS = {
    "polarization": "uC/cm^2",
    "resistance": "ohm",
    "capacitance": "F",
}


@dataclass(frozen=True)
class Waveform:
    """Gate voltage program made of linear segments.

    ``segments`` holds ``(duration_s, v_start, v_end)`` tuples. Consecutive
    segments need not be continuous; a jump is sampled as an instantaneous step.
    """

    segments: tuple[tuple[float, float, float], ...]
    sample_dt: float

    def __post_init__(self):
        segs = tuple((float(d), float(a), float(b)) for d, a, b in self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("waveform has no segments")
        if not (self.sample_dt > 0 and math.isfinite(self.sample_dt)):
            raise ValueError("sample_dt must be positive and finite")
        for d, a, b in segs:
            if not d > 0:
                raise ValueError(f"segment duration must be > 0, got {d}")
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError("segment voltages must be finite")

    @property
    def duration(self) -> float:
        return sum(d for d, _, _ in self.segments)

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(t, v)`` arrays; the first sample is ``(0, v_start)``."""
        ts = [np.array([0.0])]
        vs = [np.array([self.segments[0][1]])]
        t0 = 0.0
        for d, a, b in self.segments:
            n = max(1, math.ceil(d / self.sample_dt - 1e-9))
            frac = np.arange(1, n + 1) / n
            ts.append(t0 + d * frac)
            vs.append(a + (b - a) * frac)
            t0 += d
        return np.concatenate(ts), np.concatenate(vs)

    @classmethod
    def triangle(
        cls,
        amplitude: float,
        frequency: float,
        periods: int = 1,
        points_per_period: int = 1600,
        offset: float = 0.0,
    ) -> "Waveform":
        """Bipolar triangle 0 -> +A -> -A -> 0, repeated ``periods`` times."""
        if frequency <= 0:
            raise ValueError("frequency must be > 0")
        if periods < 1:
            raise ValueError("periods must be >= 1")
        T = 1.0 / frequency
        one = [
            (T / 4, offset, offset + amplitude),
            (T / 2, offset + amplitude, offset - amplitude),
            (T / 4, offset - amplitude, offset),
        ]
        return cls(tuple(one * periods), sample_dt=T / points_per_period)

    @classmethod
    def staircase(cls, levels, dwell: float) -> "Waveform":
        """Flat steps at each level, each lasting ``dwell`` seconds."""
        levels = [float(v) for v in levels]
        if not levels:
            raise ValueError("waveform has no segments")
        return cls(tuple((dwell, v, v) for v in levels), sample_dt=dwell)


@dataclass
class Trace:
    """Ordered ``(t, v, value)`` record of one measured quantity.

    Extra per-sample columns (cycle ids, branch tags, ...) live in ``aux`` and
    are written after the three core columns.
    """

    t: np.ndarray
    v: np.ndarray
    value: np.ndarray
    kind: str
    units: str = ""
    aux: dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.value = np.asarray(self.value, dtype=float)
        if self.kind not in TRACE_KINDS:
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if not self.units:
            self.units = UNITS[self.kind]
        n = len(self.t)
        if len(self.v) != n or len(self.value) != n:
            raise ValueError("t, v and value must have equal length")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trace time column must be strictly increasing")
        self.aux = {k: np.asarray(a) for k, a in self.aux.items()}
        for k, a in self.aux.items():
            if len(a) != n:
                raise ValueError(f"aux column {k!r} has wrong length")

    def __len__(self):
        return len(self.t)

    @property
    def columns(self) -> list[str]:
        return ["t", "v", self.kind, *self.aux]

    def rows(self):
        aux = list(self.aux.values())
        for i in range(len(self.t)):
            yield (self.t[i], self.v[i], self.value[i], *(a[i] for a in aux))
