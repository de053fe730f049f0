"""Closed-form electrostatics of the W/WOx/HZO/TiN gate stack.

Inputs use lab units (nm, um, uF/cm^2, cm^-3, ohm*cm); everything is converted
to SI in ``_si`` helpers before the formulas are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy import constants


@dataclass(frozen=True)
class PhysConstants:
    eps0: float = constants.epsilon_0  # F/m
    q: float = constants.elementary_charge  # C


PHYS = PhysConstants()

NM = 1e-9
UM = 1e-6
UM2 = 1e-12
UF_PER_CM2 = 1e-2  # -> F/m^2
PER_CM3 = 1e6  # -> m^-3
OHM_CM = 1e-2  # -> ohm*m


@dataclass(frozen=True)
class DeviceStack:
    d_wox: float = 8.0  # nm
    eps_wox: float = 189.0
    c_hzo_area: float = 2.7  # uF/cm^2
    n_d: float = 1.01e20  # cm^-3
    rho: float = 0.327  # ohm*cm
    mu: float = 0.19  # cm^2/Vs, informational
    width: float = 20.0  # um
    length: float = 5.0  # um
    area_cap: float = 3600.0  # um^2
    r_max: float = 1e8  # ohm

    def violations(self) -> list[str]:
        out = []
        for name in ("d_wox", "eps_wox", "c_hzo_area", "n_d", "rho", "mu",
                     "width", "length", "area_cap", "r_max"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                out.append(f"DeviceStack.{name} must be strictly positive (got {val!r})")
        if out:
            return out
        if not 1.0 <= self.d_wox <= 100.0:
            out.append("DeviceStack.d_wox must lie in [1, 100] nm")
        if not self.r_max > self.r_on:
            out.append("DeviceStack.r_max must exceed the accumulation resistance")
        return out

    def validate(self) -> None:
        problems = self.violations()
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def r_on(self) -> float:
        """Undepleted channel resistance rho*l/(w*d) in ohm."""
        return (self.rho * OHM_CM) * (self.length * UM) / ((self.width * UM) * (self.d_wox * NM))


def series_capacitance(c_hzo: float, d_wox: float, eps_wox: float, area: float,
                       phys: PhysConstants = PHYS) -> float:
    """Total capacitance (F) of the HZO capacitor in series with the WOx layer.

    ``d_wox`` in nm, ``area`` in um^2.
    """
    for name, val in (("c_hzo", c_hzo), ("d_wox", d_wox), ("eps_wox", eps_wox), ("area", area)):
        if not val > 0:
            raise ValueError(f"{name} must be > 0")
    if math.isinf(eps_wox):
        return float(c_hzo)
    inv = 1.0 / c_hzo + (d_wox * NM) / (phys.eps0 * eps_wox * area * UM2)
    return 1.0 / inv


def extract_permittivity(c_hzo: float, c_total: float, d_wox: float, area: float,
                         phys: PhysConstants = PHYS) -> float:
    """Relative permittivity of the WOx layer from the series-capacitor pair."""
    if not (c_hzo > 0 and d_wox > 0 and area > 0 and c_total > 0):
        raise ValueError("all inputs must be > 0")
    if c_total >= c_hzo:
        raise ValueError("series capacitance must be below smallest element")
    inv_wox = 1.0 / c_total - 1.0 / c_hzo
    return (d_wox * NM) / (phys.eps0 * area * UM2 * inv_wox)


def depletion_width(v_gs, stack: DeviceStack, phys: PhysConstants = PHYS):
    """Depletion depth (nm) induced in the channel by a potential ``v_gs`` (V).

    Abrupt one-sided depletion under an oxide of areal capacitance C_HZO:

        x_d = (eps0*eps/C) * (sqrt(1 + 2*C^2*V / (q*N_D*eps0*eps)) - 1)

    Accepts scalars or arrays.
    """
    v = np.asarray(v_gs, dtype=float)
    if np.any(v < 0):
        raise ValueError("v_gs must be >= 0; polarity is handled by the caller")
    eps = phys.eps0 * stack.eps_wox
    c = stack.c_hzo_area * UF_PER_CM2
    qn = phys.q * stack.n_d * PER_CM3
    # sqrt(1+u)-1 written as u/(sqrt(1+u)+1) to keep precision at small u
    u = 2.0 * c * c * v / (qn * eps)
    xd = (eps / c) * u / (np.sqrt(1.0 + u) + 1.0) / NM
    return float(xd) if np.ndim(xd) == 0 else xd


def gate_potential_from_polarization(p: float, c_hzo_area: float, scale: float = 0.30) -> float:
    """Potential (V) across HZO set by polarization charge ``p`` (uC/cm^2).

    The magnitude is ``scale*|p|/C``; the sign of the result follows ``p``.
    Positive values deplete the channel, negative ones accumulate it.
    """
    if not c_hzo_area > 0:
        raise ValueError("c_hzo_area must be > 0")
    if not 0 < scale <= 1:
        raise ValueError("scale must lie in (0, 1]")
    # uC/cm^2 over uF/cm^2 is volts directly
    return scale * p / c_hzo_area


def channel_resistance(stack: DeviceStack, x_d, accumulation: bool = False):
    """Source-drain resistance (ohm) with ``x_d`` nm of the channel depleted."""
    if accumulation:
        return stack.r_on
    x = np.asarray(x_d, dtype=float)
    if np.any(x < 0):
        raise ValueError("x_d must be >= 0")
    t_eff = np.maximum(stack.d_wox - x, 0.0)
    with np.errstate(divide="ignore"):
        r = np.where(
            t_eff > 0,
            (stack.rho * OHM_CM) * (stack.length * UM) / ((stack.width * UM) * (t_eff * NM)),
            stack.r_max,
        )
    r = np.minimum(r, stack.r_max)
    return float(r) if np.ndim(r) == 0 else r


def on_off_ratio(stack: DeviceStack, v_gs: float) -> float:
    """(R_off - R_on)/R_on for a depleting potential ``v_gs``."""
    r_off = channel_resistance(stack, depletion_width(v_gs, stack))
    r_on = stack.r_on
    return (r_off - r_on) / r_on


class XdCurve(NamedTuple):
    v_gs: float
    n_d: np.ndarray  # cm^-3
    x_d: np.ndarray  # nm


def xd_vs_nd_curve(v_gs_list, n_d_values, stack: DeviceStack) -> list[XdCurve]:
    """Depletion width over a carrier-concentration grid, one curve per V_GS."""
    v_gs_list = list(v_gs_list)
    n_d = np.asarray(n_d_values, dtype=float)
    if not v_gs_list or n_d.size == 0:
        raise ValueError("v_gs list and n_d grid must be non-empty")
    curves = []
    for v in v_gs_list:
        xd = np.array([depletion_width(v, replace(stack, n_d=float(n))) for n in n_d])
        curves.append(XdCurve(float(v), n_d.copy(), xd))
    return curves
