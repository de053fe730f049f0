import math
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ferrosim.electrostatics import (PHYS, DeviceStack, channel_resistance, depletion_width,
                                     extract_permittivity, gate_potential_from_polarization,
                                     on_off_ratio, series_capacitance, xd_vs_nd_curve)

STACK = DeviceStack()


def xd_oracle(v, stack=STACK, dps=50):
    """Depletion width in nm evaluated with 50-digit arithmetic."""
    mp.mp.dps = dps
    eps = mp.mpf(PHYS.eps0) * stack.eps_wox
    c = mp.mpf(stack.c_hzo_area) * mp.mpf("1e-2")
    qn = mp.mpf(PHYS.q) * mp.mpf(stack.n_d) * mp.mpf("1e6")
    x = (eps / c) * (mp.sqrt(1 + 2 * c * c * mp.mpf(v) / (qn * eps)) - 1)
    return float(x * mp.mpf("1e9"))


# -- capacitance ---------------------------------------------------------------

def test_series_capacitance_reference_stack():
    assert series_capacitance(1.13e-10, 8, 189, 3600) == pytest.approx(9.9e-11, rel=0.02)


def test_series_capacitance_infinite_permittivity():
    assert series_capacitance(1.13e-10, 8, math.inf, 3600) == 1.13e-10


def test_series_capacitance_hand_value():
    c_wox = 8.8541878128e-12 * 100 * 1000e-12 / 10e-9
    expected = 1 / (1 / 1e-10 + 1 / c_wox)
    assert series_capacitance(1e-10, 10, 100, 1000) == pytest.approx(expected, rel=1e-9)


def test_series_capacitance_rejects_non_positive():
    with pytest.raises(ValueError):
        series_capacitance(0.0, 8, 189, 3600)


def test_extract_symmetric_series_gives_unity():
    area, d = 1000.0, 10.0
    c = PHYS.eps0 * area * 1e-12 / (d * 1e-9)
    assert extract_permittivity(c, c / 2, d, area) == pytest.approx(1.0, rel=1e-12)


def test_extract_requires_smaller_total():
    with pytest.raises(ValueError, match="series capacitance must be below smallest element"):
        extract_permittivity(1e-10, 1e-10, 8, 3600)


@given(c=st.floats(1e-12, 1e-8), d=st.floats(1, 100), eps=st.floats(1, 1000),
       area=st.floats(10, 1e5))
def test_extract_inverts_series(c, d, eps, area):
    total = series_capacitance(c, d, eps, area)
    if total >= c * (1 - 1e-12):
        return  # series contribution below float resolution
    back = extract_permittivity(c, total, d, area)
    assert series_capacitance(c, d, back, area) == pytest.approx(total, rel=1e-9)
    if c - total > 1e-6 * c:
        assert back == pytest.approx(eps, rel=1e-6)


# -- depletion width -----------------------------------------------------------

@pytest.mark.parametrize("v, xd", [(1, 1.7), (2, 3.3), (3, 4.8), (4, 6.4)])
def test_depletion_table(v, xd):
    assert depletion_width(v, STACK) == pytest.approx(xd, abs=0.15)


def test_depletion_zero():
    assert depletion_width(0.0, STACK) == 0.0


@pytest.mark.parametrize("v", [2.5, 1e-3, 0.37, 10.0])
def test_depletion_matches_high_precision(v):
    assert depletion_width(v, STACK) == pytest.approx(xd_oracle(v), rel=1e-12)


def test_depletion_small_signal_limit():
    c = STACK.c_hzo_area * 1e-2
    qn = PHYS.q * STACK.n_d * 1e6
    for v in (1e-4, 5e-4, 1e-3):
        first_order = c * v / qn / 1e-9
        assert depletion_width(v, STACK) == pytest.approx(first_order, rel=0.01)


def test_depletion_rejects_negative():
    with pytest.raises(ValueError):
        depletion_width(-0.1, STACK)


def test_depletion_vectorized():
    v = np.array([1.0, 2.0, 3.0])
    assert np.allclose(depletion_width(v, STACK), [depletion_width(x, STACK) for x in v])


@given(v1=st.floats(0, 10), v2=st.floats(0, 10), n1=st.floats(1e17, 1e22), n2=st.floats(1e17, 1e22))
def test_depletion_monotone(v1, v2, n1, n2):
    lo, hi = sorted((v1, v2))
    assert depletion_width(lo, STACK) <= depletion_width(hi, STACK)
    nlo, nhi = sorted((n1, n2))
    assert (depletion_width(3.0, replace(STACK, n_d=nhi))
            <= depletion_width(3.0, replace(STACK, n_d=nlo)) * (1 + 1e-12))


# -- potential and resistance --------------------------------------------------

def test_gate_potential_examples():
    assert gate_potential_from_polarization(12.4, 2.7, 1.0) == pytest.approx(4.593, abs=1e-3)
    assert gate_potential_from_polarization(12.4, 2.7, 0.3) == pytest.approx(1.378, abs=1e-3)
    assert gate_potential_from_polarization(0.0, 2.7) == 0.0
    assert gate_potential_from_polarization(-5.0, 2.7) < 0


def test_gate_potential_rejects_bad_scale():
    with pytest.raises(ValueError):
        gate_potential_from_polarization(1.0, 2.7, 0.0)


def test_r_on_from_geometry():
    r = 0.327e-2 * 5e-6 / (20e-6 * 8e-9)
    assert channel_resistance(STACK, 0.0) == pytest.approx(r, rel=1e-12)
    assert STACK.r_on == pytest.approx(102e3, rel=0.02)


def test_full_depletion_clamps():
    assert channel_resistance(STACK, STACK.d_wox) == STACK.r_max
    assert channel_resistance(STACK, 2 * STACK.d_wox) == STACK.r_max


def test_half_depletion_doubles():
    assert channel_resistance(STACK, 4.0) == pytest.approx(2 * STACK.r_on, rel=1e-12)


@given(x=st.floats(0, 20))
def test_resistance_at_least_r_on(x):
    r = channel_resistance(STACK, x)
    assert r >= STACK.r_on * (1 - 1e-12)
    if x > 1e-9:
        assert r > STACK.r_on


def test_on_off_ordering_with_thickness():
    v = 2.7
    ratios = [on_off_ratio(replace(STACK, d_wox=d), v) for d in (8, 11.3, 15)]
    assert ratios[0] > ratios[1] > ratios[2] > 0
    assert on_off_ratio(STACK, 0.0) == 0.0


def test_on_off_090_from_inverted_thickness():
    # t_eff = d/1.9 gives ratio 0.9; find the v_gs that depletes d - d/1.9
    target = STACK.d_wox - STACK.d_wox / 1.9
    lo, hi = 0.0, 20.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if depletion_width(mid, STACK) < target else (lo, mid)
    assert on_off_ratio(STACK, hi) == pytest.approx(0.9, rel=1e-6)


def test_stack_violations():
    bad = DeviceStack(d_wox=-1)
    assert any("DeviceStack.d_wox must be strictly positive" in v for v in bad.violations())
    assert DeviceStack().violations() == []


# -- curves --------------------------------------------------------------------

def test_xd_curve_delegates_and_orders():
    n_d = np.logspace(18, 22, 25)
    c1, c4 = xd_vs_nd_curve([1.0, 4.0], n_d, STACK)
    assert np.all(c4.x_d > c1.x_d)
    k = 7
    assert c1.x_d[k] == pytest.approx(depletion_width(1.0, replace(STACK, n_d=n_d[k])))
    big = xd_vs_nd_curve([4.0], [1e30], STACK)[0]
    assert big.x_d[0] < 1e-3
