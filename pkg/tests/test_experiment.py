import dataclasses
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kdiffract.errors import DomainError
from kdiffract.experiment import (
    HBAR,
    PRESETS,
    SODIUM_MASS,
    BeamScenario,
    cal_t,
    dominant_term,
    preset,
    tau_estimate,
    tau_from,
)

COLD = PRESETS["cold-beam-sec5"]


def scenario(**kw):
    base = dict(mass=SODIUM_MASS, mean_p_z=SODIUM_MASS * 1e3, eps_z=1e-7, class_spread=0.0,
                t_int=1e-9, rabi=1e11, detuning=2e12)
    base.update(kw)
    return BeamScenario(**base)


def test_packet_width_limit():
    # t -> 0 with no classical spread: tau = eps_z / v.
    est = tau_from(SODIUM_MASS, SODIUM_MASS * 1e3, 1e-7, 0.0, 0.0)
    assert est.tau == pytest.approx(1e-7 / 1e3, rel=1e-15)


def test_cold_beam_numbers():
    est = tau_estimate(COLD)
    width, schrod, classical = (math.sqrt(x) for x in est.terms)
    assert schrod == pytest.approx(HBAR * 1e-9 / (2 * SODIUM_MASS * 1e-11), rel=1e-15)
    assert schrod == pytest.approx(1.38e-7, rel=1e-2)
    assert classical == pytest.approx(1e-9, rel=1e-12)
    assert width == 1e-11
    assert est.tau == pytest.approx(1.38e-10, rel=1e-2)
    assert dominant_term(COLD) == "schrodinger_spread"


def test_cold_beam_dimensionless_scale():
    est = tau_estimate(COLD)
    calT, T = cal_t(COLD, est.tau)
    assert T == pytest.approx(10.0, rel=1e-12)
    assert calT == pytest.approx(1.38, rel=1e-2)
    assert calT / T == pytest.approx(est.tau / COLD.t_int, rel=1e-14)


def test_cal_t_zero_tau():
    assert cal_t(COLD, 0.0)[0] == 0.0
    with pytest.raises(DomainError):
        cal_t(COLD, -1.0)


def test_doubling_width_doubles_tau():
    # Packet-width dominated with t = 0.
    a = tau_from(SODIUM_MASS, 1e-23, 1e-6, 0.0, 0.0).tau
    b = tau_from(SODIUM_MASS, 1e-23, 2e-6, 0.0, 0.0).tau
    assert b == pytest.approx(2 * a, rel=1e-15)


def test_dominant_term_regimes():
    assert dominant_term(scenario(class_spread=1e-20)) == "classical_spread"
    assert dominant_term(scenario(t_int=1e-30)) == "packet_width"
    assert dominant_term(COLD) == "schrodinger_spread"


@given(st.floats(1e-12, 1e-5), st.floats(0.0, 1e-24), st.floats(1e-12, 1e-6))
def test_tau_dominates_single_terms(eps_z, spread, t):
    mass, p = SODIUM_MASS, SODIUM_MASS * 1e3
    est = tau_from(mass, p, eps_z, spread, t)
    for term in est.terms:
        assert est.tau >= math.sqrt(term) * mass / p * (1 - 1e-15)


@given(st.floats(1e-10, 1e-6), st.floats(1.01, 10.0))
def test_tau_monotone_in_time_and_spread(t, factor):
    mass, p = SODIUM_MASS, SODIUM_MASS * 1e3
    assert tau_from(mass, p, 1e-8, 1e-27, t * factor).tau > tau_from(mass, p, 1e-8, 1e-27, t).tau
    assert tau_from(mass, p, 1e-8, 1e-27 * factor, t).tau > tau_from(mass, p, 1e-8, 1e-27, t).tau


def test_tau_monotone_in_width_above_spreading_scale():
    mass, t = SODIUM_MASS, 1e-9
    crossover = math.sqrt(HBAR * t / (2 * mass))
    widths = [crossover * k for k in (1.5, 2.0, 4.0, 8.0)]
    taus = [tau_from(mass, mass * 1e3, w, 0.0, t).tau for w in widths]
    assert all(a < b for a, b in zip(taus, taus[1:]))


@pytest.mark.parametrize("lam", [0.5, 3.0, 1e3])
def test_unit_rescaling_leaves_scale_invariant(lam):
    # Rescale mass and momenta by lam and hbar by lam: lengths, times and tau are unchanged.
    s = COLD
    ref = tau_from(s.mass, s.mean_p_z, s.eps_z, s.class_spread, s.t_int, HBAR)
    scaled = tau_from(lam * s.mass, lam * s.mean_p_z, s.eps_z, lam * s.class_spread,
                      s.t_int, lam * HBAR)
    assert scaled.tau == pytest.approx(ref.tau, rel=1e-14)
    # And rescaling time by lam with rates by 1/lam leaves calT fixed.
    scaled_s = dataclasses.replace(s, t_int=lam * s.t_int, rabi=s.rabi / lam,
                                   detuning=s.detuning / lam)
    calT, T = cal_t(scaled_s, lam * ref.tau)
    assert calT == pytest.approx(cal_t(s, ref.tau)[0], rel=1e-14)
    assert T == pytest.approx(cal_t(s, ref.tau)[1], rel=1e-14)


def test_scenario_validation():
    with pytest.raises(DomainError):
        scenario(mass=0.0)
    with pytest.raises(DomainError):
        scenario(class_spread=-1.0)
    with pytest.warns(UserWarning, match="detuning"):
        scenario(detuning=5e11)


def test_presets():
    assert preset("figure2") is PRESETS["figure2"]
    calT, T = cal_t(preset("figure2"), tau_estimate(preset("figure2")).tau)
    assert T == pytest.approx(10.0)
    assert calT == pytest.approx(1.0, rel=1e-3)
    with pytest.raises(DomainError):
        preset("nope")
