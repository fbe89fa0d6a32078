"""Beam parameters to decoherence time scale.

The time uncertainty of a packet crossing the light field is its longitudinal
width divided by its group velocity. The width after the interaction time t has
three contributions (all squared lengths):

* the initial packet width eps_Z^2,
* free Schroedinger spreading (hbar t / (2 M eps_Z))^2,
* classical spreading (spread_P t / M)^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DomainError

HBAR = 1.0545718e-34  # J s
SODIUM_MASS = 3.82e-26  # kg
TERM_LABELS = ("packet_width", "schrodinger_spread", "classical_spread")


@dataclass(frozen=True)
class BeamScenario:
    """Physical beam parameters (SI units; frequencies in rad/s)."""

    mass: float
    mean_p_z: float
    eps_z: float
    class_spread: float
    t_int: float
    rabi: float
    detuning: float

    def __post_init__(self):
        for name in ("mass", "mean_p_z", "eps_z", "t_int", "rabi", "detuning"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if not (math.isfinite(self.class_spread) and self.class_spread >= 0.0):
            raise DomainError("class_spread must be nonnegative")
        if self.detuning < 10.0 * self.rabi:
            warnings.warn(
                "detuning below 10x Rabi frequency; large-detuning model is marginal",
                stacklevel=3,
            )

    @property
    def velocity(self) -> float:
        return self.mean_p_z / self.mass


@dataclass(frozen=True)
class TauEstimate:
    tau: float
    # Squared-length addends, in TERM_LABELS order.
    terms: tuple


def _width_terms(mass, eps_z, spread, t, hbar):
    return (
        eps_z * eps_z,
        (hbar / (2.0 * mass)) ** 2 * t * t / (eps_z * eps_z),
        (spread / mass) ** 2 * t * t,
    )


def tau_from(mass, mean_p_z, eps_z, spread, t, hbar=HBAR) -> TauEstimate:
    """Transit-time uncertainty with an explicit hbar (for unit-scaling checks)."""
    terms = _width_terms(mass, eps_z, spread, t, hbar)
    return TauEstimate(math.sqrt(math.fsum(terms)) * mass / mean_p_z, terms)


def tau_estimate(s: BeamScenario) -> TauEstimate:
    """Time uncertainty tau of the packet after interaction time ``s.t_int``."""
    return tau_from(s.mass, s.mean_p_z, s.eps_z, s.class_spread, s.t_int)


def cal_t(s: BeamScenario, tau: float) -> tuple[float, float]:
    """Dimensionless (calT, T) = 2 Omega^2 / Delta * (tau, t_int)."""
    if tau < 0.0:
        raise DomainError("tau must be nonnegative")
    rate = 2.0 * s.rabi * s.rabi / s.detuning
    return rate * tau, rate * s.t_int


def dominant_term(s: BeamScenario) -> str:
    """Label of the largest width addend; ties go to the earlier label."""
    terms = tau_estimate(s).terms
    best = 0
    for i in (1, 2):
        if terms[i] > terms[best]:
            best = i
    return TERM_LABELS[best]


# Assumed sodium-like beam: 2 Omega^2 / Delta = 1e10 rad/s, so T = 10 at
# t = 1 ns, with Delta = 20 Omega.
_RABI = 1e11
_DETUNING = 2e12

PRESETS = {
    "cold-beam-sec5": BeamScenario(
        mass=SODIUM_MASS,
        mean_p_z=SODIUM_MASS * 1e3,
        eps_z=1e-11,
        class_spread=1e-3 * SODIUM_MASS * 1e3,
        t_int=1e-9,
        rabi=_RABI,
        detuning=_DETUNING,
    ),
    # Packet-width dominated beam giving T = 10 and calT close to 1.
    "figure2": BeamScenario(
        mass=SODIUM_MASS,
        mean_p_z=SODIUM_MASS * 1e3,
        eps_z=1e-7,
        class_spread=0.0,
        t_int=1e-9,
        rabi=_RABI,
        detuning=_DETUNING,
    ),
}

# Standard three-curve scan: T = 10, epsilon = 10, calT = 0, 1, 10.
FIGURE2 = {"T": 10.0, "epsilon": 10.0, "calT": (0.0, 1.0, 10.0)}


def preset(name: str) -> BeamScenario:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"unknown scenario {name!r}; known: {sorted(PRESETS)}") from None
