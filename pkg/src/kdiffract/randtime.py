"""Random-evolution-time dynamics for finite-level systems.

The actual evolution time t' is Gamma distributed around the nominal time t,
with variance tau * t. Averaging the unitary evolution over that law gives a
map that is diagonal in the energy basis:

    rho_nm(t) = exp(-(gamma_nm + i nu_nm) t) rho_nm(0),

with gamma = ln(1 + w^2 tau^2) / (2 tau) and nu = arctan(w tau) / tau for the
Bohr frequency w = w_n - w_m. Populations are untouched; coherences decay and
their oscillation frequency is pulled below w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, IntegrationAccuracyError, SingularPointError
from .specfun import ln_gamma

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = 1e-10
ODE_RTOL = 1e-13
ODE_ATOL = 1e-15


@dataclass(frozen=True)
class GammaTimeLaw:
    """Gamma law of the evolution time, parametrized by the scaling time ``tau``."""

    tau: float

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise DomainError(f"tau must be positive and finite, got {self.tau!r}")


@dataclass(frozen=True)
class EnergySpectrum:
    """Energy levels stored as angular frequencies E_n / hbar."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.array(self.levels, dtype=float).ravel()
        if lv.size < 1 or not np.all(np.isfinite(lv)):
            raise DomainError("spectrum needs at least one finite level")
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)

    @property
    def dim(self) -> int:
        return self.levels.size

    def bohr_frequencies(self) -> np.ndarray:
        """Matrix of w_n - w_m."""
        return self.levels[:, None] - self.levels[None, :]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite matrix (validated, read-only)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise DomainError("density matrix must be square")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise DomainError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise DomainError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -POSITIVITY_TOL:
            raise DomainError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class DecayFactors:
    gamma: float
    nu: float


def gamma_pdf(law: GammaTimeLaw, t: float, t_prime: float) -> float:
    """Density of the actual evolution time ``t_prime`` given nominal time ``t``.

    At ``t_prime = 0`` with t/tau < 1 the density diverges (integrably) and
    :class:`SingularPointError` is raised.
    """
    if not t > 0.0:
        raise DomainError("nominal time t must be positive")
    if t_prime < 0.0:
        raise DomainError("t_prime must be nonnegative")
    tau = law.tau
    shape = t / tau
    if t_prime == 0.0:
        if shape > 1.0:
            return 0.0
        if shape == 1.0:
            return 1.0 / tau
        raise SingularPointError("density is infinite at t' = 0 when t/tau < 1")
    x = t_prime / tau
    return math.exp((shape - 1.0) * math.log(x) - x - ln_gamma(shape)) / tau


def _shift(omega, wt):
    """arctan(wt) / tau written as omega * arctan(wt) / wt, so tiny wt keeps its sign."""
    small = np.abs(wt) < 1e-8
    safe = np.where(small, 1.0, wt)
    return omega * np.where(small, 1.0 - wt * wt / 3.0, np.arctan(safe) / safe)


def decay_factors(omega: float, law: GammaTimeLaw) -> DecayFactors:
    """Decay rate and shifted frequency of a coherence with Bohr frequency ``omega``."""
    tau = law.tau
    wt = omega * tau
    return DecayFactors(gamma=math.log1p(wt * wt) / (2.0 * tau), nu=float(_shift(omega, wt)))


def _rates(spectrum: EnergySpectrum, law: GammaTimeLaw) -> np.ndarray:
    """gamma_nm + i nu_nm as a matrix."""
    w = spectrum.bohr_frequencies()
    wt = w * law.tau
    return np.log1p(wt * wt) / (2.0 * law.tau) + 1j * _shift(w, wt)


def _second_order_rates(spectrum: EnergySpectrum, law: GammaTimeLaw) -> np.ndarray:
    w = spectrum.bohr_frequencies()
    return 0.5 * w * w * law.tau + 1j * w


def _check_dims(rho0: DensityMatrix, spectrum: EnergySpectrum):
    if rho0.dim != spectrum.dim:
        raise DomainError(
            f"density matrix dimension {rho0.dim} does not match spectrum size {spectrum.dim}"
        )


def average_density(
    rho0: DensityMatrix, spectrum: EnergySpectrum, t: float, law: GammaTimeLaw
) -> DensityMatrix:
    """Gamma-averaged state at nominal time ``t`` (``rho0`` in the energy basis)."""
    _check_dims(rho0, spectrum)
    if t < 0.0:
        raise DomainError("t must be nonnegative")
    if t == 0.0:
        return rho0
    factor = np.exp(-_rates(spectrum, law) * t)
    np.fill_diagonal(factor, 1.0)
    return DensityMatrix(factor * rho0.entries)


def _integrate(rates, rho0, t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise DomainError("t_grid must be a nonempty 1-D sequence")
    if t_grid[0] < 0.0 or np.any(np.diff(t_grid) <= 0.0):
        raise DomainError("t_grid must be nonnegative and strictly increasing")
    y0 = rho0.entries.ravel().copy()
    r = rates.ravel()
    states = []
    if t_grid[-1] == 0.0:
        return [rho0]
    sol = solve_ivp(
        lambda _t, y: -r * y,
        (0.0, float(t_grid[-1])),
        y0,
        method="DOP853",
        t_eval=t_grid,
        rtol=ODE_RTOL,
        atol=ODE_ATOL,
    )
    if not sol.success:
        raise IntegrationAccuracyError(f"master equation integration failed: {sol.message}", math.nan)
    n = rho0.dim
    for k in range(t_grid.size):
        m = sol.y[:, k].reshape(n, n)
        # Round-off drift only; the generator is exactly Hermiticity preserving.
        states.append(DensityMatrix(0.5 * (m + m.conj().T)))
    return states


def evolve_exact_log(
    rho0: DensityMatrix, spectrum: EnergySpectrum, law: GammaTimeLaw, t_grid: Sequence[float]
) -> list[DensityMatrix]:
    """Integrate d rho/dt = -(1/tau) ln(1 + i L tau) rho on ``t_grid``.

    The Liouvillian is diagonal in the energy basis, so each entry obeys a
    scalar linear ODE, stepped with an adaptive 8th-order Runge-Kutta scheme.
    """
    _check_dims(rho0, spectrum)
    return _integrate(_rates(spectrum, law), rho0, t_grid)


def evolve_second_order(
    rho0: DensityMatrix, spectrum: EnergySpectrum, law: GammaTimeLaw, t_grid: Sequence[float]
) -> list[DensityMatrix]:
    """Integrate the double-commutator dephasing equation on ``t_grid``.

    Entry (n, m) oscillates at w_nm and decays at w_nm^2 tau / 2.
    """
    _check_dims(rho0, spectrum)
    return _integrate(_second_order_rates(spectrum, law), rho0, t_grid)


def check_semigroup(spectrum: EnergySpectrum, law: GammaTimeLaw, t1: float, t2: float) -> float:
    """Largest |F(t1 + t2) - F(t1) F(t2)| over entries of the factor matrix F."""
    if t1 < 0.0 or t2 < 0.0:
        raise DomainError("times must be nonnegative")
    r = _rates(spectrum, law)
    f12 = np.exp(-r * (t1 + t2))
    return float(np.max(np.abs(f12 - np.exp(-r * t1) * np.exp(-r * t2))))


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random state from a Ginibre matrix G via G G^dag / tr."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return DensityMatrix(0.5 * (m + m.conj().T))
