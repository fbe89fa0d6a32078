"""Momentum distributions for atoms diffracted by a standing light wave.

In the Raman-Nath regime the ground-state momentum amplitude after a
dimensionless interaction time T is a comb of copies of the initial Gaussian,

    b(p, T) = sum_n i^n J_n(T/4) b0(p - 2n),

so the distribution is a double sum over comb orders with weights
J_n(T/4) J_m(T/4). A Gamma-distributed interaction time replaces that weight
by its average

    I_nm(T) = E[J_n(T'/4) J_m(T'/4)],  T' ~ Gamma(shape=T/calT, scale=calT),

which is computed three ways here: adaptive quadrature (always valid), a
4F3 closed form (calT < 2) and Monte Carlo (statistical cross-check).

Momenta are in units of hbar k; ``epsilon`` is the squared transverse position
spread in units of 1/k^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy import special as sc

from . import _kernels
from .errors import ConvergenceDomainError, DomainError
from .specfun import (
    PfqParams,
    bessel_table,
    gamma_samples,
    integrate_weighted,
    ln_gamma,
    pfq_4f3,
    substream,
)

METHODS = ("quadrature", "closed_form", "monte_carlo")
DEFAULT_TOL = 1e-10
DEFAULT_STEP = 0.01
MIN_MC_SAMPLES = 10_000
# Probability mass of the Gamma law allowed above the truncation order.
TRUNCATION_MASS = 1e-15
# Comb products below this size are dropped.
NEGLIGIBLE = 1e-18
IMAG_TOL_IDEAL = 1e-12
IMAG_TOL_AVERAGED = 1e-10


def default_n_max(T: float, calT: float = 0.0) -> int:
    """Comb truncation order.

    Bessel weights die off super-exponentially past order x + 20 for argument
    x. With a random time the argument reaches T'/4 for T' far in the Gamma
    tail, so x is taken at the upper ``TRUNCATION_MASS`` quantile of T'.
    """
    t_hi = T
    if calT > 0.0 and T > 0.0:
        t_hi = max(T, calT * float(sc.gammainccinv(T / calT, TRUNCATION_MASS)))
    return int(math.ceil(t_hi / 4.0)) + 20


@dataclass(frozen=True)
class DiffractionParams:
    """Interaction time ``T``, decoherence scale ``calT``, spread ``epsilon``, order ``n_max``."""

    T: float
    epsilon: float
    calT: float = 0.0
    n_max: int | None = None

    def __post_init__(self):
        if not (math.isfinite(self.T) and self.T >= 0.0):
            raise DomainError("T must be finite and nonnegative")
        if not (math.isfinite(self.calT) and self.calT >= 0.0):
            raise DomainError("calT must be finite and nonnegative")
        if not (math.isfinite(self.epsilon) and self.epsilon > 0.0):
            raise DomainError("epsilon must be positive")
        if self.epsilon <= 1.0:
            warnings.warn("peaks unresolved (requires epsilon > 1)", stacklevel=3)
        floor = int(math.ceil(self.T / 4.0)) + 20
        if self.n_max is None:
            object.__setattr__(self, "n_max", default_n_max(self.T, self.calT))
        elif int(self.n_max) < 1:
            raise DomainError("n_max must be a positive integer")
        else:
            object.__setattr__(self, "n_max", int(self.n_max))
            if self.n_max < floor:
                warnings.warn(
                    f"n_max={self.n_max} below ceil(T/4)+20={floor}; comb amplitudes not converged",
                    stacklevel=3,
                )

    def with_calT(self, calT: float, n_max: int | None = None) -> "DiffractionParams":
        return DiffractionParams(T=self.T, epsilon=self.epsilon, calT=calT, n_max=n_max)


@dataclass(frozen=True)
class MomentumGrid:
    """Strictly increasing momentum sample points (units of hbar k)."""

    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float).ravel()
        if p.size < 1 or not np.all(np.isfinite(p)):
            raise DomainError("grid needs finite points")
        if np.any(np.diff(p) <= 0.0):
            raise DomainError("grid points must be strictly increasing")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    @classmethod
    def symmetric(cls, half_width: float, step: float = DEFAULT_STEP) -> "MomentumGrid":
        """Grid k*step for |k*step| <= half_width; exactly symmetric about 0."""
        if not (half_width > 0.0 and step > 0.0):
            raise DomainError("half_width and step must be positive")
        k = int(math.floor(half_width / step + 1e-9))
        return cls(step * np.arange(-k, k + 1))

    @classmethod
    def for_order(cls, n_max: int, step: float = DEFAULT_STEP) -> "MomentumGrid":
        """Default grid spanning +-(2 n_max + 6)."""
        return cls.symmetric(2.0 * n_max + 6.0, step)

    def __len__(self):
        return self.points.size


@dataclass(frozen=True)
class MomentumDistribution:
    grid: MomentumGrid
    values: np.ndarray
    error_estimate: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != len(self.grid):
            raise DomainError("values and grid differ in length")
        if v.size and v.min() < -1e-12:
            raise AssertionError(f"distribution has negative value {v.min():.3g}")
        v = np.clip(v, 0.0, None)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        """Trapezoidal integral over the grid."""
        return float(np.trapezoid(self.values, self.grid.points))


@dataclass(frozen=True)
class InmValue:
    n: int
    m: int
    value: float
    method: str
    error_estimate: float = field(default=0.0)


# --------------------------------------------------------------------------
# ideal comb
# --------------------------------------------------------------------------

def initial_amplitude(p, epsilon: float):
    """Unit-norm Gaussian momentum amplitude (epsilon/pi)^(1/4) exp(-epsilon p^2 / 2)."""
    if not epsilon > 0.0:
        raise DomainError("epsilon must be positive")
    p = np.asarray(p, dtype=float)
    out = (epsilon / math.pi) ** 0.25 * np.exp(-0.5 * epsilon * p * p)
    return float(out) if out.ndim == 0 else out


def _orders(n_max):
    return np.arange(-n_max, n_max + 1)


def ideal_amplitude(p, params: DiffractionParams):
    """Momentum amplitude after interaction time T, global phase dropped."""
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    n = _orders(params.n_max)
    jn = bessel_table(n, [params.T / 4.0])[:, 0]
    phase = 1j ** (n % 4)
    amp = np.zeros(p_arr.size, dtype=complex)
    for k in range(n.size):
        if jn[k] != 0.0:
            amp += phase[k] * jn[k] * initial_amplitude(p_arr - 2.0 * n[k], params.epsilon)
    return complex(amp[0]) if np.ndim(p) == 0 else amp


def band_half_width(epsilon: float) -> int:
    """Largest |n - m| whose comb overlap can exceed ``NEGLIGIBLE``.

    b0(p - 2n) b0(p - 2m) <= sqrt(epsilon/pi) exp(-epsilon (n - m)^2).
    """
    lead = 0.5 * math.log(epsilon / math.pi) - math.log(NEGLIGIBLE)
    return max(1, int(math.ceil(math.sqrt(max(lead, 0.0) / epsilon))))


def _cut(epsilon: float) -> float:
    lead = 0.25 * math.log(epsilon / math.pi) - math.log(NEGLIGIBLE)
    return math.sqrt(2.0 * max(lead, 0.0) / epsilon)


def _needed_pairs(n_max: int, half_band: int) -> list[tuple[int, int]]:
    """Canonical (|n|, |m|) pairs, |n| <= |m|, reachable within the band."""
    pairs = set()
    for n in range(-n_max, n_max + 1):
        for d in range(-half_band, half_band + 1):
            m = n + d
            if -n_max <= m <= n_max:
                a, b = sorted((abs(n), abs(m)))
                pairs.add((a, b))
    return sorted(pairs)


def _sign(n: int, m: int) -> int:
    return -1 if ((abs(n) - n + abs(m) - m) // 2) % 2 else 1


def _comb(grid: MomentumGrid, epsilon: float, n_max: int, half_band: int, weight):
    """Evaluate sum_{n,m} i^(n-m) weight(n, m) b0(p-2n) b0(p-2m) on the band."""
    width = 2 * half_band + 1
    coef_re = np.zeros((2 * n_max + 1, width))
    coef_im = np.zeros((2 * n_max + 1, width))
    # i^(n - m) = i^(-d)
    phase = {0: (1.0, 0.0), 1: (0.0, -1.0), 2: (-1.0, 0.0), 3: (0.0, 1.0)}
    for i, n in enumerate(range(-n_max, n_max + 1)):
        for d in range(-half_band, half_band + 1):
            m = n + d
            if -n_max <= m <= n_max:
                w = weight(n, m)
                re, im = phase[d % 4]
                coef_re[i, d + half_band] = re * w
                coef_im[i, d + half_band] = im * w
    return _kernels.comb_sum(
        np.ascontiguousarray(grid.points), float(epsilon), -n_max, coef_re, coef_im,
        half_band, _cut(epsilon),
    )


def _check_imag(imag, tol, what):
    worst = float(np.max(np.abs(imag))) if imag.size else 0.0
    if worst >= tol:
        raise AssertionError(f"{what}: imaginary residue {worst:.3g} exceeds {tol:g}")


def ideal_distribution(grid: MomentumGrid, params: DiffractionParams) -> MomentumDistribution:
    """Ideal comb distribution |b(p, T)|^2 from the double sum over orders."""
    n_max = params.n_max
    n = _orders(n_max)
    jn = dict(zip(n.tolist(), bessel_table(n, [params.T / 4.0])[:, 0]))
    re, im = _comb(grid, params.epsilon, n_max, band_half_width(params.epsilon),
                   lambda a, b: jn[a] * jn[b])
    _check_imag(im, IMAG_TOL_IDEAL, "ideal distribution")
    return MomentumDistribution(grid, re)


# --------------------------------------------------------------------------
# I_nm by three methods
# --------------------------------------------------------------------------

def _check_times(T, calT):
    if not (T > 0.0 and calT > 0.0):
        raise DomainError("I_nm needs T > 0 and calT > 0")


def inm_quadrature_table(
    pairs: Iterable[tuple[int, int]], T: float, calT: float, tol: float = DEFAULT_TOL
) -> dict[tuple[int, int], InmValue]:
    """Quadrature values for canonical pairs 0 <= a <= b sharing one adaptive mesh."""
    _check_times(T, calT)
    pairs = list(pairs)
    if not pairs:
        return {}
    a_idx = np.array([a for a, _ in pairs])
    b_idx = np.array([b for _, b in pairs])
    orders = np.arange(int(max(b_idx.max(), a_idx.max())) + 1)
    arg_scale = calT / 4.0

    def f(s):
        j = bessel_table(orders, s * arg_scale)
        return j[a_idx] * j[b_idx]

    vals, err = integrate_weighted(f, T / calT - 1.0, tol=tol, normalized=True, full_output=True)
    vals = np.atleast_1d(vals)
    return {
        (a, b): InmValue(a, b, float(v), "quadrature", float(err))
        for (a, b), v in zip(pairs, vals)
    }


def inm_quadrature(n: int, m: int, T: float, calT: float, tol: float = DEFAULT_TOL) -> InmValue:
    """I_nm(T) by adaptive quadrature over the Gamma law of T'."""
    a, b = sorted((abs(n), abs(m)))
    v = inm_quadrature_table([(a, b)], T, calT, tol)[(a, b)]
    return InmValue(n, m, _sign(n, m) * v.value, "quadrature", v.error_estimate)


def closed_form_parameters(n: int, m: int, T: float, calT: float) -> tuple[float, PfqParams]:
    """Log prefactor and 4F3 parameters of the series form of I_{|n|,|m|}.

    Expanding J_a J_b in powers of its argument and integrating term by term
    against the Gamma law gives

        I_ab = calT^(a+b) Gamma(a+b+r) / (2^(3(a+b)) a! b! Gamma(r))
               * 4F3(u; v; -calT^2/4),   r = T/calT,

    u = ((a+b+1)/2, (a+b+2)/2, (a+b+r)/2, (a+b+r+1)/2),
    v = (a+1, b+1, a+b+1).
    """
    _check_times(T, calT)
    a, b = abs(n), abs(m)
    s = a + b
    r = T / calT
    log_pref = (
        s * math.log(calT) + ln_gamma(s + r) - 3 * s * math.log(2.0)
        - ln_gamma(1.0 + a) - ln_gamma(1.0 + b) - ln_gamma(r)
    )
    params = PfqParams(
        u=(0.5 + s / 2, 1.0 + s / 2, s / 2 + r / 2, 0.5 + s / 2 + r / 2),
        v=(1.0 + a, 1.0 + b, 1.0 + s),
        z=-calT * calT / 4.0,
    )
    return log_pref, params


def inm_closed_form(n: int, m: int, T: float, calT: float) -> InmValue:
    """I_nm(T) from the 4F3 series; needs calT < 2."""
    _check_times(T, calT)
    if calT >= 2.0:
        raise ConvergenceDomainError(
            f"closed form needs calT < 2 (4F3 argument inside the unit disk), got {calT}; "
            "use quadrature"
        )
    log_pref, params = closed_form_parameters(n, m, T, calT)
    pref = math.exp(log_pref)
    value = pref * pfq_4f3(params)
    # Rounding bound: all terms are summed with |z| in place of z.
    absolute = pref * pfq_4f3(PfqParams(params.u, params.v, abs(params.z)))
    return InmValue(n, m, _sign(n, m) * value, "closed_form", 64 * np.finfo(float).eps * absolute)


def inm_monte_carlo(
    n: int, m: int, T: float, calT: float, samples: int, rng: np.random.Generator
) -> InmValue:
    """I_nm(T) as a sample mean of J_n(T'/4) J_m(T'/4) over Gamma draws of T'."""
    _check_times(T, calT)
    if samples < MIN_MC_SAMPLES:
        raise DomainError(f"Monte Carlo needs at least {MIN_MC_SAMPLES} samples")
    a, b = abs(n), abs(m)
    t_prime = gamma_samples(rng, T / calT, calT, int(samples))
    j = bessel_table([a, b], t_prime / 4.0)
    prod = j[0] * j[1]
    mean = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(prod.size))
    return InmValue(n, m, _sign(n, m) * mean, "monte_carlo", stderr)


def inm_monte_carlo_seeded(
    n: int, m: int, T: float, calT: float, samples: int, seed: int
) -> InmValue:
    """Monte Carlo on the substream of ``seed`` keyed by the canonical (|n|, |m|) pair.

    Keying by the canonical pair makes the estimate exactly symmetric in n, m
    and exactly obey the sign relation for negative orders.
    """
    a, b = sorted((abs(n), abs(m)))
    v = inm_monte_carlo(a, b, T, calT, samples, substream(seed, (a, b)))
    return InmValue(n, m, _sign(n, m) * v.value, "monte_carlo", v.error_estimate)


def inm_table(
    pairs: Iterable[tuple[int, int]],
    T: float,
    calT: float,
    method: str = "quadrature",
    *,
    tol: float = DEFAULT_TOL,
    samples: int = 100_000,
    seed: int | None = None,
) -> dict[tuple[int, int], InmValue]:
    """Canonical-pair table of I values by the chosen method."""
    pairs = list(pairs)
    if method == "quadrature":
        return inm_quadrature_table(pairs, T, calT, tol)
    if method == "closed_form":
        return {(a, b): inm_closed_form(a, b, T, calT) for a, b in pairs}
    if method == "monte_carlo":
        if seed is None:
            raise DomainError("Monte Carlo needs a seed")
        return {(a, b): inm_monte_carlo_seeded(a, b, T, calT, samples, seed) for a, b in pairs}
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")


# --------------------------------------------------------------------------
# averaged distribution
# --------------------------------------------------------------------------

def averaged_distribution(
    grid: MomentumGrid,
    params: DiffractionParams,
    method: str = "quadrature",
    *,
    tol: float = DEFAULT_TOL,
    samples: int = 100_000,
    seed: int | None = None,
) -> MomentumDistribution:
    """Distribution averaged over the Gamma law of the interaction time.

    ``calT = 0`` is the ideal comb. Monte Carlo tables are not exactly
    positive semidefinite, so that method clips small negative values.
    Only pairs with |n - m| inside the
    overlap band are evaluated, and I_nm = I_mn halves the rest.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    if params.calT == 0.0 or params.T == 0.0:
        return ideal_distribution(grid, params)
    if method == "closed_form" and params.calT >= 2.0:
        raise ConvergenceDomainError(
            f"closed form needs calT < 2, got {params.calT}; use quadrature"
        )
    half_band = band_half_width(params.epsilon)
    pairs = _needed_pairs(params.n_max, half_band)
    table = inm_table(pairs, params.T, params.calT, method, tol=tol, samples=samples, seed=seed)

    def weight(n, m):
        a, b = sorted((abs(n), abs(m)))
        return _sign(n, m) * table[(a, b)].value

    re, im = _comb(grid, params.epsilon, params.n_max, half_band, weight)
    _check_imag(im, IMAG_TOL_AVERAGED, "averaged distribution")
    if method != "monte_carlo" and re.size and re.min() < -1e-10:
        raise AssertionError(f"averaged distribution negative: {re.min():.3g}")
    err = max(v.error_estimate for v in table.values())
    peak = math.sqrt(params.epsilon / math.pi) * (2 * half_band + 1)
    return MomentumDistribution(grid, np.clip(re, 0.0, None), err * peak)
