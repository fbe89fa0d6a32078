"""Special functions, weighted quadrature and Gamma sampling.

Everything here is a pure function of its inputs. Random draws take an explicit
:class:`numpy.random.Generator`.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special as sc

from . import _kernels
from .errors import (
    ConvergenceDomainError,
    DomainError,
    IntegrationAccuracyError,
    NonConvergenceError,
)

MAX_ORDER = 10_000
PFQ_RTOL = 1e-16
PFQ_MAX_TERMS = 100_000


# --------------------------------------------------------------------------
# Bessel functions of the first kind
# --------------------------------------------------------------------------

def bessel_table(orders, x) -> np.ndarray:
    """Table of J_n(x) with shape ``(len(orders), len(x))``.

    Orders may be negative (J_{-n} = (-1)^n J_n) and arguments may be negative
    (J_n(-x) = (-1)^n J_n(x)). One backward recurrence per argument yields all
    requested orders.
    """
    orders = np.atleast_1d(np.asarray(orders, dtype=np.int64))
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if orders.size and np.abs(orders).max() > MAX_ORDER:
        raise DomainError(f"|order| must not exceed {MAX_ORDER}")
    if not np.all(np.isfinite(x)):
        raise DomainError("Bessel argument must be finite")
    absn = np.abs(orders)
    table = _kernels.bessel_orders(absn, np.ascontiguousarray(np.abs(x)))
    odd = (absn % 2 == 1)
    flip = (odd & (orders < 0))[:, None] ^ (odd[:, None] & (x < 0)[None, :])
    return np.where(flip, -table, table)


def bessel_j(n: int, x: float) -> float:
    """Bessel function of the first kind J_n(x) for integer order ``n``."""
    if not math.isfinite(x):
        raise DomainError("Bessel argument must be finite")
    return float(bessel_table([int(n)], [x])[0, 0])


# --------------------------------------------------------------------------
# log-Gamma
# --------------------------------------------------------------------------

def ln_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not (math.isfinite(x) and x > 0.0):
        raise DomainError(f"ln_gamma needs a finite positive argument, got {x!r}")
    return math.lgamma(x)


# --------------------------------------------------------------------------
# 4F3
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PfqParams:
    """Numerator ``u`` (4 entries), denominator ``v`` (3 entries), argument ``z``."""

    u: tuple
    v: tuple
    z: float

    def __post_init__(self):
        u = tuple(float(a) for a in self.u)
        v = tuple(float(b) for b in self.v)
        if len(u) != 4 or len(v) != 3:
            raise DomainError("4F3 needs 4 numerator and 3 denominator parameters")
        for b in v:
            if b <= 0 and b == math.floor(b):
                raise DomainError(f"denominator parameter {b} is a pole of the series")
        if not all(math.isfinite(a) for a in u + v + (self.z,)):
            raise DomainError("4F3 parameters must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "z", float(self.z))


def pfq_4f3(params: PfqParams) -> float:
    """Sum the 4F3 power series inside its unit disk of convergence.

    Raises :class:`ConvergenceDomainError` for |z| >= 1 and
    :class:`NonConvergenceError` when the term cap is hit.
    """
    if abs(params.z) >= 1.0:
        raise ConvergenceDomainError(
            f"4F3 series needs |z| < 1, got z={params.z}; use quadrature instead"
        )
    total, nterms, ok = _kernels.pfq_series(
        np.array(params.u), np.array(params.v), params.z, PFQ_RTOL, PFQ_MAX_TERMS
    )
    if not ok:
        raise NonConvergenceError(f"4F3 series not converged after {nterms - 1} terms")
    return float(total)


# --------------------------------------------------------------------------
# Adaptive quadrature against s^alpha e^{-s}
# --------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_KRONROD = np.concatenate([_WGK[:-1], _WGK[::-1]])
GK_GAUSS = np.zeros(15)
GK_GAUSS[1:7:2] = _WG[:3]
GK_GAUSS[7] = _WG[3]
GK_GAUSS[9:14:2] = _WG[2::-1]


def _tail_cutoffs(shape, budget, s_max):
    """Integration window [s_min, s_max] for the Gamma(shape) law.

    Probability mass outside is bounded by ``budget`` unless the caller fixed
    ``s_max`` tighter; returns the window and the two tail masses.
    """
    if s_max is None:
        s_max = float(sc.gammainccinv(shape, budget))
        while sc.gammaincc(shape, s_max) > budget:
            s_max *= 1.05
    s_max = float(s_max)
    hi_mass = float(sc.gammaincc(shape, s_max))
    s_min = 0.0
    if shape > 2.0:
        s_min = float(sc.gammaincinv(shape, budget))
        while s_min > 0 and sc.gammainc(shape, s_min) > budget:
            s_min *= 0.95
        s_min = min(s_min, s_max)
    lo_mass = float(sc.gammainc(shape, s_min)) if s_min > 0 else 0.0
    return s_min, s_max, lo_mass, hi_mass


def integrate_weighted(
    f: Callable[[np.ndarray], np.ndarray],
    alpha: float,
    s_max: float | None = None,
    tol: float = 1e-10,
    *,
    normalized: bool = False,
    f_sup: float = 1.0,
    initial_panels: int = 16,
    max_panels: int = 20_000,
    full_output: bool = False,
):
    """Integral of s**alpha * exp(-s) * f(s) over (0, inf).

    Parameters
    ----------
    f : callable
        Vectorized integrand factor. Called with a 1-D array of nodes; returns
        an array whose last axis runs over those nodes. Leading axes are
        integrated componentwise.
    alpha : float
        Weight exponent, > -1.
    s_max : float, optional
        Upper end of the finite window. Chosen from the incomplete-Gamma tail
        bound ``f_sup * Gamma(1+alpha, s_max) < tol/10`` when omitted.
    tol : float
        Absolute tolerance on the returned value.
    normalized : bool
        Divide by Gamma(1+alpha), i.e. average f over the Gamma(1+alpha) law.
        Large ``alpha`` only works in this mode.
    f_sup : float
        Bound on sup|f| used for the tail estimates.
    full_output : bool
        Also return the error estimate.
    """
    if not alpha > -1.0:
        raise DomainError("alpha must exceed -1")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    shape = 1.0 + alpha
    lg = math.lgamma(shape)
    scale = 1.0 if normalized else math.exp(lg)
    tol_n = tol / scale

    s_min, s_hi, lo_mass, hi_mass = _tail_cutoffs(shape, tol_n / (10.0 * f_sup), s_max)
    tail = f_sup * (lo_mass + hi_mass)

    if alpha < 0.0:
        # s = sigma**(1/shape) absorbs the endpoint singularity.
        inv = 1.0 / shape
        log_norm = lg + math.log(shape)
        lo, hi = s_min ** shape, s_hi ** shape

        def g(t):
            s = t ** inv
            return np.exp(-s - log_norm) * f(s)
    else:
        lo, hi = s_min, s_hi

        def g(t):
            return np.exp(alpha * np.log(t) - t - lg) * f(t)

    def panels(a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        nodes = (mid[:, None] + half[:, None] * GK_NODES[None, :]).ravel()
        vals = np.asarray(g(nodes), dtype=float)
        vals = vals.reshape(vals.shape[:-1] + (a.size, 15))
        k = (vals @ GK_KRONROD) * half
        gg = (vals @ GK_GAUSS) * half
        err = np.abs(k - gg).reshape(-1, a.size).max(axis=0) if k.ndim > 1 else np.abs(k - gg)
        return k, err

    edges = np.linspace(lo, hi, initial_panels + 1)
    a, b = edges[:-1], edges[1:]
    k, err = panels(a, b)
    store = {}
    heap = []
    for i in range(a.size):
        store[i] = (a[i], b[i], k[..., i], err[i])
        heapq.heappush(heap, (-err[i], i))
    next_id = a.size
    total_err = float(err.sum())

    since_exact = 0
    while True:
        if total_err + tail <= tol_n and since_exact == 0:
            break
        if total_err + tail <= tol_n or since_exact >= 64:
            # The running sum loses digits to cancellation; resync it exactly.
            total_err = math.fsum(item[3] for item in store.values())
            since_exact = 0
            if total_err + tail <= tol_n:
                break
        since_exact += 1
        if len(store) >= max_panels:
            achieved = (total_err + tail) * scale
            raise IntegrationAccuracyError(
                f"tolerance {tol:g} not reached with {max_panels} panels "
                f"(error estimate {achieved:.3g})",
                achieved,
            )
        _, pid = heapq.heappop(heap)
        pa, pb, _, perr = store.pop(pid)
        pm = 0.5 * (pa + pb)
        kk, ee = panels(np.array([pa, pm]), np.array([pm, pb]))
        for j, (qa, qb) in enumerate(((pa, pm), (pm, pb))):
            store[next_id] = (qa, qb, kk[..., j], ee[j])
            heapq.heappush(heap, (-ee[j], next_id))
            next_id += 1
        total_err += float(ee.sum()) - perr

    ordered = sorted(store.values(), key=lambda item: item[0])
    value = math.fsum(item[2] for item in ordered) if k.ndim == 1 else np.sum(
        [item[2] for item in ordered], axis=0
    )
    total_err = math.fsum(item[3] for item in ordered)
    value = value * scale
    achieved = (total_err + tail) * scale
    if full_output:
        return value, achieved
    return value


# --------------------------------------------------------------------------
# Gamma variates
# --------------------------------------------------------------------------

def gamma_sample(rng: np.random.Generator, shape: float, scale: float) -> float:
    """One draw from the Gamma law with the given shape and scale."""
    return float(gamma_samples(rng, shape, scale, 1)[0])


def gamma_samples(rng: np.random.Generator, shape: float, scale: float, size: int) -> np.ndarray:
    """``size`` draws from the Gamma law; shape < 1 is supported."""
    if not (shape > 0.0 and scale > 0.0):
        raise DomainError("Gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size)


def substream(seed: int, key: Sequence[int]) -> np.random.Generator:
    """Independent generator for ``key`` derived from ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))
