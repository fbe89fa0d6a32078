"""Loop kernels compiled with numba.

Each function mirrors one in :mod:`kdiffract._kernels.numpy_impl`; the two are
interchangeable and agree to rounding.
"""

import math

import numpy as np
from numba import njit

from .common import BIG, SERIES_MAX, SMALL


@njit(cache=True)
def _series(n, x):
    lead = n * (math.log(x) - math.log(2.0)) - math.lgamma(n + 1.0)
    if lead < -745.0:
        return 0.0
    term = math.exp(lead)
    total = term
    q = -0.25 * x * x
    k = 1
    while True:
        term *= q / (k * (n + k))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
        k += 1
    return total


@njit(cache=True)
def _start(top, x):
    m = max(top, int(x))
    return m + 30 + int(math.sqrt(160.0 * max(m, 1)))


@njit(cache=True)
def bessel_orders(orders, x):
    """J_n(x) for nonnegative integer ``orders`` and nonnegative ``x``.

    Returns an array of shape ``(orders.size, x.size)``.
    """
    nord = orders.size
    out = np.zeros((nord, x.size))
    if nord == 0:
        return out
    top = 0
    for i in range(nord):
        if orders[i] > top:
            top = orders[i]
    buf = np.zeros(top + 1)
    for j in range(x.size):
        xj = x[j]
        if xj == 0.0:
            for i in range(nord):
                out[i, j] = 1.0 if orders[i] == 0 else 0.0
            continue
        if xj <= SERIES_MAX:
            for i in range(nord):
                out[i, j] = _series(orders[i], xj)
            continue
        buf[:] = 0.0
        start = _start(top, xj)
        bkp = 0.0
        bk = 1e-30
        ss = 0.0
        se = 0.0
        for k in range(start, 0, -1):
            if k <= top:
                buf[k] = bk
            ss += bk * bk
            if k % 2 == 0:
                se += bk
            bkm = (2.0 * k / xj) * bk - bkp
            bkp = bk
            bk = bkm
            if abs(bk) > BIG:
                bk *= SMALL
                bkp *= SMALL
                ss *= SMALL * SMALL
                se *= SMALL
                for r in range(k, top + 1):
                    buf[r] *= SMALL
        buf[0] = bk
        ss = 2.0 * ss + bk * bk
        se = 2.0 * se + bk
        norm = 1.0 / math.sqrt(ss)
        if se < 0.0:
            norm = -norm
        for i in range(nord):
            out[i, j] = buf[orders[i]] * norm
    return out


@njit(cache=True)
def pfq_series(u, v, z, rtol, max_terms):
    """Sum a pFq series term by term; returns (sum, terms used, converged)."""
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        ratio = z / (k + 1.0)
        for a in u:
            ratio *= a + k
        for b in v:
            ratio /= b + k
        term *= ratio
        total += term
        if term == 0.0 or abs(term) < rtol * abs(total):
            return total, k + 2, True
    return total, max_terms + 1, False


@njit(cache=True)
def comb_sum(p, eps, n_lo, coef_re, coef_im, half_band, cut):
    """Banded double sum sum_{n,d} C[n, d] b(p - 2n) b(p - 2(n + d)).

    ``coef_*[i, d + half_band]`` holds C for n = n_lo + i and offset d.
    Returns the real and imaginary parts.
    """
    norm = (eps / math.pi) ** 0.25
    nrow = coef_re.shape[0]
    n_hi = n_lo + nrow - 1
    re = np.zeros(p.size)
    im = np.zeros(p.size)
    for j in range(p.size):
        pj = p[j]
        a = max(n_lo, int(math.ceil((pj - cut) / 2.0)))
        b = min(n_hi, int(math.floor((pj + cut) / 2.0)))
        acc_re = 0.0
        acc_im = 0.0
        for n in range(a, b + 1):
            qn = pj - 2.0 * n
            bn = norm * math.exp(-0.5 * eps * qn * qn)
            for d in range(-half_band, half_band + 1):
                m = n + d
                if m < n_lo or m > n_hi:
                    continue
                qm = pj - 2.0 * m
                bb = bn * norm * math.exp(-0.5 * eps * qm * qm)
                acc_re += coef_re[n - n_lo, d + half_band] * bb
                acc_im += coef_im[n - n_lo, d + half_band] * bb
        re[j] = acc_re
        im[j] = acc_im
    return re, im


__all__ = ["bessel_orders", "pfq_series", "comb_sum"]
