"""Vectorized numpy kernels; the fallback when numba is disabled."""

import math

import numpy as np

from .common import BIG, SERIES_MAX, SMALL, miller_start


def _series_rows(orders, x):
    out = np.zeros((orders.size, x.size))
    if x.size == 0:
        return out
    q = -0.25 * x * x
    logh = np.log(x) - math.log(2.0)
    for i, n in enumerate(orders):
        lead = n * logh - math.lgamma(n + 1.0)
        term = np.where(lead < -745.0, 0.0, np.exp(np.maximum(lead, -745.0)))
        total = term.copy()
        k = 1
        while True:
            term = term * q / (k * (n + k))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
            k += 1
        out[i] = total
    return out


def bessel_orders(orders, x):
    """J_n(x) for nonnegative integer ``orders`` and nonnegative ``x``.

    Backward recurrence runs for all columns at once from a common start.
    """
    orders = np.asarray(orders, dtype=np.int64)
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((orders.size, x.size))
    if orders.size == 0 or x.size == 0:
        return out
    top = int(orders.max())

    zero = x == 0.0
    out[:, zero] = (orders == 0)[:, None].astype(float)
    small = (~zero) & (x <= SERIES_MAX)
    if small.any():
        out[:, small] = _series_rows(orders, x[small])
    big = x > SERIES_MAX
    if not big.any():
        return out

    xb = x[big]
    rows_at = {}
    for i, n in enumerate(orders):
        rows_at.setdefault(int(n), []).append(i)
    vals = np.zeros((orders.size, xb.size))
    start = miller_start(top, xb.max())
    two_over_x = 2.0 / xb
    bkp = np.zeros_like(xb)
    bk = np.full_like(xb, 1e-30)
    ss = np.zeros_like(xb)
    se = np.zeros_like(xb)
    for k in range(start, 0, -1):
        if k in rows_at:
            vals[rows_at[k]] = bk
        ss += bk * bk
        if k % 2 == 0:
            se += bk
        bkm = k * two_over_x * bk - bkp
        bkp = bk
        bk = bkm
        over = np.abs(bk) > BIG
        if over.any():
            bk[over] *= SMALL
            bkp[over] *= SMALL
            ss[over] *= SMALL * SMALL
            se[over] *= SMALL
            vals[:, over] *= SMALL
    if 0 in rows_at:
        vals[rows_at[0]] = bk
    ss = 2.0 * ss + bk * bk
    se = 2.0 * se + bk
    norm = np.copysign(1.0 / np.sqrt(ss), se)
    out[:, big] = vals * norm
    return out


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


def comb_sum(p, eps, n_lo, coef_re, coef_im, half_band, cut):
    """Banded double sum sum_{n,d} C[n, d] b(p - 2n) b(p - 2(n + d))."""
    norm = (eps / math.pi) ** 0.25
    nrow = coef_re.shape[0]
    n_hi = n_lo + nrow - 1
    re = np.zeros(p.size)
    im = np.zeros(p.size)
    for i in range(nrow):
        n = n_lo + i
        lo = np.searchsorted(p, 2.0 * n - cut, side="left")
        hi = np.searchsorted(p, 2.0 * n + cut, side="right")
        if lo >= hi:
            continue
        ps = p[lo:hi]
        bn = norm * np.exp(-0.5 * eps * (ps - 2.0 * n) ** 2)
        for d in range(-half_band, half_band + 1):
            m = n + d
            if m < n_lo or m > n_hi:
                continue
            cr = coef_re[i, d + half_band]
            ci = coef_im[i, d + half_band]
            if cr == 0.0 and ci == 0.0:
                continue
            bb = bn * norm * np.exp(-0.5 * eps * (ps - 2.0 * m) ** 2)
            re[lo:hi] += cr * bb
            im[lo:hi] += ci * bb
    return re, im
