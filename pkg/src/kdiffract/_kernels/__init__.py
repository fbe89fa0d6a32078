"""Hot numerical kernels with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``KDIFFRACT_DISABLE_NUMBA`` is
unset (or ``0``). Both paths expose the same functions:

``bessel_orders(orders, x)``
    J_n(x) table for nonnegative orders and arguments.
``pfq_series(u, v, z, rtol, max_terms)``
    Plain term-by-term generalized hypergeometric sum.
``comb_sum(p, eps, n_lo, coef_re, coef_im, half_band, cut)``
    Banded Gaussian comb double sum.
"""

import importlib
import os

from . import numpy_impl


def _numba_requested():
    flag = os.environ.get("KDIFFRACT_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


def _load_numba():
    if not _numba_requested():
        return None
    try:
        return importlib.import_module(".numba_impl", __name__)
    except ImportError:  # pragma: no cover - numba is a declared dependency
        return None


numba_impl = _load_numba()

BACKEND = "numba" if numba_impl is not None else "numpy"
_impl = numba_impl if numba_impl is not None else numpy_impl

bessel_orders = _impl.bessel_orders
pfq_series = _impl.pfq_series
comb_sum = _impl.comb_sum

__all__ = ["BACKEND", "bessel_orders", "pfq_series", "comb_sum", "numpy_impl", "numba_impl"]
