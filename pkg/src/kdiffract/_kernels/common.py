"""Constants shared by the numba and numpy kernel paths."""

import math

# Miller recurrence rescaling threshold and factor.
BIG = 1e100
SMALL = 1e-100
# Ascending series is used at or below this argument.
SERIES_MAX = 1.0


def miller_start(top, x):
    """Starting order for backward recurrence covering orders up to ``top``."""
    m = max(int(top), int(x))
    return m + 30 + int(math.sqrt(160.0 * max(m, 1)))
