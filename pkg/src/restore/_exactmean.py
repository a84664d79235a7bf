"""Correctly rounded running means for the in-place scan filters.

A naive ``(a + b + c) / 3`` does not return ``a`` for a constant window in
IEEE doubles (e.g. a = 13.7), so constant images would drift by an ulp per
visit. The sum is kept exactly as an unevaluated pair (hi, lo) and divided
with a residual correction; for windows whose naive sum is exact the result
is identical to the naive formula.
"""
import numba

_SPLITTER = 134217729.0  # 2**27 + 1


@numba.njit(inline="always")
def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@numba.njit(inline="always")
def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


@numba.njit(inline="always")
def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@numba.njit(inline="always")
def divide(hi, lo, k):
    """(hi + lo) / k rounded once."""
    hi, lo = two_sum(hi, lo)
    q = hi / k
    p, pe = two_prod(q, k)
    r = ((hi - p) - pe) + lo
    return q + r / k
