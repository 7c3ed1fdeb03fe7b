"""Signed logarithmic and scaled-float scalars.

Two overflow-proof scalar representations are provided:

* signed log (sign, log|x|) — the interchange format for results, with
  products as additions of log-magnitudes;
* scaled float (sign, mantissa, exponent) with value sign * m * 2^e and
  m in [0.5, 1) — used inside the recursion, because a log-magnitude of
  size ~30 carries only ~ulp(30) of coefficient precision while a scaled
  mantissa keeps full machine precision through arbitrarily long products.

Sums of mixed-sign terms rescale by the largest magnitude and compensate
the linear accumulation (Kahan), preserving the caller's term order so
results are deterministic.
"""

import math

import numpy as np

LOG_ZERO = -math.inf
LDBL = np.longdouble
_LN2 = np.log(LDBL(2.0))


def slog_from_float(x):
    if x == 0.0:
        return (0, LOG_ZERO)
    return (1 if x > 0 else -1, math.log(abs(x)))


def slog_to_float(s):
    """Convert back to an ordinary float; extended-precision log-magnitudes
    are exponentiated at their native precision before rounding."""
    sign, logmag = s
    if sign == 0:
        return 0.0
    return float(sign * np.exp(logmag))


def slog_mul(a, b):
    if a[0] == 0 or b[0] == 0:
        return (0, LOG_ZERO)
    return (a[0] * b[0], a[1] + b[1])


def slog_div(a, b):
    if b[0] == 0:
        raise ZeroDivisionError("signed-log division by zero")
    if a[0] == 0:
        return (0, LOG_ZERO)
    return (a[0] * b[0], a[1] - b[1])


def slog_pow_int(a, n):
    if a[0] == 0:
        return (1, 0.0) if n == 0 else (0, LOG_ZERO)
    sign = 1 if (a[0] > 0 or n % 2 == 0) else -1
    return (sign, n * a[1])


def signed_log_sum(terms):
    """Sum an iterable of signed-log values, returned as a signed-log value.

    The accumulation is done in the linear domain after factoring out the
    largest magnitude, with Kahan compensation; the order of `terms` is
    preserved so results are deterministic.
    """
    terms = [t for t in terms if t[0] != 0]
    if not terms:
        return (0, LOG_ZERO)
    peak = max(t[1] for t in terms)
    if peak == LOG_ZERO:
        return (0, LOG_ZERO)
    # accumulate in the dtype of the log-magnitudes (extended precision
    # when the caller works in np.longdouble)
    total = 0 * peak
    comp = 0 * peak
    for sign, logmag in terms:
        y = sign * np.exp(logmag - peak) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    if total == 0.0:
        return (0, LOG_ZERO)
    return (1 if total > 0 else -1, peak + np.log(abs(total)))


# ---------------------------------------------------------------------------
# scaled floats: (sign, mantissa, exponent), value = sign * m * 2**e


SF_ZERO = (0, LDBL(0.0), 0)


def sf_from_float(x):
    x = LDBL(x)
    if x == 0:
        return SF_ZERO
    m, e = np.frexp(abs(x))
    return (1 if x > 0 else -1, m, int(e))


def sf_scale(s, factor):
    """Multiply a scaled float by an ordinary (longdouble) factor."""
    sign, m, e = s
    factor = LDBL(factor)
    if sign == 0 or factor == 0:
        return SF_ZERO
    fm, fe = np.frexp(abs(factor))
    m2, e2 = np.frexp(m * fm)
    return (sign if factor > 0 else -sign, m2, e + int(fe) + int(e2))


def sf_mul(a, b):
    if a[0] == 0 or b[0] == 0:
        return SF_ZERO
    m, e = np.frexp(a[1] * b[1])
    return (a[0] * b[0], m, a[2] + b[2] + int(e))


def sf_div(a, b):
    if b[0] == 0:
        raise ZeroDivisionError("scaled-float division by zero")
    if a[0] == 0:
        return SF_ZERO
    m, e = np.frexp(a[1] / b[1])
    return (a[0] * b[0], m, a[2] - b[2] + int(e))


def sf_ldexp2(s, k):
    """Multiply a scaled float by 2**k exactly."""
    if s[0] == 0:
        return SF_ZERO
    return (s[0], s[1], s[2] + int(k))


def sf_prod_array(values):
    """Scaled-float product of an array of ordinary values (any signs).

    Vectorized but bit-identical to folding `sf_scale` over the array:
    per-step renormalization only moves exact powers of two, so the
    mantissa rounding sequence is the same either way.
    """
    arr = np.ravel(np.asarray(values, dtype=LDBL))
    if arr.size == 0:
        return (1, LDBL(0.5), 1)  # exact 1.0
    if np.any(arr == 0):
        return SF_ZERO
    sign = 1 if np.count_nonzero(arr < 0) % 2 == 0 else -1
    m, e = np.frexp(np.abs(arr))
    pm, pe = np.frexp(np.multiply.reduce(m))
    return (sign, pm, int(e.sum()) + int(pe))


def sf_sum(terms):
    """Sum scaled floats, order-preserving with Kahan compensation.

    Terms are aligned to the peak exponent before accumulating in
    longdouble, so only contributions more than ~16000 binary orders of
    magnitude below the peak are lost.
    """
    terms = [t for t in terms if t[0] != 0]
    if not terms:
        return SF_ZERO
    peak = max(t[2] for t in terms)
    total = LDBL(0.0)
    comp = LDBL(0.0)
    for sign, m, e in terms:
        shift = e - peak
        y = (sign * np.ldexp(m, shift) if shift > -16300 else LDBL(0.0)) - comp
        t = total + y
        comp = (t - total) - y
        total = t
    if total == 0:
        return SF_ZERO
    m, e = np.frexp(abs(total))
    return (1 if total > 0 else -1, m, peak + int(e))


def sf_to_slog(s):
    if s[0] == 0:
        return (0, LOG_ZERO)
    return (s[0], np.log(s[1]) + s[2] * _LN2)


def sf_to_float(s):
    if s[0] == 0:
        return 0.0
    return float(s[0] * np.ldexp(s[1], s[2]))
