"""Integer-only Q10 fixed-point primitives.

Everything here sticks to what a switch pipeline can do: shifts, masks,
adds and multiplies on words of at most 64 bits. Real values are carried
amplified by ``2**10`` ("Q10").

``p4log`` and ``p4exp`` have scalar versions working on Python ints and
``*_array`` versions working on ``numpy.uint64`` arrays. The two produce
bit-identical results; the array versions exist so that whole traffic
intervals can be replayed at desk speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Q = 10
ONE_Q10 = 1 << Q

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

# Internal precision of the log/exp kernels (Q30 keeps every product < 2**62).
_F = 30
_ONE_F = 1 << _F
_LN2_F = 744261118  # floor(ln 2 * 2**30)


@dataclass(frozen=True)
class ApproxParams:
    """Tuning knobs of the log/exp approximations.

    ``p4log`` extracts ``n_digits * n_bits`` fractional bits of the
    logarithm; ``p4exp`` evaluates an ``n_terms``-term Taylor polynomial.
    """

    n_digits: int = 3
    n_bits: int = 4
    n_terms: int = 7

    def __post_init__(self):
        if self.n_digits < 1 or self.n_bits < 1:
            raise ValueError("n_digits and n_bits must be positive")
        if self.n_digits * self.n_bits > _F:
            raise ValueError(f"at most {_F} fractional bits are supported")
        if not 1 <= self.n_terms <= 20:
            raise ValueError("n_terms must be in [1, 20]")

    @property
    def frac_bits(self) -> int:
        return self.n_digits * self.n_bits


DEFAULT_PARAMS = ApproxParams()

# floor(2**30 / j), used in place of the divisions of the Taylor series
_INV = [0] + [_ONE_F // j for j in range(1, 21)]


def fill_ones_rightward(x: int) -> int:
    """Set every bit at or to the left of the rightmost set bit of a 32-bit word.

    Unrolled doubling-shift OR cascade. Works elementwise on integer numpy
    arrays as well.
    """
    w = x | (x << 1)
    w = w | (w << 2)
    w = w | (w << 4)
    w = w | (w << 8)
    w = w | (w << 16)
    return w & MASK32


def hamming_weight(x: int) -> int:
    """Number of set bits of a 32-bit word (Counting 1-Bits, bitwise only)."""
    x = x & MASK32
    x = x - ((x >> 1) & 0x55555555)
    x = (x & 0x33333333) + ((x >> 2) & 0x33333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F
    x = x + (x >> 8)
    x = x + (x >> 16)
    return x & 0x3F


def _smear_right64(x):
    x = x | (x >> 1)
    x = x | (x >> 2)
    x = x | (x >> 4)
    x = x | (x >> 8)
    x = x | (x >> 16)
    x = x | (x >> 32)
    return x


def msb_index(x: int) -> int:
    """0-based index of the most significant set bit of a nonzero 64-bit word."""
    w = _smear_right64(x)
    return hamming_weight(w & MASK32) + hamming_weight(w >> 32) - 1


def p4log(x: int, params: ApproxParams = DEFAULT_PARAMS) -> int:
    """Return ``log2(x)`` in Q10, truncated.

    The integer part is the position of the most significant bit; the
    fraction is produced bit by bit by squaring the normalised mantissa.
    """
    if x < 1:
        raise ValueError(f"p4log is undefined for {x}")
    if x > MASK64:
        raise OverflowError("p4log input exceeds 64 bits")
    p = msb_index(x)
    if p >= _F:
        m = x >> (p - _F)
    else:
        m = x << (_F - p)
    frac = 0
    for _ in range(params.frac_bits):
        m = (m * m) >> _F
        bit = m >> (_F + 1)
        frac = (frac << 1) | bit
        m = m >> bit
    fb = params.frac_bits
    if fb >= Q:
        frac >>= fb - Q
    else:
        frac <<= Q - fb
    return (p << Q) | frac


def _exp2_frac(f: int, n_terms: int) -> int:
    """2**(f / 1024) in Q30 for 0 <= f < 1024, via a Horner-form Taylor series."""
    t = (f * _LN2_F) >> Q
    r = _ONE_F
    for j in range(n_terms - 1, 0, -1):
        r = _ONE_F + ((((r * t) >> _F) * _INV[j]) >> _F)
    return r


def p4exp(e: int, params: ApproxParams = DEFAULT_PARAMS) -> int:
    """Return ``2**(e / 1024)`` as a plain integer, rounded to nearest.

    ``e`` is a nonnegative Q10 value. Exact integer exponents take the
    shift-only fast path.
    """
    if e < 0:
        raise ValueError(f"p4exp expects a nonnegative Q10 exponent, got {e}")
    n = e >> Q
    f = e & (ONE_Q10 - 1)
    if n >= 64:
        raise OverflowError(f"2**{e / ONE_Q10:.3f} does not fit in 64 bits")
    if f == 0:
        return 1 << n
    r = _exp2_frac(f, params.n_terms)
    if n >= _F:
        return r << (n - _F)
    # the internal Q30 value is rounded, not truncated, on the way out
    s = _F - n
    return (r + (1 << (s - 1))) >> s


# -- numpy versions ---------------------------------------------------------

_U = np.uint64


def msb_index_array(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=_U)
    w = _smear_right64(x)
    lo = hamming_weight(w & _U(MASK32))
    hi = hamming_weight(w >> _U(32))
    return (lo + hi).astype(np.int64) - 1


def p4log_array(x, params: ApproxParams = DEFAULT_PARAMS) -> np.ndarray:
    """Vectorised :func:`p4log`; returns an ``int64`` array."""
    x = np.asarray(x)
    if x.size and (x.min() < 1):
        raise ValueError("p4log is undefined for values < 1")
    x = x.astype(_U)
    p = msb_index_array(x)
    left = (_F - np.minimum(p, _F)).astype(_U)
    right = (np.maximum(p, _F) - _F).astype(_U)
    m = (x << left) >> right
    frac = np.zeros_like(m)
    one = _U(1)
    sh = _U(_F)
    sh1 = _U(_F + 1)
    for _ in range(params.frac_bits):
        m = (m * m) >> sh
        bit = m >> sh1
        frac = (frac << one) | bit
        m = m >> bit
    fb = params.frac_bits
    if fb >= Q:
        frac = frac >> _U(fb - Q)
    else:
        frac = frac << _U(Q - fb)
    return (p << Q) | frac.astype(np.int64)


def p4exp_array(e, params: ApproxParams = DEFAULT_PARAMS) -> np.ndarray:
    """Vectorised :func:`p4exp`; returns a ``uint64`` array."""
    e = np.asarray(e, dtype=np.int64)
    if e.size and e.min() < 0:
        raise ValueError("p4exp expects nonnegative Q10 exponents")
    n = e >> Q
    if e.size and n.max() >= 64:
        raise OverflowError("p4exp result does not fit in 64 bits")
    f = (e & (ONE_Q10 - 1)).astype(_U)
    t = (f * _U(_LN2_F)) >> _U(Q)
    r = np.full(e.shape, _ONE_F, dtype=_U)
    sh = _U(_F)
    for j in range(params.n_terms - 1, 0, -1):
        r = _U(_ONE_F) + ((((r * t) >> sh) * _U(_INV[j])) >> sh)
    big = n >= _F
    left = np.where(big, n - _F, 0).astype(_U)
    right = np.where(big, 0, _F - n).astype(_U)
    half = np.where(right > 0, _U(1) << (np.maximum(right, _U(1)) - _U(1)), _U(0))
    return ((r + half) >> right) << left
