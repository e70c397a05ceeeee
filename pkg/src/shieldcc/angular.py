"""Exact angular-momentum algebra: Wigner 3j/6j symbols, Clebsch-Gordan
coefficients and Racah-normalized spherical-tensor matrix elements.

Symbols are evaluated from the Racah closed forms in exact rational
arithmetic (Python big integers / fractions), converted to float once at
the end.  This avoids the catastrophic cancellation of naive floating-point
factorial ratios, which sets in near j ~ 20; basis builders here need j up
to ~40 (L_max = 20 with Delta L = +-4 second-order couplings).

Arguments may be ints, half-integer floats, or :class:`HalfInt`.  Invalid
quantum-number combinations (triangle violations, |m| > j, non-integer
perimeters) return 0 rather than raising: a vanishing symbol is the natural
value for a forbidden coupling.

All functions are pure; results are memoized on canonical integer keys, and
the caches are safe for concurrent readers under CPython.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt


class HalfInt:
    """Angular momentum quantum number stored exactly as twice its value."""

    __slots__ = ("twice",)

    def __init__(self, twice: int):
        self.twice = int(twice)

    @classmethod
    def of(cls, value) -> "HalfInt":
        return cls(_twice(value))

    @property
    def value(self) -> float:
        return self.twice / 2.0

    def __repr__(self):
        if self.twice % 2 == 0:
            return f"HalfInt({self.twice // 2})"
        return f"HalfInt({self.twice}/2)"

    def __eq__(self, other):
        return self.twice == _twice(other)

    def __hash__(self):
        return hash(self.twice)


def _twice(x) -> int:
    """Twice the value of an int / half-integer float / Fraction / HalfInt."""
    if isinstance(x, HalfInt):
        return x.twice
    if isinstance(x, int):
        return 2 * x
    if isinstance(x, Fraction):
        y = 2 * x
        if y.denominator != 1:
            raise ValueError(f"not a half-integer: {x}")
        return int(y)
    y = 2.0 * float(x)
    r = round(y)
    if abs(y - r) > 1e-9:
        raise ValueError(f"not a half-integer: {x}")
    return int(r)


def _sqrt_fraction(p: Fraction) -> float:
    """float sqrt of a non-negative Fraction without intermediate overflow."""
    if p == 0:
        return 0.0
    num, den = p.numerator, p.denominator
    # num and den can individually exceed the float range even when their
    # ratio is modest; strip a common even power of 2 first.
    excess = max(num.bit_length(), den.bit_length()) - 900
    if excess > 0:
        excess += excess % 2
        num >>= excess
        den >>= excess
        if den == 0:
            den = 1
    return sqrt(num / den)


def _triangle_violated(tj1: int, tj2: int, tj3: int) -> bool:
    return (tj1 + tj2 - tj3 < 0 or tj1 - tj2 + tj3 < 0
            or -tj1 + tj2 + tj3 < 0 or (tj1 + tj2 + tj3) % 2 != 0)


def _delta_sq(tj1: int, tj2: int, tj3: int) -> Fraction:
    """Triangle coefficient squared, exact."""
    return Fraction(
        factorial((tj1 + tj2 - tj3) // 2)
        * factorial((tj1 - tj2 + tj3) // 2)
        * factorial((-tj1 + tj2 + tj3) // 2),
        factorial((tj1 + tj2 + tj3) // 2 + 1),
    )


@lru_cache(maxsize=None)
def _wigner_3j_t(tj1, tj2, tj3, tm1, tm2, tm3) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    if tj1 < 0 or tj2 < 0 or tj3 < 0:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    if (tj1 + tm1) % 2 or (tj2 + tm2) % 2 or (tj3 + tm3) % 2:
        return 0.0
    if _triangle_violated(tj1, tj2, tj3):
        return 0.0

    # Racah's sum over t; every factorial argument below is integral.
    a1 = (tj1 + tj2 - tj3) // 2
    a2 = (tj1 - tm1) // 2
    a3 = (tj2 + tm2) // 2
    b1 = (tj2 - tj3 - tm1) // 2
    b2 = (tj1 - tj3 + tm2) // 2
    tmin = max(0, b1, b2)
    tmax = min(a1, a2, a3)
    if tmin > tmax:
        return 0.0

    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        den = (factorial(t) * factorial(a1 - t) * factorial(a2 - t)
               * factorial(a3 - t) * factorial(t - b1) * factorial(t - b2))
        total += Fraction(-1 if t % 2 else 1, den)
    if total == 0:
        return 0.0

    pref = _delta_sq(tj1, tj2, tj3) * Fraction(
        factorial((tj1 + tm1) // 2) * factorial((tj1 - tm1) // 2)
        * factorial((tj2 + tm2) // 2) * factorial((tj2 - tm2) // 2)
        * factorial((tj3 + tm3) // 2) * factorial((tj3 - tm3) // 2)
    )
    phase = -1 if ((tj1 - tj2 - tm3) // 2) % 2 else 1
    sign = phase * (1 if total > 0 else -1)
    return sign * _sqrt_fraction(pref * total * total)


@lru_cache(maxsize=None)
def _wigner_6j_t(tj1, tj2, tj3, tj4, tj5, tj6) -> float:
    triads = ((tj1, tj2, tj3), (tj1, tj5, tj6), (tj4, tj2, tj6),
              (tj4, tj5, tj3))
    for tr in triads:
        if min(tr) < 0 or _triangle_violated(*tr):
            return 0.0

    alphas = [sum(tr) // 2 for tr in triads]
    betas = [(tj1 + tj2 + tj4 + tj5) // 2, (tj2 + tj3 + tj5 + tj6) // 2,
             (tj3 + tj1 + tj6 + tj4) // 2]
    tmin = max(alphas)
    tmax = min(betas)
    if tmin > tmax:
        return 0.0

    total = Fraction(0)
    for t in range(tmin, tmax + 1):
        num = factorial(t + 1)
        den = 1
        for a in alphas:
            den *= factorial(t - a)
        for b in betas:
            den *= factorial(b - t)
        total += Fraction(-num if t % 2 else num, den)
    if total == 0:
        return 0.0

    pref = Fraction(1)
    for tr in triads:
        pref *= _delta_sq(*tr)
    sign = 1 if total > 0 else -1
    return sign * _sqrt_fraction(pref * total * total)


def wigner_3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3j symbol (j1 j2 j3 / m1 m2 m3); 0 for forbidden arguments."""
    return _wigner_3j_t(_twice(j1), _twice(j2), _twice(j3),
                        _twice(m1), _twice(m2), _twice(m3))


def wigner_6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3 / j4 j5 j6}; 0 for forbidden triads."""
    return _wigner_6j_t(_twice(j1), _twice(j2), _twice(j3),
                        _twice(j4), _twice(j5), _twice(j6))


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1; j2 m2 | j m> in the Condon-Shortley phase convention."""
    tj1, tm1 = _twice(j1), _twice(m1)
    tj2, tm2 = _twice(j2), _twice(m2)
    tj, tm = _twice(j), _twice(m)
    if tm1 + tm2 != tm:
        return 0.0
    three_j = _wigner_3j_t(tj1, tj2, tj, tm1, tm2, -tm)
    if three_j == 0.0:
        return 0.0
    phase = -1 if ((tj1 - tj2 + tm) // 2) % 2 else 1
    return phase * sqrt(tj + 1.0) * three_j


@lru_cache(maxsize=None)
def c_tensor_element(n_bra: int, m_bra: int, k: int, q: int,
                     n_ket: int, m_ket: int) -> float:
    """<n' m' | C^k_q | n m> for Racah-normalized spherical harmonics.

    Gaunt-type product of two 3j symbols with the
    sqrt((2n+1)(2n'+1)) reduced factor; integer arguments only.
    """
    if k < 0:
        return 0.0
    if m_bra != m_ket + q:
        return 0.0
    red = _wigner_3j_t(2 * n_bra, 2 * k, 2 * n_ket, 0, 0, 0)
    if red == 0.0:
        return 0.0
    proj = _wigner_3j_t(2 * n_bra, 2 * k, 2 * n_ket,
                        -2 * m_bra, 2 * q, 2 * m_ket)
    phase = -1 if m_bra % 2 else 1
    return phase * sqrt((2 * n_bra + 1.0) * (2 * n_ket + 1.0)) * red * proj
