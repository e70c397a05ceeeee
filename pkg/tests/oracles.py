"""Independent reference implementations used as test oracles.

Everything here is deliberately written through different machinery than
the package: Wigner symbols via prime-factorized factorial arithmetic,
tensor matrix elements via brute-force angular quadrature, Van Vleck
checks via dense second-order perturbation theory, scattering via
closed-form potentials.  None of it imports from shieldcc.
"""

import math
from fractions import Fraction

import numpy as np
from scipy.special import sph_harm_y

# ---------------------------------------------------------------------------
# prime-factorized factorial arithmetic


def _primes_up_to(n):
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.nonzero(sieve)[0]


class FactorizedFactorial:
    """n! as a vector of prime exponents; supports exact ratio products."""

    def __init__(self, max_n=400):
        self.primes = _primes_up_to(max_n)
        self.table = np.zeros((max_n + 1, len(self.primes)), dtype=np.int64)
        for n in range(2, max_n + 1):
            self.table[n] = self.table[n - 1]
            m = n
            for i, p in enumerate(self.primes):
                if p * p > m:
                    break
                while m % p == 0:
                    self.table[n][i] += 1
                    m //= p
            if m > 1:
                self.table[n][np.searchsorted(self.primes, m)] += 1

    def product(self, numerators, denominators) -> Fraction:
        """Exact prod(n_i!) / prod(d_j!) as a Fraction."""
        exp = np.zeros(len(self.primes), dtype=np.int64)
        for n in numerators:
            exp += self.table[n]
        for d in denominators:
            exp -= self.table[d]
        num, den = 1, 1
        for p, e in zip(self.primes, exp):
            if e > 0:
                num *= int(p) ** int(e)
            elif e < 0:
                den *= int(p) ** int(-e)
        return Fraction(num, den)


_FF = FactorizedFactorial()


def _sqrt_fraction(fr: Fraction) -> float:
    return math.sqrt(fr.numerator / fr.denominator) \
        if fr.numerator.bit_length() < 900 else \
        math.exp(0.5 * (math.log(fr.numerator) - math.log(fr.denominator)))


def wigner_3j_reference(j1, j2, j3, m1, m2, m3) -> float:
    """Racah closed form, prime-factorized arithmetic, integer/half args."""
    tj = [round(2 * j) for j in (j1, j2, j3)]
    tm = [round(2 * m) for m in (m1, m2, m3)]
    if tm[0] + tm[1] + tm[2] != 0:
        return 0.0
    for j, m in zip(tj, tm):
        if j < 0 or abs(m) > j or (j + m) % 2:
            return 0.0
    if (tj[0] + tj[1] + tj[2]) % 2:
        return 0.0
    if (tj[0] + tj[1] - tj[2] < 0 or tj[0] - tj[1] + tj[2] < 0
            or -tj[0] + tj[1] + tj[2] < 0):
        return 0.0

    def h(x):
        return x // 2

    a1 = h(tj[0] + tj[1] - tj[2])
    a2 = h(tj[0] - tm[0])
    a3 = h(tj[1] + tm[1])
    b1 = h(tj[1] - tj[2] - tm[0])
    b2 = h(tj[0] - tj[2] + tm[1])
    total = Fraction(0)
    for t in range(max(0, b1, b2), min(a1, a2, a3) + 1):
        term = _FF.product([], [t, a1 - t, a2 - t, a3 - t, t - b1, t - b2])
        total += -term if t % 2 else term
    if total == 0:
        return 0.0
    pref = _FF.product(
        [h(tj[0] + tj[1] - tj[2]), h(tj[0] - tj[1] + tj[2]),
         h(-tj[0] + tj[1] + tj[2]),
         h(tj[0] + tm[0]), h(tj[0] - tm[0]), h(tj[1] + tm[1]),
         h(tj[1] - tm[1]), h(tj[2] + tm[2]), h(tj[2] - tm[2])],
        [h(tj[0] + tj[1] + tj[2]) + 1])
    phase = -1.0 if h(tj[0] - tj[1] - tm[2]) % 2 else 1.0
    sign = 1.0 if total > 0 else -1.0
    return phase * sign * _sqrt_fraction(pref * total * total)


def wigner_6j_reference(j1, j2, j3, j4, j5, j6) -> float:
    tj = [round(2 * j) for j in (j1, j2, j3, j4, j5, j6)]
    triads = [(tj[0], tj[1], tj[2]), (tj[0], tj[4], tj[5]),
              (tj[3], tj[1], tj[5]), (tj[3], tj[4], tj[2])]

    def bad(a, b, c):
        return (a + b + c) % 2 or a + b - c < 0 or a - b + c < 0 \
            or -a + b + c < 0 or min(a, b, c) < 0

    if any(bad(*tr) for tr in triads):
        return 0.0
    alphas = [sum(tr) // 2 for tr in triads]
    betas = [(tj[0] + tj[1] + tj[3] + tj[4]) // 2,
             (tj[1] + tj[2] + tj[4] + tj[5]) // 2,
             (tj[2] + tj[0] + tj[5] + tj[3]) // 2]
    total = Fraction(0)
    for t in range(max(alphas), min(betas) + 1):
        term = _FF.product([t + 1], [t - a for a in alphas]
                           + [b - t for b in betas])
        total += -term if t % 2 else term
    if total == 0:
        return 0.0
    pref = Fraction(1)
    for a, b, c in triads:
        pref *= _FF.product([(a + b - c) // 2, (a - b + c) // 2,
                             (-a + b + c) // 2], [(a + b + c) // 2 + 1])
    sign = 1.0 if total > 0 else -1.0
    return sign * _sqrt_fraction(pref * total * total)


def clebsch_gordan_reference(j1, m1, j2, m2, j, m) -> float:
    phase = -1.0 if round(j1 - j2 + m) % 2 else 1.0
    return phase * math.sqrt(2 * j + 1) \
        * wigner_3j_reference(j1, j2, j, m1, m2, -m)


# ---------------------------------------------------------------------------
# angular quadrature oracles


def c_tensor_quadrature(n_bra, m_bra, k, q, n_ket, m_ket,
                        n_polar=32, n_azimuth=64) -> float:
    """<n'm'|C^k_q|nm> by direct quadrature of three spherical harmonics."""
    x, w = np.polynomial.legendre.leggauss(n_polar)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    ck = np.sqrt(4 * np.pi / (2 * k + 1)) * sph_harm_y(k, q, th, ph)
    integrand = (np.conj(sph_harm_y(n_bra, m_bra, th, ph)) * ck
                 * sph_harm_y(n_ket, m_ket, th, ph))
    val = np.sum(integrand * w[:, None]) * (2 * np.pi / n_azimuth)
    return float(np.real(val))


def dd_element_quadrature(bra, ket, n_polar=10, n_azimuth=12) -> float:
    """<n1'm1' n2'm2' L'M'| u1.u2 - 3(u1.R)(u2.R) |n1m1 n2m2 LM>.

    Brute-force 6-dimensional product quadrature of the Cartesian form of
    the dipole-dipole operator (unit dipoles, R^3 scaled out); exact for
    the band-limited integrand at these orders.
    """
    n1p, m1p, n2p, m2p, lp, mp = bra
    n1k, m1k, n2k, m2k, lk, mk = ket
    x, wx = np.polynomial.legendre.leggauss(n_polar)
    th = np.arccos(x)
    ph = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    wp = 2 * np.pi / n_azimuth
    t1, p1, t2, p2, tr, pr = np.meshgrid(th, ph, th, ph, th, ph,
                                         indexing="ij")

    def unit(t, p):
        return np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)

    u1, u2, ur = unit(t1, p1), unit(t2, p2), unit(tr, pr)
    dot12 = sum(a * b for a, b in zip(u1, u2))
    d1r = sum(a * b for a, b in zip(u1, ur))
    d2r = sum(a * b for a, b in zip(u2, ur))
    op = dot12 - 3.0 * d1r * d2r
    bra_f = np.conj(sph_harm_y(n1p, m1p, t1, p1) * sph_harm_y(n2p, m2p, t2, p2)
                    * sph_harm_y(lp, mp, tr, pr))
    ket_f = (sph_harm_y(n1k, m1k, t1, p1) * sph_harm_y(n2k, m2k, t2, p2)
             * sph_harm_y(lk, mk, tr, pr))
    integrand = bra_f * op * ket_f
    w6 = (wx[:, None, None, None, None, None]
          * wx[None, None, :, None, None, None]
          * wx[None, None, None, None, :, None]) * wp ** 3
    return float(np.real(np.sum(integrand * w6)))


def symmetrized_dd_element(bra_pair, ket_pair) -> float:
    """Boson-symmetrized dipole-dipole element from unsymmetrized oracle.

    Pairs are ((n1, m1), (n2, m2), L, M); the free-rotor convention of
    the quadrature oracle applies.
    """
    (a_b, b_b, l_b, m_b) = bra_pair
    (a_k, b_k, l_k, m_k) = ket_pair
    direct = dd_element_quadrature(a_b + b_b + (l_b, m_b),
                                   a_k + b_k + (l_k, m_k))
    exch = dd_element_quadrature(a_b + b_b + (l_b, m_b),
                                 b_k + a_k + (l_k, m_k))
    norm = 1.0 / math.sqrt((1 + (a_b == b_b)) * (1 + (a_k == b_k)))
    return norm * (direct + (-1) ** l_k * exch)


# ---------------------------------------------------------------------------
# scattering and perturbation-theory oracles


def square_well_tan_delta(depth, radius, e_coll, mu) -> float:
    """Analytic L = 0 phase shift of an attractive square well."""
    k = math.sqrt(2 * mu * e_coll)
    kin = math.sqrt(2 * mu * (e_coll + depth))
    return ((k * math.tan(kin * radius) - kin * math.tan(k * radius))
            / (kin + k * math.tan(kin * radius) * math.tan(k * radius)))


def second_order_shift(h0_diag, v, index) -> float:
    """Plain second-order perturbation theory for one level."""
    shift = 0.0
    for j in range(len(h0_diag)):
        if j == index:
            continue
        shift += v[index, j] ** 2 / (h0_diag[index] - h0_diag[j])
    return shift
