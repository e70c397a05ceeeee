import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (c_tensor_quadrature, clebsch_gordan_reference,
                     wigner_3j_reference, wigner_6j_reference)
from shieldcc.angular import (HalfInt, c_tensor_element, clebsch_gordan,
                              wigner_3j, wigner_6j)

halves = st.integers(min_value=0, max_value=16).map(lambda t: t / 2.0)


def proj(j):
    return st.integers(min_value=-int(2 * j), max_value=int(2 * j)) \
        .map(lambda t: t / 2.0).filter(lambda m: (j - m) == int(j - m))


def test_3j_identity_cases():
    assert wigner_3j(0, 0, 0, 0, 0, 0) == 1.0
    assert wigner_3j(1, 1, 1, 0, 0, 0) == 0.0          # odd perimeter, m = 0
    assert wigner_3j(1, 1, 2, 0, 0, 0) == pytest.approx(
        math.sqrt(2.0 / 15.0), abs=1e-15)


def test_3j_forbidden_arguments_return_zero():
    assert wigner_3j(1, 1, 3, 0, 0, 0) == 0.0          # triangle
    assert wigner_3j(1, 1, 2, 1, 1, -1) == 0.0         # m-sum
    assert wigner_3j(1, 1, 2, 2, -1, -1) == 0.0        # |m| > j
    assert wigner_3j(0.5, 1, 0.5, 0.5, 0, -0.5) != 0.0
    assert wigner_3j(0.5, 0.5, 0.5, 0.5, -0.5, 0) == 0.0   # half-int perim


def test_6j_cases():
    assert wigner_6j(0, 0, 0, 0, 0, 0) == 1.0
    assert wigner_6j(1, 1, 1, 1, 1, 1) == pytest.approx(1.0 / 6.0, abs=1e-15)
    assert wigner_6j(1, 1, 3, 1, 1, 1) == 0.0


def test_cg_examples():
    assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0, 0) == pytest.approx(
        1.0 / math.sqrt(2.0), abs=1e-15)
    assert clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1, 1) == pytest.approx(
        1.0, abs=1e-14)
    assert clebsch_gordan(1, 1, 1, 1, 2, 1) == 0.0     # m != m1 + m2


def test_half_int_wrapper():
    j = HalfInt.of(1.5)
    m = HalfInt.of(-0.5)
    assert wigner_3j(j, j, 1, m, HalfInt.of(-0.5), 1) == pytest.approx(
        wigner_3j(1.5, 1.5, 1, -0.5, -0.5, 1), abs=1e-16)
    with pytest.raises(ValueError):
        HalfInt.of(0.3)


@given(st.data())
@settings(max_examples=300, deadline=None)
def test_3j_matches_prime_factorized_oracle(data):
    j1 = data.draw(halves)
    j2 = data.draw(halves)
    j3 = data.draw(st.integers(int(2 * abs(j1 - j2)), int(2 * (j1 + j2)))
                   .map(lambda t: t / 2.0)
                   .filter(lambda j: (j1 + j2 + j) == int(j1 + j2 + j)))
    m1 = data.draw(proj(j1))
    m2 = data.draw(proj(j2))
    m3 = -(m1 + m2)
    got = wigner_3j(j1, j2, j3, m1, m2, m3)
    want = wigner_3j_reference(j1, j2, j3, m1, m2, m3)
    assert got == pytest.approx(want, abs=1e-12)


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_6j_matches_prime_factorized_oracle(data):
    js = [data.draw(halves) for _ in range(6)]
    got = wigner_6j(*js)
    want = wigner_6j_reference(*js)
    assert got == pytest.approx(want, abs=1e-12)


@given(st.data())
@settings(max_examples=200, deadline=None)
def test_3j_column_symmetries(data):
    j1 = data.draw(halves)
    j2 = data.draw(halves)
    j3 = data.draw(st.integers(int(2 * abs(j1 - j2)), int(2 * (j1 + j2)))
                   .map(lambda t: t / 2.0)
                   .filter(lambda j: (j1 + j2 + j) == int(j1 + j2 + j)))
    m1 = data.draw(proj(j1))
    m2 = data.draw(proj(j2))
    m3 = -(m1 + m2)
    if abs(m3) > j3:
        return
    base = wigner_3j(j1, j2, j3, m1, m2, m3)
    # even (cyclic) permutation
    assert wigner_3j(j2, j3, j1, m2, m3, m1) == pytest.approx(base, abs=1e-13)
    sign = -1.0 if round(j1 + j2 + j3) % 2 else 1.0
    # odd permutation and m reversal pick up (-1)^(j1+j2+j3)
    assert wigner_3j(j2, j1, j3, m2, m1, m3) == pytest.approx(sign * base,
                                                              abs=1e-13)
    assert wigner_3j(j1, j2, j3, -m1, -m2, -m3) == pytest.approx(sign * base,
                                                                 abs=1e-13)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_3j_orthogonality(data):
    j1 = data.draw(st.integers(0, 5).map(float))
    j2 = data.draw(st.integers(0, 5).map(float))
    j3 = data.draw(st.integers(int(abs(j1 - j2)), int(j1 + j2)).map(float))
    # for each fixed m3, sum over the compatible (m1, m2) pairs
    m3 = -j3
    while m3 <= j3:
        total = 0.0
        m1 = -j1
        while m1 <= j1:
            total += (2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, -m3 - m1,
                                              m3) ** 2
            m1 += 1
        assert total == pytest.approx(1.0, abs=1e-12)
        m3 += 1


@given(st.data())
@settings(max_examples=150, deadline=None)
def test_cg_reproduces_3j_conversion(data):
    j1 = data.draw(halves)
    j2 = data.draw(halves)
    j = data.draw(st.integers(int(2 * abs(j1 - j2)), int(2 * (j1 + j2)))
                  .map(lambda t: t / 2.0)
                  .filter(lambda x: (j1 + j2 + x) == int(j1 + j2 + x)))
    m1 = data.draw(proj(j1))
    m2 = data.draw(proj(j2))
    got = clebsch_gordan(j1, m1, j2, m2, j, m1 + m2)
    want = clebsch_gordan_reference(j1, m1, j2, m2, j, m1 + m2)
    assert got == pytest.approx(want, abs=1e-12)


def test_c_tensor_examples():
    assert c_tensor_element(0, 0, 0, 0, 0, 0) == pytest.approx(1.0, abs=1e-15)
    assert c_tensor_element(1, 0, 1, 0, 0, 0) == pytest.approx(
        1.0 / math.sqrt(3.0), abs=1e-14)
    assert c_tensor_element(2, 0, 2, 0, 0, 0) == pytest.approx(
        1.0 / math.sqrt(5.0), abs=1e-14)


def test_c_tensor_against_quadrature():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n_ket = int(rng.integers(0, 7))
        n_bra = int(rng.integers(0, 7))
        k = int(rng.integers(0, 5))
        m_ket = int(rng.integers(-n_ket, n_ket + 1))
        q = int(rng.integers(-k, k + 1))
        m_bra = m_ket + q
        if abs(m_bra) > n_bra:
            continue
        got = c_tensor_element(n_bra, m_bra, k, q, n_ket, m_ket)
        want = c_tensor_quadrature(n_bra, m_bra, k, q, n_ket, m_ket)
        assert got == pytest.approx(want, abs=1e-12)
