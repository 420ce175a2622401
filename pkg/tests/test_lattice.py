"""Generator enumeration and unimodular frames.

The oracle for enumeration is a brute-force grid scan: every integer
vector in the norm ball, kept when its gcd is 1 and its first nonzero
entry is positive.  Everything the fast enumerator returns must match
that set exactly, in lexicographic order.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resokam.errors import CertificationError, ParameterError
from resokam.lattice import (ResonanceVector, enumerate_generators,
                             unimodular_completion, weighted_norm)


def brute_force_generators(n, K, s=None):
    """Independent enumeration by full grid scan."""
    bound = int(math.floor(K / min(s))) if s else int(math.floor(K))
    out = []
    for k in itertools.product(range(-bound, bound + 1), repeat=n):
        if all(v == 0 for v in k):
            continue
        norm = sum(si * abs(v) for si, v in zip(s, k)) if s else sum(abs(v) for v in k)
        if norm > K:
            continue
        if math.gcd(*k) != 1 if n > 1 else abs(k[0]) != 1:
            continue
        first = next(v for v in k if v != 0)
        if first < 0:
            continue
        out.append(k)
    return sorted(out)


# -- enumeration ----------------------------------------------------------


def test_generators_n2_K3_frozen():
    got = [g.entries for g in enumerate_generators(2, 3)]
    assert got == [(0, 1), (1, -2), (1, -1), (1, 0), (1, 1), (1, 2),
                   (2, -1), (2, 1)]


def test_generators_match_brute_force_small():
    for n in (2, 3):
        for K in (1, 2, 3, 4):
            got = [g.entries for g in enumerate_generators(n, K)]
            assert got == brute_force_generators(n, K), (n, K)


def test_generator_count_n2_K12():
    # used by the analytic covering bound; 92 primitive directions
    assert len(enumerate_generators(2, 12)) == 92


def test_generators_weighted():
    s = (1.0, 2.0)
    got = [g.entries for g in enumerate_generators(2, 4, s=s)]
    assert got == brute_force_generators(2, 4, s=s)
    assert (2, -1) in got  # weighted norm 2*1 + 1*2 = 4
    assert all(weighted_norm(k, s) <= 4.0 for k in got)


def test_weighted_norm_values():
    assert weighted_norm((2, -1), (1.0, 2.0)) == 4.0
    assert weighted_norm((1, 2, -3), (0.5, 1.0, 2.0)) == 8.5


def test_generators_bad_input():
    from resokam.errors import DomainError

    with pytest.raises(DomainError):
        enumerate_generators(2, 0)
    with pytest.raises(DomainError):
        enumerate_generators(2, 3, s=(1.0,))
    with pytest.raises(DomainError):
        enumerate_generators(2, 3, s=(1.0, -1.0))
    # n = 1 degenerates to the single direction
    assert [g.entries for g in enumerate_generators(1, 3)] == [(1,)]


def test_resonance_vector_norms():
    k = ResonanceVector((3, -4))
    assert k.norm1 == 7
    assert k.norm_inf == 4
    assert k.norm2 == 5.0


# -- unimodular completion ----------------------------------------------------------


def int_det(A):
    """Exact determinant by Laplace expansion on Python ints."""
    n = len(A)
    if n == 1:
        return A[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in A[1:]]
        total += (-1) ** j * A[0][j] * int_det(minor)
    return total


def check_frame(frame, k):
    A = [list(row) for row in frame.A]
    Ainv = [list(row) for row in frame.Ainv]
    n = len(k)
    assert tuple(A[0]) == tuple(k)
    assert int_det(A) == 1
    # exact inverse over the integers
    for i in range(n):
        for j in range(n):
            dot = sum(A[i][t] * Ainv[t][j] for t in range(n))
            assert dot == (1 if i == j else 0)
    kinf = max(abs(v) for v in k)
    hat_inf = max(abs(v) for row in A[1:] for v in row) if n > 1 else 0
    assert hat_inf <= kinf
    assert max(abs(v) for row in A for v in row) == kinf
    inv_inf = max(abs(v) for row in Ainv for v in row)
    # |A^-1|_inf^2 <= (n-1)^(n-1) |k|_inf^(2(n-1)) in exact arithmetic
    assert inv_inf ** 2 <= (n - 1) ** (n - 1) * kinf ** (2 * (n - 1))


def test_completion_e1_is_identity():
    frame = unimodular_completion((1, 0, 0))
    assert [list(r) for r in frame.A] == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def test_completion_k23_frozen():
    # deterministic output of the induction; properties are what matter,
    # the exact matrix is a regression anchor
    frame = unimodular_completion((2, 3))
    check_frame(frame, (2, 3))
    assert [list(r) for r in frame.A] == [[2, 3], [-1, -1]]
    assert [list(r) for r in frame.Ainv] == [[-1, -3], [1, 2]]


def test_completion_all_generators_small():
    for n in (2, 3):
        for g in enumerate_generators(n, 5):
            check_frame(unimodular_completion(g), g.entries)


def test_completion_rejects_imprimitive():
    from resokam.errors import DomainError

    with pytest.raises(DomainError, match="primitive"):
        unimodular_completion((2, 4))
    with pytest.raises(DomainError):
        unimodular_completion((0, 0))


def test_frame_constants_k23():
    # r = 0.25, gamma = L = 1: rTilde_k = r/(n |k|_inf), t_k = |k|/2,
    # tTilde = 1, frak_r = tTilde * r / (8 n^1.5 |k|), varpi0 = sqrt(n) L |k| frak_r
    frame = unimodular_completion((2, 3), gamma=1.0, L=1.0, r=0.25)
    k2 = math.sqrt(13.0)
    assert frame.r_tilde_k == 0.25 / 6.0
    assert frame.t_k == k2 / 2.0
    assert frame.t_tilde == 1.0
    assert frame.frak_r == pytest.approx(0.25 / (8.0 * 2 ** 1.5 * k2), rel=1e-15)
    assert frame.frak_r == 0.0030643146115341253
    assert frame.varpi0 == pytest.approx(math.sqrt(2.0) * k2 * frame.frak_r, rel=1e-15)
    assert frame.varpi0 == 0.015625
    assert frame.r_hat == frame.t_tilde ** 2 * frame.r_tilde / (512.0 * 2)


def test_frame_constants_small_t():
    # gamma |k| / (2L) < 1 clips tTilde and scales frak_r quadratically in r_hat
    frame = unimodular_completion((1, 0), gamma=1.0, L=3.7, r=0.25)
    assert frame.t_k == 1.0 / 7.4
    assert frame.t_tilde == frame.t_k
    assert frame.frak_r == pytest.approx(frame.t_tilde * 0.25 / (8.0 * 2 ** 1.5), rel=1e-15)


def test_certification_rejects_bad_matrix():
    from resokam import lattice

    # wrong first row
    with pytest.raises(CertificationError, match="first row"):
        lattice._certify(((1, 1), (0, 1)), (2, 3))
    # determinant != 1
    with pytest.raises(CertificationError, match="determinant"):
        lattice._certify(((2, 3), (-2, -2)), (2, 3))
    # unimodular but the completion row exceeds |k|_inf
    with pytest.raises(CertificationError, match="sub-row"):
        lattice._certify(((2, 3), (7, 11)), (2, 3))


def _canonical(k):
    if all(v == 0 for v in k) or math.gcd(*k) != 1:
        return False
    return next(v for v in k if v != 0) > 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(min_value=-9, max_value=9), min_size=2, max_size=4)
       .filter(_canonical))
def test_completion_properties_random(k):
    check_frame(unimodular_completion(tuple(k)), tuple(k))


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=2, max_value=3), st.integers(min_value=1, max_value=6))
def test_enumeration_primitive_and_canonical(n, K):
    for g in enumerate_generators(n, K):
        assert math.gcd(*g.entries) == 1
        first = next(v for v in g.entries if v != 0)
        assert first > 0
        assert g.norm1 <= K
