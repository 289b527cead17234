import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from amenlab import exactcomb as EC
from amenlab import groups as G
from amenlab.errors import DomainError


def brute_fixed_points(d):
    counts = [0] * (d + 1)
    for p in itertools.permutations(range(d)):
        counts[sum(1 for i, j in enumerate(p) if i == j)] += 1
    return counts


def brute_sign_tail(j, k):
    hits = sum(1 for s in itertools.product((1, -1), repeat=j) if sum(s) > k)
    return Fraction(hits, 2**j)


@pytest.mark.parametrize("n,expected", [(0, 1), (1, 0), (2, 1), (3, 2), (4, 9), (5, 44)])
def test_derangements_small(n, expected):
    assert EC.derangements(n) == expected


@pytest.mark.parametrize("n", range(0, 9))
def test_derangements_three_ways(n):
    assert EC.derangements(n) == EC.derangements_alternating(n) == brute_fixed_points(n)[0]


def test_derangements_negative():
    with pytest.raises(DomainError):
        EC.derangements(-1)


@pytest.mark.parametrize("d", range(1, 8))
def test_fixed_point_count_matches_enumeration(d):
    assert [EC.fixed_point_count(d, j) for j in range(d + 1)] == brute_fixed_points(d)


@pytest.mark.parametrize("d", range(1, 13))
def test_fixed_point_counts_sum_and_bound(d):
    xs = [EC.fixed_point_count(d, j) for j in range(d + 1)]
    assert sum(xs) == math.factorial(d)
    assert xs[d] == 1
    assert xs[d - 1] == 0
    # X_j / d! <= 1 / j!
    assert all(Fraction(x, math.factorial(d)) <= Fraction(1, math.factorial(j)) for j, x in enumerate(xs))


@pytest.mark.parametrize("j", [-1, 5])
def test_fixed_point_count_out_of_range(j):
    with pytest.raises(DomainError):
        EC.fixed_point_count(4, j)


@pytest.mark.parametrize("j,k,expected", [(1, 0, Fraction(1, 2)), (2, 1, Fraction(1, 4)), (0, -1, 1), (0, 0, 0)])
def test_sign_sum_tail_values(j, k, expected):
    assert EC.sign_sum_tail(j, k) == expected


@pytest.mark.parametrize("j", range(0, 9))
def test_sign_sum_tail_enumeration(j):
    for k in range(-j - 1, j + 2):
        assert EC.sign_sum_tail(j, k) == brute_sign_tail(j, k)


@pytest.mark.parametrize("d", range(1, 13))
def test_sign_sum_tail_floor(d):
    assert all(EC.sign_sum_tail(d, k) >= Fraction(1, 2**d) for k in range(d))


def test_char_tail_d2():
    assert EC.char_tail_hyperoct(2, 1) == Fraction(1, 8)


@pytest.mark.parametrize("d", [1, 3, 7, 12])
def test_char_tail_at_d_is_zero(d):
    assert EC.char_tail_hyperoct(d, d) == 0
    assert EC.char_tail_hyperoct(d, d + 5) == 0


@pytest.mark.parametrize("d", range(1, 13))
def test_char_tail_sandwich(d):
    lower = Fraction(1, math.factorial(d) * 2**d)
    for k in range(d):
        t = EC.char_tail_hyperoct(d, k)
        assert lower <= t
        assert float(t) <= math.e * (math.e / (k + 1)) ** (k + 1)


def enumerated_char_dist(d):
    spec = G.HyperOct(d)
    counts = {}
    for g in spec.elements():
        tr = int(round(spec.character(g).real))
        counts[tr] = counts.get(tr, 0) + 1
    return {k: Fraction(v, spec.order) for k, v in counts.items()}


def test_char_dist_d2():
    dist = EC.char_dist_hyperoct(2)
    assert dist.as_dict() == {-2: Fraction(1, 8), 0: Fraction(6, 8), 2: Fraction(1, 8)}


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_char_dist_matches_enumeration(d):
    assert EC.char_dist_hyperoct(d).as_dict() == enumerated_char_dist(d)


@pytest.mark.parametrize("d", [1, 5, 9, 16])
def test_char_dist_identity_mass_and_symmetry(d):
    dist = EC.char_dist_hyperoct(d)
    assert dist.prob(d) == Fraction(1, math.factorial(d) * 2**d)
    assert all(dist.prob(m) == dist.prob(-m) for m in dist.support)
    assert sum(dist.probs) == 1


@pytest.mark.parametrize("d", [3, 6, 10])
def test_char_dist_tail_consistent(d):
    dist = EC.char_dist_hyperoct(d)
    for k in range(-d - 1, d + 1):
        assert dist.tail(k) == EC.char_tail_hyperoct(d, k)


@given(st.integers(1, 14), st.integers(-16, 16))
def test_tail_nonincreasing(d, k):
    assert EC.char_tail_hyperoct(d, k + 1) <= EC.char_tail_hyperoct(d, k)


@pytest.mark.parametrize("eps", [2, Fraction(5, 2), 3.0])
def test_ball_measure_large_eps(eps):
    # at eps = 2 only -I would be excluded, and it is at distance exactly 2
    m = EC.ball_measure_hyperoct(5, eps)
    if eps > 2:
        assert m == 1
    else:
        assert m == 1 - EC.char_dist_hyperoct(5).prob(-5)


def test_ball_measure_d2():
    assert EC.ball_measure_hyperoct(2, 1) == Fraction(1, 8)


@pytest.mark.parametrize("eps", [0, -1])
def test_ball_measure_bad_eps(eps):
    with pytest.raises(DomainError):
        EC.ball_measure_hyperoct(3, eps)


@given(st.integers(1, 12), st.fractions(Fraction(1, 100), Fraction(2)))
def test_ball_measure_lower_bound(d, eps):
    assert EC.ball_measure_hyperoct(d, eps) >= Fraction(1, math.factorial(d) * 2**d)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ball_measure_by_distance(d):
    spec = G.HyperOct(d)
    mats = [spec.matrix(g) for g in spec.elements()]
    for eps in [Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(19, 10)]:
        inside = sum(1 for m in mats if (2 * (d - m.trace().real) / d) ** 0.5 < float(eps) - 1e-12)
        assert EC.ball_measure_hyperoct(d, eps) == Fraction(inside, spec.order)


@given(st.integers(1, 20), st.floats(0.01, 2.0))
def test_ball_measure_float_is_upper_bound(d, eps):
    val, label = EC.ball_measure_hyperoct_float(d, eps)
    assert label == "upper-bound"
    assert val >= EC.ball_measure_hyperoct(d, Fraction(eps))
