import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotonelab.bits import BitString
from monotonelab.functions import (
    LinearFunction,
    OneMax,
    binval_compare,
    bitstring_from_index,
    check_monotone,
)
from monotonelab.rng import stream


class NegOneMax:
    """Anti-monotone test helper."""

    def __init__(self, n):
        self.n = n
        self.name = "neg-onemax"

    def fitness(self, x):
        return -x.count_ones()


def numeric_binval(x: BitString, order=None) -> int:
    n = x.n
    if order is None:
        order = range(1, n + 1)
    return sum(x.get(pos) << (n - 1 - k) for k, pos in enumerate(order))


def test_onemax_examples():
    f = OneMax(6)
    assert f.fitness(BitString.ones(6)) == 6
    assert f.fitness(BitString.zeros(6)) == 0
    assert OneMax(4).fitness(BitString.from01("0101")) == 2


def test_linear_matches_onemax_with_unit_weights():
    f = LinearFunction([1.0] * 10)
    g = OneMax(10)
    for v in range(1 << 10):
        x = bitstring_from_index(v, 10)
        assert f.fitness(x) == g.fitness(x)


def test_linear_examples():
    f = LinearFunction([4.0, 2.0, 1.0])
    assert f.fitness(BitString.from01("101")) == 5.0
    assert f.fitness(BitString.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        f.fitness(BitString.zeros(4))


def test_binval_compare_identity_is_lexicographic():
    assert binval_compare(BitString.from01("110"), BitString.from01("101")) == 1
    x = BitString.from01("0110")
    assert binval_compare(x, x) == 0
    assert binval_compare(BitString.from01("011"), BitString.from01("100")) == -1


def test_binval_compare_against_numeric_oracle_exhaustive():
    # all 2^6 x 2^6 pairs under the identity order
    n = 6
    points = [bitstring_from_index(v, n) for v in range(1 << n)]
    values = [numeric_binval(x) for x in points]
    for i, j in itertools.product(range(1 << n), repeat=2):
        want = (values[i] > values[j]) - (values[i] < values[j])
        assert binval_compare(points[i], points[j]) == want


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_binval_compare_random_orders(data):
    n = data.draw(st.integers(2, 9))
    order = data.draw(st.permutations(range(1, n + 1)))
    vx = data.draw(st.integers(0, (1 << n) - 1))
    vy = data.draw(st.integers(0, (1 << n) - 1))
    x, y = bitstring_from_index(vx, n), bitstring_from_index(vy, n)
    bx, by = numeric_binval(x, order), numeric_binval(y, order)
    assert binval_compare(x, y, order) == (bx > by) - (bx < by)


def test_binval_zero_to_one_flip_increases():
    # single 0->1 flip strictly increases BINVAL for any weight order
    n = 8
    rng = stream(3, "orders")
    orders = [list(range(1, n + 1))] + [list(rng.permutation(n) + 1) for _ in range(3)]
    for order in orders:
        for v in range(1 << n):
            x = bitstring_from_index(v, n)
            for j in range(1, n + 1):
                if x.get(j) == 0:
                    assert binval_compare(x, x.with_flips([j]), order) == -1


def test_binval_compare_validates_order():
    x, y = BitString.zeros(3), BitString.ones(3)
    with pytest.raises(ValueError):
        binval_compare(x, y, [1, 1, 2])
    with pytest.raises(ValueError):
        binval_compare(x, BitString.ones(4))


def test_check_monotone_onemax_passes():
    assert check_monotone(OneMax(10), 10, mode="exhaustive").passed


def test_check_monotone_linear_positive_weights():
    weights = list(stream(5, "weights").random(14) + 0.1)
    assert check_monotone(LinearFunction(weights), 14, mode="exhaustive").passed


def test_check_monotone_finds_first_counterexample():
    rep = check_monotone(NegOneMax(6), 6, mode="exhaustive")
    assert not rep.passed
    x, j = rep.counterexample
    # deterministic scan order: the all-zeros point, first flip position
    assert x == BitString.zeros(6)
    assert j == 1
    # the witness really violates monotonicity
    f = NegOneMax(6)
    assert x.get(j) == 0 and not f.fitness(x) < f.fitness(x.with_flips([j]))


def test_check_monotone_exhaustive_guard():
    with pytest.raises(ValueError):
        check_monotone(OneMax(21), 21, mode="exhaustive")


def test_check_monotone_sampled():
    gen = stream(9, "sampled")
    assert check_monotone(OneMax(50), 50, mode="sampled", samples=500, gen=gen).passed
    rep = check_monotone(NegOneMax(50), 50, mode="sampled", samples=500, gen=stream(9, "s2"))
    assert not rep.passed
    x, j = rep.counterexample
    assert x.get(j) == 0


def test_check_monotone_unknown_mode():
    with pytest.raises(ValueError):
        check_monotone(OneMax(4), 4, mode="florp")
