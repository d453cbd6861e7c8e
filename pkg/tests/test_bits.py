import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monotonelab.bits import (
    BitString,
    flip_positions,
    hamming_distance,
    mutate,
    random_bitstring,
)
from monotonelab.rng import stream


def test_random_bitstring_deterministic():
    a = random_bitstring(8, stream(41, "init"))
    b = random_bitstring(8, stream(41, "init"))
    assert a == b
    assert a.to01() == b.to01()


def test_random_bitstring_counts():
    x = random_bitstring(8, stream(1, "init"))
    assert x.n == 8
    assert x.count_ones() + x.count_zeros() == 8


def test_random_bitstring_mean_ones():
    # Monte Carlo against the Binomial(8, 1/2) mean of 4
    gen = stream(7, "init")
    total = sum(random_bitstring(8, gen).count_ones() for _ in range(10_000))
    assert 3.8 <= total / 10_000 <= 4.2


def test_random_bitstring_rejects_empty():
    with pytest.raises(ValueError):
        random_bitstring(0, stream(0, "init"))


def test_mutate_p0_identity():
    x = random_bitstring(32, stream(3, "init"))
    assert mutate(x, 0.0, stream(3, "mutation")) == x


def test_mutate_p1_complement():
    x = random_bitstring(32, stream(3, "init"))
    assert mutate(x, 1.0, stream(3, "mutation")) == x.complement()


def test_mutate_rejects_bad_probability():
    x = BitString.ones(4)
    for p in (-0.1, 1.5):
        with pytest.raises(ValueError):
            mutate(x, p, stream(0, "mutation"))


def test_mutate_mean_hamming_distance():
    # n=100, p=2/100: flips ~ Binomial(100, 0.02), mean 2
    x = random_bitstring(100, stream(5, "init"))
    gen = stream(5, "mutation")
    total = sum(hamming_distance(x, mutate(x, 0.02, gen)) for _ in range(10_000))
    assert abs(total / 10_000 - 2.0) <= 0.1


def test_per_bit_flip_symmetry():
    # every position flips with probability p, within 3 standard errors
    n, p, trials = 64, 0.1, 20_000
    gen = stream(11, "mutation")
    counts = np.zeros(n)
    for _ in range(trials):
        pos = flip_positions(gen, n, p)
        counts[pos - 1] += 1
    se = math.sqrt(p * (1 - p) / trials)
    assert np.all(np.abs(counts / trials - p) <= 3 * se + 1e-12)


@pytest.mark.parametrize("p", [0.01, 0.1])
def test_flip_count_binomial_moments(p):
    n, trials = 64, 40_000
    gen = stream(13, "mutation")
    ks = np.array([flip_positions(gen, n, p).size for _ in range(trials)], dtype=float)
    mean, var = n * p, n * p * (1 - p)
    se_mean = math.sqrt(var / trials)
    # SE of the sample variance of a binomial via its fourth central moment
    mu4 = n * p * (1 - p) * (1 + (3 * n - 6) * p * (1 - p))
    se_var = math.sqrt(max(mu4 - var**2, 0.0) / trials)
    assert abs(ks.mean() - mean) <= 3 * se_mean
    assert abs(ks.var(ddof=1) - var) <= 3 * se_var + 1e-9


def test_replay_byte_for_byte():
    runs = []
    for _ in range(2):
        gen = stream(99, "mutation")
        out = [tuple(flip_positions(gen, 50, 0.07)) for _ in range(200)]
        runs.append(out)
    assert runs[0] == runs[1]


def test_flip_positions_validation():
    with pytest.raises(ValueError):
        flip_positions(stream(0, "m"), 10, -0.2)
    assert flip_positions(stream(0, "m"), 10, 0.0).size == 0
    assert list(flip_positions(stream(0, "m"), 4, 1.0)) == [1, 2, 3, 4]


def test_bitstring_accessors():
    x = BitString.from01("0101")
    assert x.get(1) == 0 and x.get(2) == 1 and x.get(4) == 1
    assert x.count_ones() == 2
    assert list(x.zero_positions()) == [1, 3]
    assert x.with_flips([1]).to01() == "1101"
    assert x.restrict([4, 3, 2]).to01() == "101"
    assert x.complement().to01() == "1010"
    with pytest.raises(IndexError):
        x.get(5)
    with pytest.raises(IndexError):
        x.with_flips([0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_bitstring_roundtrip(bits):
    x = BitString.from_array(np.array(bits, dtype=np.uint8))
    assert list(x.to_array()) == bits
    assert x.to01() == "".join(map(str, bits))
    assert x.count_ones() == sum(bits)
    assert BitString.from01(x.to01()) == x


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_flip_involution(data):
    n = data.draw(st.integers(1, 100))
    bits = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    pos = data.draw(st.lists(st.integers(1, n), min_size=0, max_size=n, unique=True))
    x = BitString.from_array(np.array(bits, dtype=np.uint8))
    assert x.with_flips(pos).with_flips(pos) == x
    if pos:
        assert hamming_distance(x, x.with_flips(pos)) == len(pos)


def test_geometric_skipping_is_bernoulli():
    # the skip-sampler induces iid per-bit flips: check joint pair rates
    n, p, trials = 8, 0.3, 30_000
    gen = stream(21, "mutation")
    both = 0
    first = 0
    for _ in range(trials):
        pos = set(flip_positions(gen, n, p).tolist())
        first += 1 in pos
        both += 1 in pos and 5 in pos
    se1 = math.sqrt(p * (1 - p) / trials)
    se2 = math.sqrt(p * p * (1 - p * p) / trials)
    assert abs(first / trials - p) <= 4 * se1
    assert abs(both / trials - p * p) <= 4 * se2
