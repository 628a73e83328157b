import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensor_game.codes import (
    BudgetExceeded,
    LinearCode,
    check_interpolable,
    distance,
    encode,
    interpolate,
    is_codeword,
    make_reed_solomon,
    message_vectors,
)


def brute_distance(G, q):
    """Minimum nonzero weight by listing every message; no code object involved."""
    n, k = G.shape
    best = n
    for msg in itertools.product(range(q), repeat=k):
        if any(msg):
            best = min(best, int(np.count_nonzero(G @ np.array(msg) % q)))
    return best


def test_rs_parameters(rs5):
    assert (rs5.n, rs5.k, rs5.d, rs5.t) == (5, 2, 4, 2)
    rep = make_reed_solomon(5, 5, 0)
    assert rep.k == 1 and rep.d == 5
    c3 = make_reed_solomon(3, 3, 1)
    assert (c3.n, c3.k, c3.d) == (3, 2, 2)
    assert rs5.size == 25 and len(rs5.codewords) == 25


def test_generator_columns_are_monomials(rs5):
    xs = np.arange(5)
    assert np.array_equal(rs5.G[:, 1], xs)
    assert np.array_equal(rs5.G[:, 0], np.ones(5))


def test_encode_examples(rs5):
    assert encode(rs5, [0, 0]).tolist() == [0] * 5
    assert encode(rs5, [1, 1]).tolist() == [1, 2, 3, 4, 0]
    assert encode(rs5, [1, 0]).tolist() == rs5.G[:, 0].tolist()
    with pytest.raises(ValueError):
        encode(rs5, [1, 2, 3])


def test_membership_examples(rs5):
    assert is_codeword(rs5, [1, 2, 3, 4, 0])
    assert is_codeword(rs5, [0] * 5)
    assert not is_codeword(rs5, [1, 2, 3, 4, 1])
    with pytest.raises(ValueError):
        is_codeword(rs5, [0, 0])


def test_batch_membership_agrees_with_solver(rs3):
    words = np.array(list(itertools.product(range(3), repeat=3)))
    batch = rs3.is_codeword_batch(words)
    assert batch.tolist() == [is_codeword(rs3, w) for w in words]
    assert batch.sum() == rs3.size


def test_interpolation_examples(rs5):
    assert interpolate(rs5, (1, 2), (2, 3)).tolist() == [1, 2, 3, 4, 0]
    assert interpolate(rs5, (0, 4), (0, 0)).tolist() == [0] * 5
    cw = rs5.codewords[17]
    assert np.array_equal(interpolate(rs5, (3, 1), cw[[3, 1]]), cw)
    with pytest.raises(ValueError):
        interpolate(rs5, (1, 1), (0, 0))


def test_interpolability_detection():
    for q, n, s in [(3, 3, 1), (5, 4, 2), (7, 7, 3)]:
        assert check_interpolable(make_reed_solomon(q, n, s))
    bad = LinearCode(np.array([[1], [0]]), q=2)
    assert (bad.n, bad.k, bad.d, bad.t) == (2, 1, 1, 2)
    assert not check_interpolable(bad)
    zero_row = LinearCode(np.array([[1, 0], [0, 1], [0, 0]]), q=5)
    assert not zero_row.interpolable
    with pytest.raises(ValueError):
        zero_row.interpolation_map((0, 1))


def test_construction_errors():
    with pytest.raises(ValueError):
        make_reed_solomon(5, 3, 1, eval_points=[1, 1, 2])
    with pytest.raises(ValueError):
        make_reed_solomon(5, 3, 3)
    with pytest.raises(ValueError):
        make_reed_solomon(5, 6, 1)
    with pytest.raises(ValueError):
        make_reed_solomon(6, 3, 1)
    with pytest.raises(ValueError):
        LinearCode(np.array([[1, 2], [2, 4]]), q=5)


def test_custom_eval_points():
    code = make_reed_solomon(7, 3, 1, eval_points=[2, 4, 6])
    assert encode(code, [0, 1]).tolist() == [2, 4, 6]
    assert code.d == 2


@pytest.mark.parametrize("q", [3, 5, 7])
def test_rs_distance_is_n_minus_s(q):
    for n in range(1, q + 1):
        for s in range(0, n):
            code = make_reed_solomon(q, n, s)
            assert distance(code) == n - s == brute_distance(code.G, q)


def test_interpolation_uniqueness_against_enumeration(rs5, rng):
    # every word of GF(5)^5 filtered by the solver-based membership test
    words = np.array(list(itertools.product(range(5), repeat=5)))
    members = words[[is_codeword(rs5, w) for w in words]]
    for _ in range(200):
        coords = rng.choice(5, 2, replace=False)
        vals = rng.integers(0, 5, 2)
        hits = members[np.all(members[:, coords] == vals, axis=1)]
        assert len(hits) == 1
        assert list(hits[0]) == interpolate(rs5, coords, vals).tolist()


@given(st.lists(st.integers(0, 6), min_size=3, max_size=3), st.lists(st.integers(0, 6), min_size=3, max_size=3),
       st.permutations(range(5)))
def test_interpolation_is_linear(v1, v2, perm):
    code = make_reed_solomon(7, 5, 2)
    coords = perm[:3]
    s = [(a + b) % 7 for a, b in zip(v1, v2)]
    lhs = (interpolate(code, coords, v1) + interpolate(code, coords, v2)) % 7
    assert np.array_equal(lhs, interpolate(code, coords, s))


def test_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        message_vectors(11, 6)
