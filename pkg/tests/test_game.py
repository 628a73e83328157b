from fractions import Fraction

import numpy as np
import pytest

from tensor_game.codes import LinearCode
from tensor_game.game import (
    BipartiteStrategy,
    build_game,
    build_two_prover_game,
    embed_synchronous,
    evaluate_bipartite,
    evaluate_synchronous,
    goodness_synchronous,
    is_symmetric_form,
    joint_synchronous,
    monte_carlo_play,
    pair_distribution,
    symmetrize,
)
from tensor_game.strategies import CorruptionModel, SynchronousStrategy, corrupt, honest_strategy, random_strategy
from tensor_game.tensor import tensor_encode


def test_question_weights(rs3, rs5):
    g = build_game(rs3, 2)
    assert g.total_weight == 1
    assert g.weight_of("lines") == Fraction(1, 2) == g.weight_of("subcube")
    # 9 points x 2 axes line questions; 81 ordered pairs, each asked in both orders
    assert len(g.entries) == 18 + 2 * 81
    assert sum(pair_distribution(5, 2).values()) == 1
    g2 = build_two_prover_game(rs3, 2)
    assert g2.total_weight == 1
    assert all(g2.weight_of(t) == Fraction(1, 3) for t in ("lines", "subcube", "sync"))


def test_pair_points_share_a_subcube():
    mu = pair_distribution(3, 3)
    # every pair shares the whole cube, so each of the 27^2 ordered pairs appears
    assert len(mu) == 27**2
    # u and v differing in the last coordinate only come from the whole cube
    assert mu[(0, 0, 0), (0, 0, 1)] == Fraction(1, 3) / 27**2


def test_non_interpolable_code_rejected():
    with pytest.raises(ValueError):
        build_game(LinearCode(np.array([[1], [0]]), q=2), 2)


def test_honest_passes(honest5, rs5):
    game = build_game(rs5, 2)
    assert evaluate_synchronous(honest5, game) == pytest.approx(1, abs=1e-10)
    rep = goodness_synchronous(honest5, game)
    assert rep.eps == pytest.approx(0, abs=1e-12) and rep.delta == pytest.approx(0, abs=1e-12)


def test_uniform_coin_points_pass_lines_with_rate_one_over_q(rs3):
    c = tensor_encode(rs3, 2, [[2, 1], [1, 1]])
    h = honest_strategy(c)
    q = 3
    diag = np.zeros((q, q, q), dtype=complex)
    diag[np.arange(q), np.arange(q), np.arange(q)] = 1
    points = np.broadcast_to(diag, (9, q, q, q)).copy()
    lines = np.kron(h.lines, np.eye(q))
    pairs = np.kron(h.pairs, np.eye(q))
    s = SynchronousStrategy(rs3, 2, points, lines, pairs).validate()
    rep = goodness_synchronous(s, build_game(rs3, 2))
    assert rep.lines_pass == pytest.approx(1 / q, abs=1e-12)


def test_joint_distributions_are_normalized(rs3):
    s = random_strategy(rs3, 2, 3, seed=11)
    for e in build_game(rs3, 2).entries:
        J = joint_synchronous(s, e)
        assert J.min() >= -1e-12
        assert abs(J.sum() - 1) <= 1e-9


def test_goodness_relations_on_random_strategies(rs3):
    game = build_game(rs3, 2)
    for seed in range(5):
        s = random_strategy(rs3, 2, 2, seed=seed)
        rep = goodness_synchronous(s, game)
        assert rep.pass_probability == pytest.approx(evaluate_synchronous(s, game), abs=1e-12)
        assert rep.pass_probability >= 1 - rep.eps - rep.delta - 1e-12
        assert rep.pass_probability == pytest.approx(1 - (rep.eps + 1 - rep.subcube_pass) / 2, abs=1e-12)
        assert 0 <= rep.eps <= 1 and 0 <= rep.delta <= 1


def test_eps_grows_with_corruption(honest5, rs5):
    game = build_game(rs5, 2)
    eps = [goodness_synchronous(corrupt(honest5, CorruptionModel(rate=r, seed=3)), game).eps
           for r in np.arange(1, 11) / 100]
    assert all(b >= a - 1e-12 for a, b in zip(eps, eps[1:]))
    assert eps[-1] > eps[0]


def test_mismatched_game_rejected(honest5, rs3):
    with pytest.raises(ValueError):
        evaluate_synchronous(honest5, build_game(rs3, 2))


def test_two_prover_embedding(honest5, rs5, rs3):
    val, rep = evaluate_bipartite(embed_synchronous(honest5), build_two_prover_game(rs5, 2))
    assert val == pytest.approx(1, abs=1e-10) and rep.xi == pytest.approx(0, abs=1e-12)
    s = random_strategy(rs3, 2, 2, seed=1)
    g2 = build_two_prover_game(rs3, 2)
    val, rep = evaluate_bipartite(embed_synchronous(s), g2)
    assert abs(rep.xi) <= 1e-10
    assert val == pytest.approx(evaluate_synchronous(s, g2), abs=1e-10)
    with pytest.raises(ValueError):
        evaluate_bipartite(embed_synchronous(s), build_game(rs3, 2))


def _random_bipartite(code, seed):
    a = random_strategy(code, 2, 2, seed=seed)
    b = random_strategy(code, 2, 3, seed=seed + 100)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    return BipartiteStrategy(psi / np.linalg.norm(psi), a, b)


def test_bipartite_monte_carlo(rs3):
    s = _random_bipartite(rs3, 4)
    g2 = build_two_prover_game(rs3, 2)
    val, _ = evaluate_bipartite(s, g2)
    mc = monte_carlo_play(s, g2, 50_000, seed=2)
    assert abs(mc.rate - val) <= 3 * mc.stderr


def test_symmetrize(rs3, honest5, rs5):
    g2 = build_two_prover_game(rs3, 2)
    for seed in range(3):
        s = _random_bipartite(rs3, seed)
        sym = symmetrize(s)
        assert is_symmetric_form(sym)
        assert evaluate_bipartite(sym, g2)[0] == pytest.approx(evaluate_bipartite(s, g2)[0], abs=1e-9)
    h = symmetrize(embed_synchronous(honest5))
    assert evaluate_bipartite(h, build_two_prover_game(rs5, 2))[0] == pytest.approx(1, abs=1e-10)


def test_monte_carlo_honest_and_reproducible(honest5, rs5, rs3):
    game = build_game(rs5, 2)
    assert monte_carlo_play(honest5, game, 5000, seed=1).rate == 1
    s = random_strategy(rs3, 2, 2, seed=9)
    g = build_game(rs3, 2)
    assert monte_carlo_play(s, g, 3000, seed=5) == monte_carlo_play(s, g, 3000, seed=5)
