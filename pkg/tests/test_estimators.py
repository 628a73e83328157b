import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tensor_game.estimators import GlobalCodewordExtractor
from tensor_game.extract import codeword_rank
from tensor_game.strategies import honest_strategy
from tensor_game.tensor import enumerate_points, tensor_encode


def test_params_roundtrip():
    est = GlobalCodewordExtractor(method=1, seed=3)
    params = est.get_params()
    assert params["method"] == 1 and params["seed"] == 3
    twin = clone(est).set_params(tol=1e-8)
    assert twin.tol == 1e-8 and est.tol == 1e-9


def test_fit_predict_score(planted, honest5):
    est = GlobalCodewordExtractor()
    assert est.fit(honest5) is est
    assert est.eta_ <= 1e-8
    U = np.array(enumerate_points(5, 2))
    assert np.array_equal(est.predict(U), planted.table.reshape(-1))
    assert est.score(honest5) == pytest.approx(1)
    w = est.transform(honest5)
    assert w.shape == (5**4,) and w.sum() == pytest.approx(est.score(honest5))
    assert w[int(codeword_rank(planted.base, 2, planted.table[None])[0])] == pytest.approx(1)
    assert est.codeword_ == planted


def test_score_against_other_strategy(rs5, honest5):
    other = honest_strategy(tensor_encode(rs5, 2, [[0, 0], [0, 1]]))
    est = GlobalCodewordExtractor().fit(honest5)
    # two distinct codewords agree on at most a gamma fraction of points
    assert est.score(other) <= 9 / 25 + 1e-12


def test_input_validation(honest5, rs3):
    est = GlobalCodewordExtractor()
    with pytest.raises(NotFittedError):
        est.predict([[0, 0]])
    with pytest.raises(TypeError):
        est.fit(np.zeros((3, 3)))
    est.fit(honest5)
    with pytest.raises(ValueError):
        est.predict([[0, 0, 0]])
    with pytest.raises(ValueError):
        est.predict([[0, 7]])
    with pytest.raises(ValueError):
        est.score(honest_strategy(tensor_encode(rs3, 2, [[0, 0], [0, 1]])))
