import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from maxlab.estimators import FiltrationPartitioner, MaximalTransformer, RatioSearch
from maxlab.exceptions import InvalidExponentError, InvalidParameterError


def test_transformer(rng):
    X = rng.random((6, 6))
    t = MaximalTransformer(op="lambda-box", lam=0.5, h=0.25).fit(X)
    M = t.transform(X)
    assert M.shape == X.shape and np.all(M >= X)
    assert t.ratio(X) >= 1.0
    assert clone(t).get_params() == t.get_params()


def test_transformer_not_fitted():
    with pytest.raises(NotFittedError):
        MaximalTransformer().transform(np.ones(4))


def test_pipeline_composes(rng):
    X = rng.random(16)
    pipe = make_pipeline(MaximalTransformer(op="one-sided"), MaximalTransformer(op="uncentered-box"))
    out = pipe.fit_transform(X)
    assert np.all(out >= X)


def test_partitioner(rng):
    X = rng.random((16, 16))
    est = FiltrationPartitioner(lam=1.5, max_depth=6, h=1 / 16).fit(X)
    assert est.report_["all_passed"]
    ids = est.predict([[0.1, 0.1], [0.99, 0.5], [1.0, 1.0], [2.0, 0.0]])
    assert ids[-1] == -1
    assert all(i in est.leaf_ids_ for i in ids[:3])
    with pytest.raises(InvalidParameterError):
        FiltrationPartitioner(lam=1.0, max_depth=2).fit(X)


def test_ratio_search():
    est = RatioSearch(op="dyadic", n_cells=16, budget=300, seeds=(0, 1)).fit()
    assert est.score() == -est.best_ratio_
    assert est.best_ratio_ >= np.sqrt(1.5) * (1 - 1e-9)
    assert est.set_params(p=3.0).p == 3.0
    with pytest.raises(InvalidExponentError):
        RatioSearch(p=0.5).fit()
