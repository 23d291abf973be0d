import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tkrr.basis import FeatureMapConfig
from tkrr.exceptions import ModelFormatError
from tkrr.model_io import dumps_model, load_model, loads_model, save_model
from tkrr.signal.scaling import fit_scaler
from tkrr.solver import TkrrModel, predict_scores
from tkrr.tensor import CpdTensor


def make_model(seed=0, modes=(4, 5, 3), rank=3, scaler=True):
    rng = np.random.default_rng(seed)
    fmap = FeatureMapConfig(tuple(modes), tuple(rng.uniform(1.1, 2.0, len(modes))), 0.7)
    w = CpdTensor(tuple(rng.standard_normal((m, rank)) for m in modes))
    sc = fit_scaler(rng.normal(size=(10, len(modes)))) if scaler else None
    return TkrrModel(fmap, w, 1e-3, scaler=sc, threshold=float(rng.normal()),
                     history=[3.0, 2.5, 2.25])


def test_round_trip_preserves_everything(tmp_path):
    model = make_model()
    save_model(model, tmp_path / "m.txt")
    back = load_model(tmp_path / "m.txt")
    for a, b in zip(model.weights.factors, back.weights.factors):
        np.testing.assert_array_equal(a, b)
    assert back.feature_map == model.feature_map
    assert back.threshold == model.threshold and back.ridge == model.ridge
    assert back.history == model.history
    np.testing.assert_array_equal(back.scaler.minimum, model.scaler.minimum)
    X = np.random.default_rng(1).normal(size=(20, 3))
    np.testing.assert_array_equal(predict_scores(back, X), predict_scores(model, X))


def test_without_scaler():
    back = loads_model(dumps_model(make_model(scaler=False)))
    assert back.scaler is None


def test_factors_column_major():
    model = make_model(modes=(2,), rank=2, scaler=False)
    line = [ln for ln in dumps_model(model).splitlines() if ln.startswith("factor_1")][0]
    values = [float(v) for v in line.split("=")[1].split()]
    np.testing.assert_array_equal(values, model.weights.factors[0].ravel(order="F"))


def test_text_is_stable():
    model = make_model()
    assert dumps_model(loads_model(dumps_model(model))) == dumps_model(model)


@pytest.mark.parametrize("text, match", [
    ("garbage\n", "header"),
    ("format = other\nformat_version = 1\n", "header"),
    ("format = tkrr-model\nformat_version = 9\n", "format_version"),
    ("format = tkrr-model\nformat_version = 1\ndims = 2\n", "corrupt"),
])
def test_corrupt_documents(text, match):
    with pytest.raises(ModelFormatError, match=match):
        loads_model(text)


def test_truncated_factor():
    text = dumps_model(make_model())
    lines = text.splitlines()
    lines[-1] = lines[-1].rsplit(" ", 1)[0]
    with pytest.raises(ModelFormatError):
        loads_model("\n".join(lines))


def test_missing_file(tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.txt")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=4), st.integers(1, 4),
       st.integers(0, 2**32 - 1))
def test_predictions_survive_round_trip(modes, rank, seed):
    model = make_model(seed, modes, rank)
    back = loads_model(dumps_model(model))
    X = np.random.default_rng(seed).normal(size=(10, len(modes)))
    np.testing.assert_allclose(predict_scores(back, X), predict_scores(model, X), rtol=0, atol=1e-12)
