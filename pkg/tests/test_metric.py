import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenediar.core import StructureError
from scenediar.metric import CovarianceModel, mahalanobis_distance, within_class_covariance
from scenediar.oracles import oracle_covariance


def test_single_speaker_unit_variance():
    model = within_class_covariance([("a", [1.0]), ("a", [-1.0])])
    assert model.matrix.tolist() == [[1.0]]


def test_identical_segments_give_zero_scatter():
    model = within_class_covariance([("a", [1.0, 2.0]), ("a", [1.0, 2.0]), ("b", [0.0, 5.0])])
    assert np.all(model.matrix == 0)
    assert np.all(np.isfinite(model.whitener))


def test_matches_loop_oracle(rng):
    for _ in range(10):
        labels = rng.integers(0, 4, size=40)
        x = rng.normal(size=(40, 5)) * rng.uniform(0.1, 4, size=5) + labels[:, None]
        training = list(zip(labels.tolist(), x))
        got = within_class_covariance(training).matrix
        assert np.allclose(got, oracle_covariance(training), atol=1e-9, rtol=0)


def test_whitener_inverts_regularised_covariance(rng):
    a = rng.normal(size=(6, 6))
    model = CovarianceModel.from_matrix(a @ a.T)
    reg = model.matrix + model.epsilon * np.eye(6)
    assert np.allclose(model.whitener @ reg @ model.whitener.T, np.eye(6), atol=1e-9)
    assert model.epsilon == pytest.approx(1e-6 * np.trace(a @ a.T) / 6)


def test_rejects_mixed_dimensions():
    with pytest.raises(StructureError):
        within_class_covariance([("a", [1.0]), ("a", [1.0, 2.0])])
    with pytest.raises(StructureError):
        within_class_covariance([])
    with pytest.raises(StructureError):
        within_class_covariance([("a", [1.0, 0.0])], dimension=3)


def test_distance_basics(rng):
    x, y = rng.normal(size=4), rng.normal(size=4)
    eye = CovarianceModel.identity(4)
    assert mahalanobis_distance(x, x, eye) == 0.0
    assert mahalanobis_distance(x, y, eye) == pytest.approx(np.linalg.norm(x - y))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distance_matches_direct_inverse(seed):
    r = np.random.default_rng(seed)
    d = int(r.integers(1, 7))
    a = r.normal(size=(d, d))
    model = CovarianceModel.from_matrix(a @ a.T + 0.1 * np.eye(d))
    x, y = r.normal(size=d), r.normal(size=d)
    diff = x - y
    inv = np.linalg.inv(model.matrix + model.epsilon * np.eye(d))
    direct = float(np.sqrt(diff @ inv @ diff))
    assert mahalanobis_distance(x, y, model) == pytest.approx(direct, abs=1e-6)
    whitened = np.linalg.norm(model.whiten(x) - model.whiten(y))
    assert mahalanobis_distance(x, y, model) == pytest.approx(whitened, abs=1e-6)


def test_dict_round_trip(rng):
    a = rng.normal(size=(3, 3))
    model = CovarianceModel.from_matrix(a @ a.T)
    back = CovarianceModel.from_dict(model.to_dict())
    assert np.array_equal(back.matrix, model.matrix)
    assert np.array_equal(back.whitener, model.whitener)
    assert back.epsilon == model.epsilon
