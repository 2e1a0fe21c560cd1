import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import linkage
from sklearn.metrics import silhouette_score as sk_silhouette

from scenediar.hac import select_cut, silhouette_cut, silhouette_score, ward_hac
from scenediar.metric import CovarianceModel
from scenediar.oracles import oracle_hac, oracle_silhouette_cut


def clouds(rng, centres, per, sigma=1.0):
    centres = np.asarray(centres, dtype=float)
    return np.concatenate([c + sigma * rng.normal(size=(per, centres.shape[1])) for c in centres])


def test_two_points_merge_at_ward_cost():
    d = ward_hac([[0.0, 0.0], [2.0, 0.0]])
    assert d.heights == [2.0]
    assert d.merges[0].new_id == 2


def test_identical_points_merge_at_zero():
    d = ward_hac(np.ones((5, 3)))
    assert d.heights == [0.0] * 4


def test_ties_resolve_to_oldest_pair():
    d = ward_hac([[0.0], [1.0], [2.0], [3.0]])
    assert (d.merges[0].a, d.merges[0].b) == (0, 1)
    assert (d.merges[1].a, d.merges[1].b) == (2, 3)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_merges_equal_recomputing_oracle(seed, n):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, 3))
    d = ward_hac(x)
    oracle = oracle_hac(x)
    assert [(m.a, m.b, m.new_id) for m in d.merges] == [(a, b, c) for a, b, _, c in oracle.merges]
    assert np.allclose(d.heights, [h for _, _, h, _ in oracle.merges], rtol=1e-9, atol=1e-12)


def test_heights_match_scipy_ward(rng):
    for _ in range(10):
        x = rng.normal(size=(12, 4))
        ours = np.sqrt(2 * np.array(ward_hac(x).heights))
        assert np.allclose(ours, linkage(x, method="ward")[:, 2], atol=1e-9)


def test_whitening_applied_before_merging(rng):
    a = rng.normal(size=(3, 3))
    model = CovarianceModel.from_matrix(a @ a.T + np.eye(3))
    x = rng.normal(size=(6, 3))
    assert np.allclose(ward_hac(x, model).heights, ward_hac(model.whiten(x)).heights)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_heights_monotone_and_scale_robust(seed, c):
    r = np.random.default_rng(seed)
    x = r.normal(size=(int(r.integers(2, 15)), 4)) * r.uniform(0.1, 5)
    base = ward_hac(x)
    h = np.array(base.heights)
    assert np.all(np.diff(h) >= -1e-9 * max(1.0, h.max()))
    scaled = ward_hac(x * c)
    assert [(m.a, m.b) for m in scaled.merges] == [(m.a, m.b) for m in base.merges]
    assert np.allclose(scaled.heights, c * c * h, rtol=1e-7, atol=1e-12)
    if len(x) >= 3:
        one = select_cut(base, x, theta_single=-1.0)
        two = select_cut(scaled, x * c, theta_single=-1.0)
        assert one.k == two.k and np.array_equal(one.labels, two.labels)


def test_silhouette_examples(rng):
    x = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
    good = silhouette_score(x, [0, 0, 1, 1])
    assert good > 0.9
    assert silhouette_score(x, [0, 1, 1, 1]) < good
    assert silhouette_score(x, [0, 1, 2, 3]) == 0.0
    with pytest.raises(ValueError):
        silhouette_score(x, [0, 0, 0, 0])


def test_silhouette_matches_sklearn(rng):
    for _ in range(20):
        x = rng.normal(size=(15, 3))
        labels = rng.integers(0, 4, size=15)
        if len(set(labels)) < 2:
            continue
        assert silhouette_score(x, labels) == pytest.approx(sk_silhouette(x, labels), abs=1e-9)


def test_cut_small_cases():
    assert silhouette_cut(ward_hac([[0.0]], leaves=["a"]), [[0.0]]).k == 1
    near = [[0.0], [12.0]]
    far = [[0.0], [12.4]]
    assert silhouette_cut(ward_hac(near), near).k == 1
    assert silhouette_cut(ward_hac(far), far).k == 2


def test_three_separated_clouds(rng):
    # centroid gaps of 8 within-cloud standard deviations
    x = clouds(rng, np.eye(3, 60) * 8 / np.sqrt(2), per=10)
    part = silhouette_cut(ward_hac(x), x)
    assert part.k == 3


def test_single_tight_cloud_falls_back_to_one(rng):
    x = rng.normal(size=(12, 60))
    choice = select_cut(ward_hac(x), x)
    assert choice.k == 1 and choice.score < 0.10


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 8))
def test_cut_equals_exhaustive_oracle(seed, n):
    r = np.random.default_rng(seed)
    k = int(r.integers(1, 4))
    centres = r.normal(size=(k, 2)) * r.uniform(0, 10)
    x = centres[r.integers(0, k, size=n)] + r.normal(size=(n, 2))
    d = ward_hac(x)
    got = select_cut(d, x).labels.tolist()
    assert got == oracle_silhouette_cut([(m.a, m.b) for m in d.merges], x)
