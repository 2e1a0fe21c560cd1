import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenediar.core import FrameDescriptor, StructureError
from scenediar.oracles import oracle_components
from scenediar.visual import (
    SimilarityGraph,
    cut_indices,
    detect_cuts,
    detect_similar_shots,
    frame_correlation,
    label_shots,
)


def frame(blocks, index=0):
    return FrameDescriptor(index, index * 40, np.asarray(blocks, dtype=float))


def naive_correlation(a, b):
    scores = []
    for x, y in zip(a, b):
        x, y = list(map(float, x)), list(map(float, y))
        mx, my = sum(x) / len(x), sum(y) / len(y)
        sxy = sum((p - mx) * (q - my) for p, q in zip(x, y))
        sxx = sum((p - mx) ** 2 for p in x)
        syy = sum((q - my) ** 2 for q in y)
        if sxx == 0 or syy == 0:
            scores.append(1.0 if x == y else 0.0)
        else:
            scores.append(sxy / (sxx * syy) ** 0.5)
    return sum(scores) / len(scores)


def test_identical_descriptors_correlate_fully(rng):
    f = frame(rng.integers(0, 50, size=(30, 24)))
    assert frame_correlation(f, f) == 1.0


def test_alternating_blocks_anticorrelate():
    a = frame(np.tile([1, 0], (30, 12)))
    b = frame(np.tile([0, 1], (30, 12)))
    assert frame_correlation(a, b) == pytest.approx(-1.0)


def test_constant_blocks_follow_equality_convention():
    black = frame(np.zeros((30, 24)))
    grey = frame(np.full((30, 24), 3.0))
    assert frame_correlation(black, black) == 1.0
    assert frame_correlation(black, grey) == 0.0


def test_shape_mismatch_is_structural_error():
    with pytest.raises(StructureError):
        frame_correlation(frame(np.ones((30, 24))), frame(np.ones((30, 12))))


def test_correlation_matches_naive_oracle(rng):
    for _ in range(50):
        a = rng.integers(0, 20, size=(30, 24))
        b = rng.integers(0, 20, size=(30, 24))
        a[rng.integers(30)] = 7  # one constant block now and then
        got = frame_correlation(frame(a), frame(b))
        assert got == pytest.approx(naive_correlation(a, b), abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_correlation_symmetric_and_scale_invariant(seed):
    r = np.random.default_rng(seed)
    a = r.integers(0, 30, size=(30, 6)).astype(float)
    b = r.integers(0, 30, size=(30, 6)).astype(float)
    assert frame_correlation(frame(a), frame(b)) == frame_correlation(frame(b), frame(a))
    scaled = frame_correlation(frame(a * 3.0), frame(b * 3.0))
    assert scaled == pytest.approx(frame_correlation(frame(a), frame(b)), abs=1e-12)


def test_identical_frames_give_one_shot():
    frames = [frame(np.arange(30 * 24).reshape(30, 24) % 7, i) for i in range(10)]
    shots = detect_cuts(frames, 0.5)
    assert len(shots) == 1 and shots[0].frame_span == (0, 10)


def test_two_constant_runs_give_one_cut():
    a = np.tile([5, 0, 1, 0], (30, 6))
    b = np.tile([0, 5, 0, 1], (30, 6))
    frames = [frame(a if i < 5 else b, i) for i in range(10)]
    shots = detect_cuts(frames, 0.5)
    assert cut_indices(shots) == [5]
    assert [s.frame_span for s in shots] == [(0, 5), (5, 10)]
    assert shots[0].time_span == (0, 200) and shots[1].time_span == (200, 400)


def test_detect_cuts_rejects_bad_input():
    with pytest.raises(StructureError):
        detect_cuts([], 0.5)
    with pytest.raises(StructureError):
        detect_cuts([frame(np.ones((30, 4)))], 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_shots_tile_frames_and_ignore_scale(seed, scale):
    r = np.random.default_rng(seed)
    bases = r.integers(0, 40, size=(4, 30, 8)).astype(float)
    choice = r.integers(0, 4, size=r.integers(1, 30))
    frames = [frame(bases[c] + r.integers(0, 2, size=(30, 8)), i) for i, c in enumerate(choice)]
    shots = detect_cuts(frames, 0.5)
    spans = [s.frame_span for s in shots]
    assert spans[0][0] == 0 and spans[-1][1] == len(frames)
    assert all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    scaled = [frame(f.blocks * scale, f.frame_index) for f in frames]
    assert cut_indices(detect_cuts(scaled, 0.5)) == cut_indices(shots)


def _shots_from_bases(bases):
    frames = []
    for i, b in enumerate(bases):
        frames += [frame(b, 2 * i), frame(b, 2 * i + 1)]
    return detect_cuts(frames, 0.5)


def test_similar_shots_link_recurring_cameras():
    a = np.tile([9, 0, 1, 0], (30, 6))
    b = np.tile([0, 9, 0, 1], (30, 6))
    c = np.tile([1, 1, 9, 0], (30, 6))
    shots = _shots_from_bases([a, b, a, c, a])
    graph = detect_similar_shots(shots, 0.8)
    assert set(graph.edges) == {(0, 2), (0, 4), (2, 4)}
    assert all(score >= 0.8 for score in graph.edges.values())
    assert label_shots(graph).sequence() == [0, 1, 0, 2, 0]


def test_window_limits_comparisons():
    a = np.tile([9, 0, 1, 0], (30, 6))
    b = np.tile([0, 9, 0, 1], (30, 6))
    c = np.tile([1, 1, 9, 0], (30, 6))
    shots = _shots_from_bases([a, b, c, a])
    assert (0, 3) in detect_similar_shots(shots, 0.8, window=None).edges
    assert (0, 3) not in detect_similar_shots(shots, 0.8, window=2).edges


def test_dissimilar_shots_have_no_edges():
    eye = np.eye(4)
    bases = [np.tile(eye[k], (30, 1)) for k in range(4)]
    assert detect_similar_shots(_shots_from_bases(bases), 0.8).edges == {}


def test_label_examples():
    empty = SimilarityGraph((0, 1, 2), {})
    assert label_shots(empty).sequence() == [0, 1, 2]
    g = SimilarityGraph(tuple(range(6)), {(1, 3): 0.9, (3, 5): 0.9})
    assert label_shots(g).sequence() == [0, 1, 2, 1, 3, 1]


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 15).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=20),
        )
    )
)
def test_labels_equal_component_oracle(case):
    n, raw = case
    edges = {(min(a, b), max(a, b)): 1.0 for a, b in raw if a != b}
    labels = label_shots(SimilarityGraph(tuple(range(n)), edges)).sequence()
    assert labels == oracle_components(n, edges)
