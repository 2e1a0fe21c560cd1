import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from scenediar.core import CannotLinkSet, LocalSpeaker, Partition
from scenediar.globaldiar import (
    constrained_hac,
    derive_cannot_links,
    estimate_speaker_count,
    global_diarization,
    partition_forest,
    tree_count_spread,
    unconstrained_global,
)
from scenediar.hac import silhouette_cut, ward_hac
from scenediar.oracles import oracle_cannot_links, oracle_hac


def speaker(sid, scene, emb=(0.0,), segments=None):
    return LocalSpeaker(sid, scene, tuple(segments or [sid + ".seg"]), np.asarray(emb, float), 1000)


def test_cannot_links_from_shared_scenes():
    spk = [speaker("s1", "A"), speaker("s2", "A"), speaker("s3", "B")]
    assert derive_cannot_links(spk) == CannotLinkSet([("s1", "s2")])
    trio = [speaker(f"t{i}", 0) for i in range(3)]
    assert len(derive_cannot_links(trio)) == 3


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=10))
def test_cannot_links_equal_segment_inclusion_oracle(scene_of):
    speakers = [
        speaker(f"s{i:02d}", sc, segments=[f"g{i:02d}a", f"g{i:02d}b"]) for i, sc in enumerate(scene_of)
    ]
    scene_segments = {}
    for spk in speakers:
        scene_segments.setdefault(spk.scene_id, set()).update(spk.member_segments)
    speaker_segments = {spk.local_speaker_id: set(spk.member_segments) for spk in speakers}
    expected = oracle_cannot_links(scene_segments, speaker_segments)
    assert set(derive_cannot_links(speakers)) == expected


FIG_IDS = ["s11", "s12", "s21", "s22"]
FIG_POINTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 5.0], [1.2, 5.0]])
FIG_LINKS = CannotLinkSet([("s11", "s21"), ("s12", "s22")])


def test_worked_example_gives_two_trees():
    forest = constrained_hac(FIG_POINTS, FIG_IDS, FIG_LINKS)
    first, second = forest.history.merges
    assert (first.a, first.b) == (0, 1)
    assert (second.a, second.b) == (2, 3)
    assert forest.n_trees == 2
    assert [t.leaves for t in forest.trees] == [("s11", "s12"), ("s21", "s22")]
    assert forest.is_irreducible()
    part = partition_forest(forest, FIG_POINTS, FIG_IDS)
    assert estimate_speaker_count(part) >= 2


def test_empty_constraints_match_plain_ward(rng):
    x = rng.normal(size=(9, 3))
    ids = [f"s{i}" for i in range(9)]
    forest = constrained_hac(x, ids, CannotLinkSet())
    plain = ward_hac(x, leaves=ids)
    assert forest.n_trees == 1
    assert [(m.a, m.b, m.height) for m in forest.history.merges] == [
        (m.a, m.b, m.height) for m in plain.merges
    ]
    assert partition_forest(forest, x, ids) == unconstrained_global(x, ids)
    assert unconstrained_global(x, ids).k == silhouette_cut(plain, x).k


def test_singleton_trees_each_count_once():
    ids = ["a", "b", "c"]
    links = CannotLinkSet(itertools.combinations(ids, 2))
    x = np.zeros((3, 2))
    forest = constrained_hac(x, ids, links)
    assert forest.n_trees == 3
    assert partition_forest(forest, x, ids).k == 3


def test_two_trees_of_two_clouds_give_four(rng):
    centres = np.array([[0, 0], [40, 0], [0, 40], [40, 40]], dtype=float)
    x = np.concatenate([c + rng.normal(size=(5, 2)) for c in centres])
    ids = [f"p{i:02d}" for i in range(20)]
    left, right = ids[:10], ids[10:]
    links = CannotLinkSet(itertools.product(left, right))
    forest = constrained_hac(x, ids, links)
    assert forest.n_trees == 2
    assert partition_forest(forest, x, ids).k == 4


def test_single_local_speaker():
    assert unconstrained_global(np.zeros((1, 3)), ["only"]).k == 1
    assert estimate_speaker_count(Partition({})) == 0
    assert global_diarization([]).k == 0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_forest_equals_membership_oracle(seed, n):
    r = np.random.default_rng(seed)
    x = r.normal(size=(n, 2)) * 3
    ids = [f"s{i}" for i in range(n)]
    pairs = [p for p in itertools.combinations(range(n), 2) if r.random() < 0.3]
    forest = constrained_hac(x, ids, CannotLinkSet((ids[a], ids[b]) for a, b in pairs))
    oracle = oracle_hac(x, pairs)
    assert oracle.violations == 0
    assert [(m.a, m.b, m.new_id) for m in forest.history.merges] == [
        (a, b, c) for a, b, _, c in oracle.merges
    ]
    assert [frozenset(ids.index(leaf) for leaf in t.leaves) for t in forest.trees] == oracle.roots


def random_episode(r, scenes=6, roster=5, dim=4):
    means = r.normal(size=(roster, dim)) * 4
    speakers = []
    for sc in range(scenes):
        present = r.choice(roster, size=int(r.integers(1, 4)), replace=False)
        for k, who in enumerate(present):
            speakers.append(speaker(f"s{sc:04d}.{k:02d}", sc, means[who] + r.normal(size=dim)))
    return speakers


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forest_invariants(seed):
    r = np.random.default_rng(seed)
    speakers = random_episode(r)
    ids = [s.local_speaker_id for s in speakers]
    x = np.stack([s.pooled_embedding for s in speakers])
    links = derive_cannot_links(speakers)
    forest = constrained_hac(x, ids, links)
    per_scene = max(sum(1 for s in speakers if s.scene_id == sc) for sc in {s.scene_id for s in speakers})
    assert forest.n_trees >= per_scene
    assert forest.is_irreducible()
    for tree in forest.trees:
        leaves = set(tree.leaves)
        assert not any(set(p) <= leaves for p in links)
        h = tree.heights
        assert all(b >= a - 1e-9 * max(1.0, abs(a)) for a, b in zip(h, h[1:]))
    part = partition_forest(forest, x, ids)
    assert part.k >= forest.n_trees
    for cluster in part.clusters():
        assert not any(set(p) <= set(cluster) for p in links)


def test_constrained_equals_unconstrained_without_shared_scenes(rng):
    speakers = [speaker(f"s{i:04d}.00", i, rng.normal(size=3) * 5) for i in range(8)]
    a = global_diarization(speakers, constrained=True)
    b = global_diarization(speakers, constrained=False)
    assert a.speaker_of == b.speaker_of and a.segments == b.segments


def test_tree_count_is_order_independent_without_ties(rng):
    speakers = random_episode(rng, scenes=8)
    ids = [s.local_speaker_id for s in speakers]
    x = np.stack([s.pooled_embedding for s in speakers])
    counts = tree_count_spread(x, ids, derive_cannot_links(speakers), permutations=10)
    assert len(set(counts)) == 1


def test_local_split_can_never_remerge():
    # one person wrongly split inside scene 0 stays two global speakers
    same = np.array([1.0, 1.0])
    speakers = [speaker("s0000.00", 0, same), speaker("s0000.01", 0, same + 0.01),
                speaker("s0001.00", 1, same + 0.02)]
    result = global_diarization(speakers, constrained=True)
    assert result.forest.n_trees == 2
    who = result.speaker_of.assignment
    assert who["s0000.00"] != who["s0000.01"]
