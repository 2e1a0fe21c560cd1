"""Second-stage clustering of local speakers across scenes.

Local speakers that share a dialogue scene can never be the same person, so
each such pair becomes a cannot-link constraint. The constraint is inherited
by every cluster containing either member, and the agglomeration halts once
all remaining merges are forbidden. The surviving roots form an irreducible
forest, each tree of which is cut independently by silhouette.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Hashable, Optional, Sequence

import numpy as np

from .core import CannotLinkSet, LocalSpeaker, Partition
from .hac import Dendrogram, agglomerate, check_constraints, constraint_matrix, select_cut
from .local import Thresholds
from .metric import CovarianceModel


@dataclass(frozen=True, eq=False)
class ConstrainedDendrogramForest:
    trees: tuple[Dendrogram, ...]
    constraints: CannotLinkSet
    history: Dendrogram

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def is_irreducible(self) -> bool:
        """True when every pair of trees is separated by a cannot-link pair."""
        leaf_sets = [set(t.leaves) for t in self.trees]
        for a, b in combinations(range(len(leaf_sets)), 2):
            if not any(
                (x in leaf_sets[a] and y in leaf_sets[b]) or (y in leaf_sets[a] and x in leaf_sets[b])
                for x, y in (tuple(p) for p in self.constraints)
            ):
                return False
        return True


def derive_cannot_links(local_speakers: Sequence[LocalSpeaker]) -> CannotLinkSet:
    """Every pair of distinct local speakers found in the same scene."""
    by_scene: dict[Hashable, list[str]] = {}
    for spk in local_speakers:
        by_scene.setdefault(spk.scene_id, []).append(spk.local_speaker_id)
    pairs = []
    for ids in by_scene.values():
        pairs.extend(combinations(sorted(set(ids)), 2))
    return CannotLinkSet(pairs)


def constrained_hac(
    points,
    ids: Sequence[Hashable],
    constraints: CannotLinkSet,
    metric: Optional[CovarianceModel] = None,
) -> ConstrainedDendrogramForest:
    """Ward agglomeration that never joins a cannot-link pair."""
    points = np.asarray(points, dtype=np.float64)
    blocked = constraint_matrix(ids, constraints)
    history = agglomerate(points, metric, blocked, ids)
    check_constraints(history, constraints)
    return ConstrainedDendrogramForest(tuple(history.trees()), constraints, history)


def partition_forest(
    forest: ConstrainedDendrogramForest,
    points,
    ids: Sequence[Hashable],
    metric: Optional[CovarianceModel] = None,
    thresholds: Thresholds = Thresholds(),
) -> Partition:
    """Silhouette-cut each tree separately and pool the clusters.

    Final cluster numbers follow the order in which clusters first appear in
    ``ids``.
    """
    points = np.asarray(points, dtype=np.float64)
    index = {item: i for i, item in enumerate(ids)}
    raw = {}
    for t, tree in enumerate(forest.trees):
        tree_points = points[[index[leaf] for leaf in tree.leaves]]
        choice = select_cut(tree, tree_points, metric, thresholds.theta_single, thresholds.theta_pair)
        for leaf, c in zip(tree.leaves, choice.labels):
            raw[leaf] = (t, int(c))
    return _renumber(raw, ids)


def _renumber(raw: dict, ids: Sequence[Hashable]) -> Partition:
    numbering: dict = {}
    return Partition({item: numbering.setdefault(raw[item], len(numbering)) for item in ids})


def unconstrained_global(
    points,
    ids: Sequence[Hashable],
    metric: Optional[CovarianceModel] = None,
    thresholds: Thresholds = Thresholds(),
) -> Partition:
    """Plain Ward + silhouette over all local speakers, ignoring scene structure."""
    points = np.asarray(points, dtype=np.float64)
    dendro = agglomerate(points, metric, None, ids)
    choice = select_cut(dendro, points, metric, thresholds.theta_single, thresholds.theta_pair)
    return _renumber({leaf: (0, int(c)) for leaf, c in zip(ids, choice.labels)}, ids)


def fixed_cut_global(
    points,
    ids: Sequence[Hashable],
    metric: Optional[CovarianceModel] = None,
    height: float = 8.0,
) -> Partition:
    """Unconstrained Ward cut at a fixed merge cost (a low cut over-segments)."""
    points = np.asarray(points, dtype=np.float64)
    dendro = agglomerate(points, metric, None, ids)
    n_merges = sum(1 for m in dendro.merges if m.height <= height)
    labels = dendro.cut(n_merges)
    return _renumber({leaf: (0, int(c)) for leaf, c in zip(ids, labels)}, ids)


def estimate_speaker_count(partition: Partition) -> int:
    return partition.k


@dataclass(frozen=True, eq=False)
class GlobalResult:
    speaker_of: Partition  # local speaker id -> global speaker
    segments: Partition  # segment id -> global speaker
    forest: Optional[ConstrainedDendrogramForest]
    constrained: bool

    @property
    def k(self) -> int:
        return self.speaker_of.k


def global_diarization(
    local_speakers: Sequence[LocalSpeaker],
    metric: Optional[CovarianceModel] = None,
    thresholds: Thresholds = Thresholds(),
    constrained: bool = True,
) -> GlobalResult:
    """Cluster local speakers across the episode and project onto segments."""
    speakers = sorted(local_speakers, key=lambda s: s.local_speaker_id)
    ids = [s.local_speaker_id for s in speakers]
    if not speakers:
        return GlobalResult(Partition({}), Partition({}), None, constrained)
    points = np.stack([s.pooled_embedding for s in speakers])
    forest = None
    if constrained:
        forest = constrained_hac(points, ids, derive_cannot_links(speakers), metric)
        speaker_of = partition_forest(forest, points, ids, metric, thresholds)
    else:
        speaker_of = unconstrained_global(points, ids, metric, thresholds)
    segments = Partition(
        {sid: speaker_of.assignment[s.local_speaker_id] for s in speakers for sid in s.member_segments}
    )
    return GlobalResult(speaker_of, segments, forest, constrained)


def tree_count_spread(
    points,
    ids: Sequence[Hashable],
    constraints: CannotLinkSet,
    metric: Optional[CovarianceModel] = None,
    permutations: int = 20,
    seed: int = 0,
) -> list[int]:
    """Number of forest trees obtained under random reorderings of the input.

    Reordering only changes which of several exactly tied merges goes first,
    so the spread measures order dependence of the irreducible partition.
    """
    points = np.asarray(points, dtype=np.float64)
    rng = np.random.default_rng(seed)
    counts = []
    for _ in range(permutations):
        order = rng.permutation(len(ids))
        perm_ids = [ids[i] for i in order]
        forest = constrained_hac(points[order], perm_ids, constraints, metric)
        counts.append(forest.n_trees)
    return counts
