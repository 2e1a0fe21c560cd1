"""Shot segmentation and similar-shot labelling from block colour histograms."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import FrameDescriptor, Shot, ShotLabeling, StructureError


def _block_correlations(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-block Pearson correlation of two (..., blocks, bins) arrays.

    A block with zero variance on either side scores 1 when the two blocks
    are element-wise equal and 0 otherwise.
    """
    ca = a - a.mean(axis=-1, keepdims=True)
    cb = b - b.mean(axis=-1, keepdims=True)
    num = (ca * cb).sum(axis=-1)
    va = (ca * ca).sum(axis=-1)
    vb = (cb * cb).sum(axis=-1)
    degenerate = (va == 0) | (vb == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = num / np.sqrt(va * vb)
    equal = np.all(a == b, axis=-1)
    r = np.where(degenerate, 0.0, r)
    r = np.where(equal, 1.0, r)
    return np.clip(r, -1.0, 1.0)


def frame_correlation(a: FrameDescriptor, b: FrameDescriptor) -> float:
    """Mean over the 30 blocks of the Pearson correlation of block histograms."""
    if a.blocks.shape != b.blocks.shape:
        raise StructureError(
            f"descriptor shapes differ: {a.blocks.shape} vs {b.blocks.shape}"
        )
    return float(_block_correlations(a.blocks, b.blocks).mean())


def consecutive_correlations(frames: Sequence[FrameDescriptor]) -> np.ndarray:
    """Correlation between each frame and its successor, vectorised."""
    if len(frames) < 2:
        return np.zeros(0)
    stack = np.stack([f.blocks for f in frames])
    return _block_correlations(stack[:-1], stack[1:]).mean(axis=-1)


def detect_cuts(frames: Sequence[FrameDescriptor], theta_cut: float) -> list[Shot]:
    """Split a frame sequence into shots at every abrupt transition.

    A cut is placed between frames ``i`` and ``i + 1`` whenever their
    correlation falls below ``theta_cut``. Gradual transitions are not
    modelled.
    """
    if not frames:
        raise StructureError("cannot detect cuts in an empty frame sequence")
    if not -1.0 < theta_cut < 1.0:
        raise StructureError(f"theta_cut must lie in (-1, 1), got {theta_cut}")
    bins = frames[0].blocks.shape
    for f in frames:
        if f.blocks.shape != bins:
            raise StructureError(f"frame {f.frame_index}: inconsistent histogram shape")

    corr = consecutive_correlations(frames)
    cut_after = np.flatnonzero(corr < theta_cut)
    starts = [0] + [int(i) + 1 for i in cut_after]
    ends = starts[1:] + [len(frames)]

    frame_ms = _frame_period(frames)
    shots = []
    for shot_id, (s, e) in enumerate(zip(starts, ends)):
        t_end = frames[e].timestamp if e < len(frames) else frames[-1].timestamp + frame_ms
        shots.append(
            Shot(
                shot_id=shot_id,
                frame_span=(frames[s].frame_index, frames[e - 1].frame_index + 1),
                time_span=(frames[s].timestamp, t_end),
                first_frame=frames[s],
                last_frame=frames[e - 1],
            )
        )
    return shots


def _frame_period(frames: Sequence[FrameDescriptor]) -> int:
    if len(frames) < 2:
        return 40
    return max(1, round((frames[-1].timestamp - frames[0].timestamp) / (len(frames) - 1)))


def cut_indices(shots: Sequence[Shot]) -> list[int]:
    """Frame indices at which a new shot starts (the first shot excluded)."""
    return [s.frame_span[0] for s in shots[1:]]


@dataclass(frozen=True)
class SimilarityGraph:
    nodes: tuple[int, ...]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)

    def neighbours(self, node: int) -> list[int]:
        out = [b if a == node else a for (a, b) in self.edges if node in (a, b)]
        return sorted(out)


def detect_similar_shots(
    shots: Sequence[Shot], theta_sim: float, window: Optional[int] = 30
) -> SimilarityGraph:
    """Link shot pairs whose boundary frames correlate at least ``theta_sim``.

    For an earlier shot ``p`` and a later shot ``q``, the last frame of ``p`` is
    compared with the first frame of ``q``. Only pairs at most ``window``
    positions apart in the shot list are examined (``None`` means unbounded).
    """
    n = len(shots)
    edges: dict[tuple[int, int], float] = {}
    if n < 2:
        return SimilarityGraph(tuple(s.shot_id for s in shots), edges)
    last = np.stack([s.last_frame.blocks for s in shots])
    first = np.stack([s.first_frame.blocks for s in shots])
    reach = n - 1 if window is None else min(window, n - 1)
    for gap in range(1, reach + 1):
        scores = _block_correlations(last[: n - gap], first[gap:]).mean(axis=-1)
        for p in np.flatnonzero(scores >= theta_sim):
            p = int(p)
            a, b = shots[p].shot_id, shots[p + gap].shot_id
            edges[(min(a, b), max(a, b))] = float(scores[p])
    ordered = dict(sorted(edges.items()))
    return SimilarityGraph(tuple(s.shot_id for s in shots), ordered)


def label_shots(graph: SimilarityGraph) -> ShotLabeling:
    """Connected components of the similarity graph, numbered by first occurrence."""
    parent = {node: node for node in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in graph.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    label_of_root: dict[int, int] = {}
    label_of: dict[int, int] = {}
    for node in sorted(graph.nodes):
        root = find(node)
        if root not in label_of_root:
            label_of_root[root] = len(label_of_root)
        label_of[node] = label_of_root[root]
    return ShotLabeling(alphabet_size=len(label_of_root), label_of=label_of)


def apply_labels(shots: Sequence[Shot], labeling: ShotLabeling) -> list[Shot]:
    return [
        Shot(s.shot_id, s.frame_span, s.time_span, s.first_frame, s.last_frame,
             labeling.label_of[s.shot_id])
        for s in shots
    ]
