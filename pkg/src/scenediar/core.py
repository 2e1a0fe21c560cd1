"""Domain types shared by every stage of the pipeline.

Times are integer milliseconds and intervals are half-open ``(start, end)``
tuples throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

N_BLOCKS = 30
BLOCK_GRID = (5, 6)  # rows, columns
DEFAULT_BINS = 24
DEFAULT_EMBEDDING_DIM = 60

Interval = tuple[int, int]


class StructureError(ValueError):
    """Input violates a structural contract (shape, count, ordering)."""


def interval_overlap(a: Interval, b: Interval) -> int:
    """Length of the intersection of two half-open intervals."""
    if a[0] > a[1] or b[0] > b[1]:
        raise StructureError(f"malformed interval in {a!r}, {b!r}")
    return max(0, min(a[1], b[1]) - max(a[0], b[0]))


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrameDescriptor:
    """Per-frame colour histograms, one row per image block."""

    frame_index: int
    timestamp: int
    blocks: np.ndarray

    def __post_init__(self):
        blocks = np.asarray(self.blocks)
        if blocks.ndim != 2 or blocks.shape[0] != N_BLOCKS:
            raise StructureError(
                f"frame {self.frame_index}: expected {N_BLOCKS} blocks, got shape {blocks.shape}"
            )
        if blocks.shape[1] == 0:
            raise StructureError(f"frame {self.frame_index}: empty histograms")
        if np.any(blocks < 0):
            raise StructureError(f"frame {self.frame_index}: negative bin count")
        object.__setattr__(self, "blocks", _frozen_array(blocks, dtype=np.float64))

    @property
    def bins(self) -> int:
        return self.blocks.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FrameDescriptor):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.timestamp == other.timestamp
            and np.array_equal(self.blocks, other.blocks)
        )


@dataclass(frozen=True)
class Shot:
    shot_id: int
    frame_span: Interval
    time_span: Interval
    first_frame: FrameDescriptor = field(repr=False, compare=False)
    last_frame: FrameDescriptor = field(repr=False, compare=False)
    label: Optional[int] = None

    def __post_init__(self):
        if self.frame_span[1] <= self.frame_span[0]:
            raise StructureError(f"shot {self.shot_id}: empty frame span {self.frame_span}")


@dataclass(frozen=True)
class ShotLabeling:
    alphabet_size: int
    label_of: Mapping[int, int]

    def sequence(self, shot_ids: Sequence[int] | None = None) -> list[int]:
        ids = sorted(self.label_of) if shot_ids is None else shot_ids
        return [self.label_of[i] for i in ids]


@dataclass(frozen=True, eq=False)
class SpeechSegment:
    segment_id: str
    time_span: Interval
    text: str = ""
    embedding: Optional[np.ndarray] = None
    ref_speaker: Optional[str] = None

    def __post_init__(self):
        start, end = self.time_span
        if end <= start:
            raise StructureError(f"segment {self.segment_id}: empty time span {self.time_span}")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            if emb.ndim != 1:
                raise StructureError(f"segment {self.segment_id}: embedding must be a vector")
            object.__setattr__(self, "embedding", _frozen_array(emb))

    @property
    def duration(self) -> int:
        return self.time_span[1] - self.time_span[0]

    @property
    def start(self) -> int:
        return self.time_span[0]

    @property
    def end(self) -> int:
        return self.time_span[1]

    def __eq__(self, other):
        if not isinstance(other, SpeechSegment):
            return NotImplemented
        same_emb = (self.embedding is None and other.embedding is None) or (
            self.embedding is not None
            and other.embedding is not None
            and np.array_equal(self.embedding, other.embedding)
        )
        return (
            self.segment_id == other.segment_id
            and self.time_span == other.time_span
            and self.text == other.text
            and self.ref_speaker == other.ref_speaker
            and same_emb
        )

    def replace(self, **changes) -> "SpeechSegment":
        values = dict(
            segment_id=self.segment_id,
            time_span=self.time_span,
            text=self.text,
            embedding=self.embedding,
            ref_speaker=self.ref_speaker,
        )
        values.update(changes)
        return SpeechSegment(**values)


@dataclass(frozen=True)
class DialogueScene:
    scene_id: int
    labels: tuple[int, ...]
    shot_spans: tuple[Interval, ...]
    time_span: Interval
    covered_segments: tuple[str, ...] = ()
    kind: str = "strict"

    @property
    def shot_span(self) -> Interval:
        return (self.shot_spans[0][0], self.shot_spans[-1][1])

    def with_segments(self, segment_ids: Sequence[str]) -> "DialogueScene":
        return DialogueScene(
            self.scene_id, self.labels, self.shot_spans, self.time_span,
            tuple(segment_ids), self.kind,
        )


@dataclass(frozen=True, eq=False)
class LocalSpeaker:
    local_speaker_id: str
    scene_id: int
    member_segments: tuple[str, ...]
    pooled_embedding: np.ndarray
    total_duration: int

    def __post_init__(self):
        if not self.member_segments:
            raise StructureError(f"local speaker {self.local_speaker_id} has no segments")
        object.__setattr__(self, "pooled_embedding", _frozen_array(self.pooled_embedding))


@dataclass(frozen=True)
class Partition:
    """Cluster assignment of items. Cluster ids are arbitrary hashables."""

    assignment: Mapping[str, object]

    @property
    def k(self) -> int:
        return len(set(self.assignment.values()))

    def clusters(self) -> list[list[str]]:
        groups: dict[object, list[str]] = {}
        for item, cluster in self.assignment.items():
            groups.setdefault(cluster, []).append(item)
        return sorted(sorted(g) for g in groups.values())


class CannotLinkSet(frozenset):
    """Unordered pairs of item ids that must never share a cluster."""

    def __new__(cls, pairs=()):
        normalised = []
        for a, b in pairs:
            if a == b:
                raise StructureError(f"cannot-link pair on a single item {a!r}")
            normalised.append(frozenset((a, b)))
        return super().__new__(cls, normalised)

    def involves(self, a, b) -> bool:
        return frozenset((a, b)) in self
