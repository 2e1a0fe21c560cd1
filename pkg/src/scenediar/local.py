"""Speaker clustering inside each dialogue scene."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import DialogueScene, LocalSpeaker, Partition, Shot, SpeechSegment, StructureError
from .hac import select_cut, ward_hac
from .metric import CovarianceModel


@dataclass(frozen=True)
class Thresholds:
    theta_single: float = 0.10
    theta_pair: float = 12.2


def local_speaker_id(scene_id: int, index: int) -> str:
    return f"s{scene_id:04d}.{index:02d}"


def pooled_embedding(segments: Sequence[SpeechSegment]) -> np.ndarray:
    """Duration-weighted mean of segment embeddings."""
    weights = np.array([s.duration for s in segments], dtype=np.float64)
    stack = np.stack([s.embedding for s in segments])
    return (weights[:, None] * stack).sum(axis=0) / weights.sum()


def diarize_scene(
    scene: DialogueScene,
    segments: Mapping[str, SpeechSegment],
    metric: CovarianceModel,
    thresholds: Thresholds = Thresholds(),
) -> list[LocalSpeaker]:
    """Cluster the segments a scene covers into local speakers.

    Speakers are numbered in order of their earliest segment.
    """
    members = [segments[sid] for sid in scene.covered_segments]
    if not members:
        return []
    missing = [s.segment_id for s in members if s.embedding is None]
    if missing:
        raise StructureError(f"scene {scene.scene_id}: segments without embedding: {missing}")
    points = np.stack([s.embedding for s in members])
    dendro = ward_hac(points, metric)
    choice = select_cut(dendro, points, metric, thresholds.theta_single, thresholds.theta_pair)

    groups: dict[int, list[SpeechSegment]] = {}
    for seg, c in zip(members, choice.labels):
        groups.setdefault(int(c), []).append(seg)
    ordered = sorted(groups.values(), key=lambda g: min((s.start, s.segment_id) for s in g))
    speakers = []
    for idx, group in enumerate(ordered):
        group.sort(key=lambda s: (s.start, s.segment_id))
        speakers.append(
            LocalSpeaker(
                local_speaker_id=local_speaker_id(scene.scene_id, idx),
                scene_id=scene.scene_id,
                member_segments=tuple(s.segment_id for s in group),
                pooled_embedding=pooled_embedding(group),
                total_duration=sum(s.duration for s in group),
            )
        )
    return speakers


def diarize_scenes(
    scenes: Sequence[DialogueScene],
    segments: Sequence[SpeechSegment],
    metric: CovarianceModel,
    thresholds: Thresholds = Thresholds(),
) -> list[LocalSpeaker]:
    by_id = {s.segment_id: s for s in segments}
    out = []
    for scene in scenes:
        out.extend(diarize_scene(scene, by_id, metric, thresholds))
    return out


def shot_at(shots: Sequence[Shot], t_ms: float) -> Shot:
    """Shot displayed at time ``t_ms``; the nearest shot when none contains it."""
    for shot in shots:
        if shot.time_span[0] <= t_ms < shot.time_span[1]:
            return shot

    def gap(shot):
        s, e = shot.time_span
        return (max(s - t_ms, t_ms - e, 0), shot.shot_id)

    return min(shots, key=gap)


def naive_alternation_baseline(
    scene: DialogueScene,
    shots: Sequence[Shot],
    segments: Mapping[str, SpeechSegment],
) -> Partition:
    """Label each segment with the shot label on screen at its midpoint."""
    lo, hi = scene.shot_span
    scene_shots = list(shots[lo:hi])
    if any(s.label is None for s in scene_shots):
        raise StructureError(f"scene {scene.scene_id}: shots must be labelled")
    assignment = {}
    for sid in scene.covered_segments:
        seg = segments[sid]
        midpoint = (seg.start + seg.end) / 2
        assignment[sid] = shot_at(scene_shots, midpoint).label
    return Partition(assignment)


def local_partition(speakers: Sequence[LocalSpeaker]) -> Partition:
    """Segment-level partition induced by local speakers."""
    return Partition(
        {sid: spk.local_speaker_id for spk in speakers for sid in spk.member_segments}
    )
