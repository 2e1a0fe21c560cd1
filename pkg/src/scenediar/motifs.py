"""Alternating-shot dialogue motifs and the speech they cover.

A shot string ``s`` over label ids contains a strict motif for the label pair
``(l1, l2)`` wherever ``l1 (l2 l1)+`` occurs. Matches are reported per
maximal alternating run: a run of two alternating labels of length ``L >= 3``
yields one match spanning its longest odd-length prefix, oriented by the
label the run starts with.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

from .core import DialogueScene, Interval, Shot, SpeechSegment, interval_overlap


class MotifKind(str, Enum):
    STRICT = "strict"
    ISOLATED_PAIR = "isolated-pair"
    MERGED = "merged"


@dataclass(frozen=True, order=True)
class MotifMatch:
    span: Interval
    pair: tuple[int, int]
    kind: MotifKind = MotifKind.STRICT

    @property
    def labels(self) -> frozenset[int]:
        return frozenset(self.pair)

    @property
    def length(self) -> int:
        return self.span[1] - self.span[0]


def detect_strict_motifs(labels: Sequence[int]) -> set[MotifMatch]:
    """All maximal ``l1 (l2 l1)+`` runs of a label sequence."""
    n = len(labels)
    # alt[i]: labels[i:i+3] reads x y x with x != y
    alt = [
        labels[i] == labels[i + 2] and labels[i] != labels[i + 1] for i in range(n - 2)
    ]
    matches = set()
    i = 0
    while i < len(alt):
        if not alt[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(alt) and alt[j + 1]:
            j += 1
        start, end = i, j + 3
        if (end - start) % 2 == 0:
            end -= 1
        matches.add(MotifMatch((start, end), (labels[start], labels[start + 1])))
        i = j + 1
    return matches


def alternating_pairs(labels: Sequence[int]) -> set[tuple[int, int]]:
    """Ordered label pairs whose alternation pattern occurs somewhere in ``labels``."""
    pairs = set()
    for i in range(len(labels) - 2):
        if labels[i] == labels[i + 2] and labels[i] != labels[i + 1]:
            pairs.add((labels[i], labels[i + 1]))
    return pairs


def _isolated_pairs(strict: set[MotifMatch], labels: Sequence[int]) -> list[MotifMatch]:
    by_pair: dict[frozenset[int], list[Interval]] = {}
    for m in strict:
        by_pair.setdefault(m.labels, []).append(m.span)
    found = []
    for i in range(len(labels) - 1):
        key = frozenset((labels[i], labels[i + 1]))
        spans = by_pair.get(key)
        if not spans or len(key) < 2:
            continue
        if any(s <= i and i + 2 <= e for s, e in spans):
            continue
        found.append(MotifMatch((i, i + 2), (labels[i], labels[i + 1]), MotifKind.ISOLATED_PAIR))
    return found


def apply_extensions(
    strict: set[MotifMatch],
    labels: Sequence[int],
    shots: Optional[Sequence[Shot]] = None,
) -> list[DialogueScene]:
    """Grow strict motifs into dialogue scenes.

    Adjacent label pairs that also alternate strictly elsewhere in the episode
    are added as isolated-pair matches. Matches sharing a label whose shot
    spans overlap or touch are then merged, transitively, into one scene.
    Scene time spans come from ``shots`` when given, else stay shot-indexed.
    """
    matches = sorted(strict) + _isolated_pairs(strict, labels)
    matches.sort()
    n = len(matches)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(n):
        for b in range(a + 1, n):
            ma, mb = matches[a], matches[b]
            touching = ma.span[0] <= mb.span[1] and mb.span[0] <= ma.span[1]
            if touching and ma.labels & mb.labels:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups: dict[int, list[MotifMatch]] = {}
    for idx, m in enumerate(matches):
        groups.setdefault(find(idx), []).append(m)

    scenes = []
    for members in sorted(groups.values(), key=lambda g: min(m.span for m in g)):
        spans = _union(m.span for m in members)
        member_labels = sorted(set().union(*(m.labels for m in members)))
        hull = (spans[0][0], spans[-1][1])
        if shots is not None:
            time_span = (shots[hull[0]].time_span[0], shots[hull[1] - 1].time_span[1])
        else:
            time_span = hull
        kind = members[0].kind if len(members) == 1 else MotifKind.MERGED
        scenes.append(
            DialogueScene(
                len(scenes), tuple(member_labels), tuple(spans), time_span, kind=kind.value
            )
        )
    return scenes


def _union(spans) -> list[Interval]:
    merged: list[list[int]] = []
    for s, e in sorted(spans):
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def assign_segments(
    scenes: Sequence[DialogueScene], segments: Sequence[SpeechSegment]
) -> list[DialogueScene]:
    """Attach each segment to the scene overlapping at least half of it.

    When several scenes qualify the largest overlap wins, ties going to the
    earlier scene. A segment is attached to at most one scene.
    """
    covered: list[list[str]] = [[] for _ in scenes]
    order = sorted(range(len(scenes)), key=lambda k: scenes[k].shot_span)
    for seg in sorted(segments, key=lambda s: (s.time_span, s.segment_id)):
        best, best_overlap = None, -1
        for k in order:
            ov = interval_overlap(seg.time_span, scenes[k].time_span)
            if 2 * ov >= seg.duration and ov > best_overlap:
                best, best_overlap = k, ov
        if best is not None:
            covered[best].append(seg.segment_id)
    return [scene.with_segments(ids) for scene, ids in zip(scenes, covered)]


@dataclass
class MotifReport:
    coverage: float
    speech_per_scene: Optional[float]
    speakers_per_scene: Optional[float]
    main_speakers_in_scenes: Optional[float]
    speaker_count_histogram: dict[int, int]
    n_scenes: int

    def to_dict(self) -> dict:
        return {
            "coverage_pct": self.coverage,
            "speech_per_scene_s": self.speech_per_scene,
            "speakers_per_scene": self.speakers_per_scene,
            "main_speakers_in_scenes_pct": self.main_speakers_in_scenes,
            "speaker_count_histogram": {str(k): v for k, v in sorted(self.speaker_count_histogram.items())},
            "n_scenes": self.n_scenes,
        }


def motif_statistics(
    scenes: Sequence[DialogueScene],
    segments: Sequence[SpeechSegment],
    ref_speakers: Optional[Mapping[str, str]] = None,
    main_share: float = 0.05,
) -> MotifReport:
    """Coverage and per-scene speech/speaker statistics.

    Per-scene means are taken over scenes that cover at least one segment.
    Speaker fields are ``None`` without reference speakers.
    """
    durations = {s.segment_id: s.duration for s in segments}
    total = sum(durations.values())
    covered_ids = [sid for sc in scenes for sid in sc.covered_segments]
    covered = sum(durations[sid] for sid in covered_ids)
    coverage = 100.0 * covered / total if total else 0.0

    speaking = [sc for sc in scenes if sc.covered_segments]
    speech_per_scene = None
    if speaking:
        speech_per_scene = sum(
            sum(durations[sid] for sid in sc.covered_segments) for sc in speaking
        ) / len(speaking) / 1000.0

    speakers_per_scene = None
    main_in_scenes = None
    histogram: dict[int, int] = {}
    if ref_speakers is not None:
        for sc in speaking:
            count = len({ref_speakers[sid] for sid in sc.covered_segments})
            histogram[count] = histogram.get(count, 0) + 1
        if speaking:
            speakers_per_scene = sum(k * v for k, v in histogram.items()) / len(speaking)
        talk: dict[str, int] = {}
        for sid, d in durations.items():
            talk[ref_speakers[sid]] = talk.get(ref_speakers[sid], 0) + d
        main = [spk for spk, t in talk.items() if total and t >= main_share * total]
        in_scenes = {ref_speakers[sid] for sid in covered_ids}
        if main:
            main_in_scenes = 100.0 * sum(spk in in_scenes for spk in main) / len(main)
    return MotifReport(
        coverage, speech_per_scene, speakers_per_scene, main_in_scenes, histogram, len(scenes)
    )
