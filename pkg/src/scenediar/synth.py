"""Synthetic episodes with full ground truth.

An episode is a sequence of dialogue scenes separated by one or more
one-off shots. A scene with one or two speakers alternates two cameras
(``A B A ... A``); a three-speaker scene shares its main camera between two
alternations (``A B A ... A C A ... A``). Every camera has a fixed block
histogram; frames add Gaussian noise to it.

Speaker embeddings are generated in a whitened space where within-speaker
noise has unit variance per dimension and speaker means sit pairwise
``separation`` apart. Each scene adds a shared bias vector (per-dimension
standard deviation ``bias``), the stand-in for background music. A fixed
random linear map then takes vectors to the observed space, so that only a
Mahalanobis metric recovers the whitened geometry.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .core import N_BLOCKS, DialogueScene, FrameDescriptor, Shot, SpeechSegment, StructureError
from .io.frames import frame_timestamp
from .io.srt import _split_turns

PIXELS_PER_BLOCK = 7680

_WORDS = (
    "well you know I never said that was the plan but we can still "
    "try again tomorrow if nobody else finds out what happened here tonight"
).split()


class SynthSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    episodes: int = 1
    scenes_per_episode: int = 8
    roster: int = 8
    roster_skew: float = 0.8
    speaker_mix: tuple[float, float, float] = (0.2206, 0.6985, 0.0809)
    cycles: tuple[int, int] = (3, 6)
    segments_per_shot: float = 1.0
    separation: float = 8.0
    bias: float = 0.0
    reaction_rate: float = 0.0
    dashed_rate: float = 0.0
    interstitial: tuple[int, int] = (1, 3)
    interstitial_speech: float = 0.5
    shot_frames: tuple[int, int] = (40, 100)
    bins: int = 24
    noise: float = 0.2
    fps: tuple[int, int] = (25, 1)
    dim: int = 60
    render_frames: bool = True
    # the observed embedding space is shared by every corpus with this seed
    space_seed: int = 0

    def __post_init__(self):
        for name in ("episodes", "scenes_per_episode", "roster", "bins", "dim"):
            if getattr(self, name) < 1:
                raise SynthSpecError(f"{name} must be positive")
        if self.separation <= 0 or self.noise < 0 or self.bias < 0:
            raise SynthSpecError("separation must be positive; noise and bias non-negative")
        if len(self.speaker_mix) != 3 or any(p < 0 for p in self.speaker_mix) or sum(self.speaker_mix) <= 0:
            raise SynthSpecError("speaker_mix needs three non-negative weights")
        max_speakers = max(k + 1 for k, p in enumerate(self.speaker_mix) if p > 0)
        if max_speakers > self.roster:
            raise SynthSpecError(
                f"scenes may need {max_speakers} speakers but the roster has {self.roster}"
            )
        if self.roster > self.dim:
            raise SynthSpecError("roster cannot exceed the embedding dimension")
        if self.bins < 2:
            raise SynthSpecError("bins must be at least 2")
        if not 1 <= self.cycles[0] <= self.cycles[1]:
            raise SynthSpecError("cycles must satisfy 1 <= low <= high")
        if not 1 <= self.shot_frames[0] <= self.shot_frames[1]:
            raise SynthSpecError("shot_frames must satisfy 1 <= low <= high")
        if not 1 <= self.interstitial[0] <= self.interstitial[1]:
            raise SynthSpecError("at least one separating shot is required between scenes")
        for name in ("reaction_rate", "dashed_rate", "interstitial_speech"):
            if not 0 <= getattr(self, name) <= 1:
                raise SynthSpecError(f"{name} must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SynthSpecError(f"unknown synth keys: {sorted(unknown)}")
        coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
        return cls(**coerced)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class TruthScene:
    shot_span: tuple[int, int]
    cameras: tuple[int, ...]
    planned_speakers: tuple[str, ...]
    segments: list[str] = field(default_factory=list)

    def speakers(self, speaker_of: dict[str, str]) -> list[str]:
        return sorted({speaker_of[s] for s in self.segments})


@dataclass
class Episode:
    episode_id: str
    frames: list[FrameDescriptor]
    shot_frames: list[tuple[int, int]]
    cameras: list[int]
    segments: list[SpeechSegment]
    cues: list[tuple[int, int, list[str]]]
    scenes: list[TruthScene]
    reaction_segments: list[str]
    mixing: np.ndarray
    fps: tuple[int, int]
    bins: int

    @property
    def frame_count(self) -> int:
        return self.shot_frames[-1][1] if self.shot_frames else 0

    @property
    def speaker_of(self) -> dict[str, str]:
        return {s.segment_id: s.ref_speaker for s in self.segments}

    @property
    def cuts(self) -> list[int]:
        return [s for s, _ in self.shot_frames[1:]]

    @property
    def labels(self) -> list[int]:
        numbering: dict[int, int] = {}
        return [numbering.setdefault(c, len(numbering)) for c in self.cameras]

    def shot_time(self, shot: int) -> tuple[int, int]:
        s, e = self.shot_frames[shot]
        return frame_timestamp(s, *self.fps), frame_timestamp(e, *self.fps)

    def truth_shots(self) -> list[Shot]:
        """Labelled shots; boundary frames are ``None`` when frames were not rendered."""
        out = []
        for i, (f0, f1) in enumerate(self.shot_frames):
            first = self.frames[f0] if self.frames else None
            last = self.frames[f1 - 1] if self.frames else None
            out.append(Shot(i, (f0, f1), self.shot_time(i), first, last, self.labels[i]))
        return out

    def truth_scenes(self) -> list[DialogueScene]:
        labels = self.labels
        out = []
        for k, sc in enumerate(self.scenes):
            lo, hi = sc.shot_span
            out.append(
                DialogueScene(
                    k, tuple(sorted(set(labels[lo:hi]))), ((lo, hi),),
                    (self.shot_time(lo)[0], self.shot_time(hi - 1)[1]), tuple(sc.segments),
                    "merged" if len(sc.cameras) > 2 else "strict",
                )
            )
        return out

    def similar_shots(self) -> dict[int, list[int]]:
        by_cam: dict[int, list[int]] = {}
        for i, c in enumerate(self.cameras):
            by_cam.setdefault(c, []).append(i)
        return {i: [j for j in by_cam[c] if j != i] for i, c in enumerate(self.cameras)}

    def annotations(self) -> dict:
        return {
            "episode": self.episode_id,
            "fps": list(self.fps),
            "frame_count": self.frame_count,
            "cuts": self.cuts,
            "similar_shots": {str(k): v for k, v in self.similar_shots().items()},
            "speakers": self.speaker_of,
        }

    def truth(self) -> dict:
        speaker_of = self.speaker_of
        doc = self.annotations()
        doc.update(
            {
                "shots": [list(s) for s in self.shot_frames],
                "cameras": self.cameras,
                "labels": self.labels,
                "scenes": [
                    {
                        "shot_span": list(sc.shot_span),
                        "cameras": list(sc.cameras),
                        "planned_speakers": list(sc.planned_speakers),
                        "speakers": sc.speakers(speaker_of),
                        "segments": sc.segments,
                    }
                    for sc in self.scenes
                ],
                "reaction_segments": self.reaction_segments,
            }
        )
        return doc


def _camera_histogram(rng: np.random.Generator, bins: int) -> np.ndarray:
    return rng.dirichlet(np.full(bins, 0.5), size=N_BLOCKS) * PIXELS_PER_BLOCK


def _render_shot(rng, base: np.ndarray, n_frames: int, noise: float) -> np.ndarray:
    scale = base.std(axis=1, keepdims=True) * noise
    frames = base[None] + rng.normal(size=(n_frames,) + base.shape) * scale[None]
    return np.clip(np.rint(frames), 0, None)


def _speaker_means(rng, roster: int, dim: int, separation: float) -> np.ndarray:
    basis, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return basis[:, :roster].T * (separation / math.sqrt(2.0))


def _mixing_matrix(rng, dim: int) -> np.ndarray:
    u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    scales = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=dim))
    return (u * scales) @ v.T


def embedding_space(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Linear map and offset from whitened to observed embeddings."""
    rng = np.random.default_rng(spec.space_seed)
    return _mixing_matrix(rng, spec.dim), rng.normal(size=spec.dim) * 3.0


def plan_scene_sizes(spec: SynthSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Speakers per scene drawn from ``spec.speaker_mix``."""
    mix = np.asarray(spec.speaker_mix, dtype=float)
    return rng.choice(3, size=n, p=mix / mix.sum()) + 1


def _text(rng, n_words: int) -> str:
    return " ".join(rng.choice(_WORDS, size=n_words))


def generate_episode(spec: SynthSpec, seed: int, episode_id: str = "ep01") -> Episode:
    rng = np.random.default_rng(seed)
    roster = [f"spk{k:02d}" for k in range(spec.roster)]
    weights = 1.0 / np.arange(1, spec.roster + 1) ** spec.roster_skew
    weights /= weights.sum()
    means = _speaker_means(rng, spec.roster, spec.dim, spec.separation)
    mixing, offset = embedding_space(spec)

    shot_frames: list[tuple[int, int]] = []
    cameras: list[int] = []
    # per shot: speaker on screen (None for a silent listener) and scene index
    shot_roles: list[tuple[Optional[str], Optional[int]]] = []
    scenes: list[TruthScene] = []
    next_camera = 0
    frame_cursor = 0

    def add_shot(camera: int, shown: Optional[str], scene: Optional[int]) -> None:
        nonlocal frame_cursor
        length = int(rng.integers(spec.shot_frames[0], spec.shot_frames[1] + 1))
        shot_frames.append((frame_cursor, frame_cursor + length))
        cameras.append(camera)
        shot_roles.append((shown, scene))
        frame_cursor += length

    def interstitial() -> None:
        nonlocal next_camera
        for _ in range(int(rng.integers(spec.interstitial[0], spec.interstitial[1] + 1))):
            add_shot(next_camera, None, None)
            next_camera += 1

    sizes = plan_scene_sizes(spec, rng, spec.scenes_per_episode)
    scene_listeners: list[list[Optional[str]]] = []
    interstitial()
    for k, size in enumerate(sizes):
        speakers = list(rng.choice(roster, size=int(size), replace=False, p=weights))
        start = len(cameras)
        cams = list(range(next_camera, next_camera + max(2, int(size))))
        next_camera += len(cams)
        cycles = int(rng.integers(spec.cycles[0], spec.cycles[1] + 1))
        shown = speakers + [None] * (len(cams) - len(speakers))
        if size < 3:
            order = [0] + [1, 0] * cycles
        else:
            first = max(1, cycles // 2)
            order = [0] + [1, 0] * first + [2, 0] * max(1, cycles - first)
        for c in order:
            add_shot(cams[c], shown[c], k)
        scenes.append(TruthScene((start, len(cameras)), tuple(cams), tuple(sorted(speakers))))
        scene_listeners.append(speakers)
        interstitial()

    scene_bias = [rng.normal(size=spec.dim) * spec.bias for _ in scenes]

    # cues: (start, end, lines, speakers per line, reaction flags)
    cues = []
    for shot, (shown, scene_idx) in enumerate(shot_roles):
        t0, t1 = frame_timestamp(shot_frames[shot][0], *spec.fps), frame_timestamp(
            shot_frames[shot][1], *spec.fps
        )
        if scene_idx is None:
            if rng.random() < spec.interstitial_speech:
                spk = str(rng.choice(roster, p=weights))
                cues.append(_cue(rng, t0, t1, [spk], [False], None))
            continue
        speakers = scene_listeners[scene_idx]
        n_seg = min(3, int(rng.poisson(spec.segments_per_shot)))
        if shown is None:
            # silent interlocutor's camera in a one-speaker scene
            if rng.random() < spec.reaction_rate:
                cues.append(_cue(rng, t0, t1, [speakers[0]], [True], scene_idx))
            continue
        others = [s for s in speakers if s != shown]
        n_seg = max(n_seg, 1)
        bounds = np.linspace(t0, t1, n_seg + 1).astype(int)
        for j in range(n_seg):
            spk, reaction = shown, False
            if others and rng.random() < spec.reaction_rate:
                spk, reaction = str(rng.choice(others)), True
            lo, hi = int(bounds[j]), int(bounds[j + 1])
            if others and spec.dashed_rate and rng.random() < spec.dashed_rate:
                other = str(rng.choice(others))
                cues.append(_cue(rng, lo, hi, [spk, other], [reaction, True], scene_idx, dashed=True))
            else:
                cues.append(_cue(rng, lo, hi, [spk], [reaction], scene_idx))

    segments: list[SpeechSegment] = []
    reaction_ids: list[str] = []
    srt_cues = []
    for start, end, lines, speakers, flags, scene_idx in cues:
        srt_cues.append((start, end, lines))
        spans = [t[:2] for t in _split_turns(start, end, lines)] if len(lines) > 1 else [(start, end)]
        for (s, e), line, spk, flag in zip(spans, lines, speakers, flags):
            sid = f"seg{len(segments) + 1:05d}"
            k = roster.index(spk)
            bias = scene_bias[scene_idx] if scene_idx is not None else rng.normal(size=spec.dim) * spec.bias
            z = means[k] + bias + rng.normal(size=spec.dim)
            text = line[1:].strip() if len(lines) > 1 else line
            segments.append(SpeechSegment(sid, (s, e), text, mixing @ z + offset, spk))
            if flag:
                reaction_ids.append(sid)
            if scene_idx is not None:
                scenes[scene_idx].segments.append(sid)

    frames: list[FrameDescriptor] = []
    if spec.render_frames:
        bases: dict[int, np.ndarray] = {}
        for shot, (f0, f1) in enumerate(shot_frames):
            cam = cameras[shot]
            if cam not in bases:
                bases[cam] = _camera_histogram(rng, spec.bins)
            rendered = _render_shot(rng, bases[cam], f1 - f0, spec.noise)
            for i, hist in enumerate(rendered):
                idx = f0 + i
                frames.append(FrameDescriptor(idx, frame_timestamp(idx, *spec.fps), hist))

    return Episode(
        episode_id, frames, shot_frames, cameras, segments, srt_cues, scenes,
        reaction_ids, mixing, spec.fps, spec.bins,
    )


def _cue(rng, lo, hi, speakers, flags, scene_idx, dashed=False):
    # keep a gap to the shot boundaries so every segment sits inside its shot
    span = hi - lo
    margin = max(1, span // 10)
    s, e = lo + margin, hi - margin
    if e - s < 2 * len(speakers):
        raise StructureError("shot too short to hold a speech segment")
    if dashed:
        lines = [f"- {_text(rng, int(rng.integers(2, 7)))}" for _ in speakers]
    else:
        lines = [_text(rng, int(rng.integers(2, 9)))]
    return (s, e, lines, speakers, flags, scene_idx)


def generate_corpus(spec: SynthSpec, seed: int) -> list[Episode]:
    """``spec.episodes`` episodes with seeds derived from ``seed``."""
    seeds = np.random.SeedSequence(seed).spawn(spec.episodes)
    return [
        generate_episode(spec, int(s.generate_state(1)[0]), f"ep{k + 1:02d}")
        for k, s in enumerate(seeds)
    ]


def srt_text(episode: Episode) -> str:
    from .io.srt import format_timestamp

    blocks = []
    for k, (start, end, lines) in enumerate(episode.cues, start=1):
        body = "\n".join(lines)
        blocks.append(f"{k}\n{format_timestamp(start)} --> {format_timestamp(end)}\n{body}\n")
    return "\n".join(blocks)


def write_episode(episode: Episode, directory: str | Path) -> Path:
    """Write an episode directory in the pipeline's input layout."""
    from .io.embeddings import write_embeddings
    from .io.frames import write_frame_histograms
    from .io.outputs import write_json

    out = Path(directory) / episode.episode_id
    out.mkdir(parents=True, exist_ok=True)
    write_frame_histograms(out / "frames.fhis", episode.frames, episode.bins, episode.fps)
    (out / "subtitles.srt").write_text(srt_text(episode), encoding="utf-8")
    write_embeddings(out / "embeddings.csv", {s.segment_id: s.embedding for s in episode.segments})
    write_json(out / "annotations.json", episode.annotations())
    write_json(out / "truth.json", episode.truth())
    return out
