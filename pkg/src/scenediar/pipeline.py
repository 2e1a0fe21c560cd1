"""Episode-level orchestration: load inputs, run each stage, serialise results.

Every stage has a serialiser producing its output document and, where a
later stage needs it, a loader rebuilding the in-memory objects from that
document, so stages can run one at a time from intermediate files.

Input episode directory::

    frames.fhis | frames.csv   frame histograms
    subtitles.srt              speech segments
    embeddings.csv             one vector per segment
    offsets.json               optional subtitle timing corrections
    annotations.json           optional reference (cuts, similar shots, speakers)
"""

from __future__ import annotations

import json
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .config import Config
from .core import DialogueScene, FrameDescriptor, LocalSpeaker, Partition, Shot, SpeechSegment, StructureError
from .evaluation import (
    SpeakerCountRow,
    der,
    f1_cuts,
    f1_similarity,
    format_table,
    single_show_der,
    speaker_count_report,
)
from .globaldiar import (
    constrained_hac,
    derive_cannot_links,
    fixed_cut_global,
    partition_forest,
    unconstrained_global,
)
from .io.embeddings import attach_embeddings, read_embeddings
from .io.frames import read_frame_histograms
from .io.outputs import dumps, format_rttm, read_json, write_atomic_dir, write_text_atomic
from .io.srt import read_srt
from .local import Thresholds, diarize_scenes, naive_alternation_baseline, pooled_embedding
from .metric import CovarianceModel, within_class_covariance
from .motifs import apply_extensions, assign_segments, detect_strict_motifs, motif_statistics
from .visual import apply_labels, cut_indices, detect_cuts, detect_similar_shots, label_shots

log = logging.getLogger(__name__)

ARMS = ("constrained", "unconstrained", "low_cut")


@dataclass
class EpisodeInput:
    episode_id: str
    path: Path
    frames: list[FrameDescriptor]
    segments: list[SpeechSegment]
    annotations: Optional[dict] = None
    missing_embeddings: list[str] = field(default_factory=list)

    @property
    def ref_speakers(self) -> Optional[dict[str, str]]:
        if self.annotations is None or "speakers" not in self.annotations:
            return None
        return dict(self.annotations["speakers"])


def _frames_path(directory: Path) -> Path:
    for name in ("frames.fhis", "frames.csv"):
        if (directory / name).exists():
            return directory / name
    raise FileNotFoundError(f"{directory}: no frames.fhis or frames.csv")


def load_episode(directory: str | Path, config: Config) -> EpisodeInput:
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"{directory}: not an episode directory")
    frames = read_frame_histograms(_frames_path(directory))
    offsets = directory / "offsets.json"
    segments = read_srt(directory / "subtitles.srt", offsets if offsets.exists() else None)
    vectors = read_embeddings(directory / "embeddings.csv", config.embedding_dim)
    annotations = None
    if (directory / "annotations.json").exists():
        annotations = read_json(directory / "annotations.json")
    refs = annotations.get("speakers") if annotations else None
    segments, missing = attach_embeddings(segments, vectors, refs)
    if missing:
        log.warning("%s: %d segments have no embedding", directory.name, len(missing))
    return EpisodeInput(directory.name, directory, frames, segments, annotations, missing)


def thresholds(config: Config) -> Thresholds:
    return Thresholds(config.theta_single, config.theta_pair)


# --- stage 1: shots and labels ---------------------------------------------


def shots_doc(episode_id: str, shots: Sequence[Shot]) -> dict:
    return {
        "episode": episode_id,
        "frame_count": shots[-1].frame_span[1] if shots else 0,
        "cuts": cut_indices(shots),
        "shots": [
            {"shot_id": s.shot_id, "frame_span": list(s.frame_span), "time_span": list(s.time_span)}
            for s in shots
        ],
    }


def shots_from_doc(doc: dict, frames: Sequence[FrameDescriptor]) -> list[Shot]:
    shots = []
    for entry in doc["shots"]:
        f0, f1 = entry["frame_span"]
        if not 0 <= f0 < f1 <= len(frames):
            raise StructureError(f"shot {entry['shot_id']}: frame span outside the episode")
        shots.append(
            Shot(entry["shot_id"], (f0, f1), tuple(entry["time_span"]), frames[f0], frames[f1 - 1],
                 entry.get("label"))
        )
    return shots


def similar_lists(labels: Sequence[int]) -> dict[int, list[int]]:
    """Other shots sharing each shot's label."""
    by_label: dict[int, list[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    return {i: [j for j in by_label[lab] if j != i] for i, lab in enumerate(labels)}


def labels_doc(episode_id: str, shots: Sequence[Shot], graph, labeling) -> dict:
    labels = labeling.sequence([s.shot_id for s in shots])
    return {
        "episode": episode_id,
        "alphabet_size": labeling.alphabet_size,
        "labels": labels,
        "edges": [[a, b, score] for (a, b), score in graph.edges.items()],
        "similar_shots": {str(k): v for k, v in similar_lists(labels).items()},
    }


def run_shots(episode: EpisodeInput, config: Config) -> list[Shot]:
    return detect_cuts(episode.frames, config.theta_cut)


def run_labels(shots: Sequence[Shot], config: Config):
    graph = detect_similar_shots(shots, config.theta_sim, config.window)
    labeling = label_shots(graph)
    return graph, labeling, apply_labels(shots, labeling)


# --- dialogue scenes -------------------------------------------------------


def run_motifs(labelled: Sequence[Shot], segments: Sequence[SpeechSegment]) -> list[DialogueScene]:
    labels = [s.label for s in labelled]
    scenes = apply_extensions(detect_strict_motifs(labels), labels, labelled)
    return assign_segments(scenes, segments)


def scenes_doc(
    episode_id: str,
    scenes: Sequence[DialogueScene],
    segments: Sequence[SpeechSegment],
    ref_speakers: Optional[Mapping[str, str]] = None,
) -> dict:
    stats = motif_statistics(scenes, segments, ref_speakers)
    return {
        "episode": episode_id,
        "scenes": [
            {
                "scene_id": sc.scene_id,
                "kind": sc.kind,
                "labels": list(sc.labels),
                "shot_spans": [list(s) for s in sc.shot_spans],
                "time_span": list(sc.time_span),
                "segments": list(sc.covered_segments),
            }
            for sc in scenes
        ],
        "segments": {s.segment_id: list(s.time_span) for s in segments},
        "statistics": stats.to_dict(),
    }


def scenes_from_doc(doc: dict) -> list[DialogueScene]:
    return [
        DialogueScene(
            sc["scene_id"], tuple(sc["labels"]), tuple(tuple(s) for s in sc["shot_spans"]),
            tuple(sc["time_span"]), tuple(sc["segments"]), sc["kind"],
        )
        for sc in doc["scenes"]
    ]


# --- covariance ------------------------------------------------------------


def train_covariance(episodes: Sequence[EpisodeInput], config: Config) -> CovarianceModel:
    training = []
    for ep in sorted(episodes, key=lambda e: e.episode_id):
        refs = ep.ref_speakers
        if refs is None:
            continue
        for seg in ep.segments:
            if seg.embedding is not None and seg.segment_id in refs:
                training.append((refs[seg.segment_id], seg.embedding))
    if not training:
        raise StructureError("no annotated segments with embeddings to train a covariance model")
    return within_class_covariance(training, config.epsilon, config.embedding_dim)


def covariance_text(model: CovarianceModel) -> str:
    # full precision: the model is an input to later runs, not a report
    return json.dumps(model.to_dict(), sort_keys=True, indent=2) + "\n"


def load_covariance(path: str | Path, config: Config) -> CovarianceModel:
    model = CovarianceModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    if model.dimension != config.embedding_dim:
        raise StructureError(
            f"{path}: covariance dimension {model.dimension} != embedding_dim {config.embedding_dim}"
        )
    return model


def resolve_metrics(
    config: Config, episodes: Sequence[EpisodeInput]
) -> tuple[CovarianceModel, CovarianceModel]:
    """Stage-one and stage-two metrics.

    A configured covariance file wins. Otherwise the model is trained on the
    annotated input episodes, and without annotations the identity is used.
    """
    if config.covariance:
        local = load_covariance(config.covariance, config)
    elif any(ep.ref_speakers for ep in episodes):
        warnings.warn(
            "no covariance file configured; training on the annotated input episodes", stacklevel=2
        )
        local = train_covariance(episodes, config)
    else:
        warnings.warn("no covariance model available; using the identity metric", stacklevel=2)
        local = CovarianceModel.identity(config.embedding_dim)
    second = load_covariance(config.global_covariance, config) if config.global_covariance else local
    return local, second


# --- local diarization -----------------------------------------------------


def run_local(
    scenes: Sequence[DialogueScene],
    segments: Sequence[SpeechSegment],
    metric: CovarianceModel,
    config: Config,
) -> list[LocalSpeaker]:
    return diarize_scenes(scenes, segments, metric, thresholds(config))


def naive_partitions(
    scenes: Sequence[DialogueScene], labelled: Sequence[Shot], segments: Sequence[SpeechSegment]
) -> dict[int, Partition]:
    by_id = {s.segment_id: s for s in segments}
    return {
        sc.scene_id: naive_alternation_baseline(sc, labelled, by_id)
        for sc in scenes
        if sc.covered_segments
    }


def local_doc(
    episode_id: str,
    scenes: Sequence[DialogueScene],
    speakers: Sequence[LocalSpeaker],
    naive: Mapping[int, Partition],
) -> dict:
    by_scene: dict[str, list] = {str(sc.scene_id): [] for sc in scenes}
    for spk in speakers:
        by_scene[str(spk.scene_id)].append(
            {
                "local_speaker_id": spk.local_speaker_id,
                "segment_ids": list(spk.member_segments),
                "pooled_embedding": spk.pooled_embedding,
            }
        )
    return {
        "episode": episode_id,
        "scenes": by_scene,
        "naive_baseline": {
            str(k): {sid: int(lab) for sid, lab in sorted(p.assignment.items())}
            for k, p in sorted(naive.items())
        },
    }


def local_from_doc(doc: dict, segments: Sequence[SpeechSegment]) -> list[LocalSpeaker]:
    """Rebuild local speakers; pooled vectors are recomputed from the segments."""
    by_id = {s.segment_id: s for s in segments}
    out = []
    for scene_id, entries in doc["scenes"].items():
        for entry in entries:
            members = [by_id[sid] for sid in entry["segment_ids"]]
            out.append(
                LocalSpeaker(
                    entry["local_speaker_id"], int(scene_id), tuple(entry["segment_ids"]),
                    pooled_embedding(members), sum(s.duration for s in members),
                )
            )
    return out


# --- global diarization ----------------------------------------------------


def _speaker_names(partition: Partition, ids: Sequence[str]) -> dict[str, str]:
    numbering: dict = {}
    for item in ids:
        numbering.setdefault(partition.assignment[item], len(numbering))
    return {item: f"S{numbering[partition.assignment[item]] + 1:02d}" for item in ids}


def run_global(
    speakers: Sequence[LocalSpeaker], metric: CovarianceModel, config: Config
) -> dict[str, Any]:
    """All three global arms over the episode's local speakers."""
    ordered = sorted(speakers, key=lambda s: s.local_speaker_id)
    ids = [s.local_speaker_id for s in ordered]
    arms: dict[str, Any] = {}
    n_trees = 0
    if ordered:
        points = np.stack([s.pooled_embedding for s in ordered])
        forest = constrained_hac(points, ids, derive_cannot_links(ordered), metric)
        n_trees = forest.n_trees
        partitions = {
            "constrained": partition_forest(forest, points, ids, metric, thresholds(config)),
            "unconstrained": unconstrained_global(points, ids, metric, thresholds(config)),
            "low_cut": fixed_cut_global(points, ids, metric, config.low_cut_height),
        }
    else:
        partitions = {arm: Partition({}) for arm in ARMS}
    for arm, part in partitions.items():
        names = _speaker_names(part, ids)
        arms[arm] = {
            "speaker_count": part.k,
            "local_speakers": names,
            "segments": {sid: names[s.local_speaker_id] for s in ordered for sid in s.member_segments},
        }
    return {"arms": arms, "n_trees": n_trees}


def global_doc(episode_id: str, result: Mapping[str, Any], constrained: bool) -> dict:
    selected = "constrained" if constrained else "unconstrained"
    chosen = result["arms"][selected]
    return {
        "episode": episode_id,
        "selected": selected,
        "n_trees": result["n_trees"],
        "speaker_count": chosen["speaker_count"],
        "local_speakers": chosen["local_speakers"],
        "segments": chosen["segments"],
        "arms": result["arms"],
    }


def rttm_text(episode_id: str, gdoc: Mapping[str, Any], spans: Mapping[str, Sequence[int]]) -> str:
    turns = [(spans[sid][0], spans[sid][1], spk) for sid, spk in gdoc["segments"].items()]
    return format_rttm(episode_id, turns)


# --- evaluation ------------------------------------------------------------


def _restricted(mapping: Mapping[str, Any], keys) -> dict[str, Any]:
    return {k: mapping[k] for k in keys}


def evaluate_episode(
    docs: Mapping[str, dict], annotations: Optional[dict], config: Config
) -> dict:
    """Metrics document for one episode from its stage documents."""
    sdoc, ldoc, gdoc = docs["scenes.json"], docs["local_diar.json"], docs["global_diar.json"]
    spans = {sid: tuple(v) for sid, v in sdoc["segments"].items()}
    durations = {sid: e - s for sid, (s, e) in spans.items()}
    covered = [sid for sc in sdoc["scenes"] for sid in sc["segments"]]
    out: dict[str, Any] = {
        "episode": sdoc["episode"],
        "scenes": sdoc["statistics"],
        "speaker_count": {arm: gdoc["arms"][arm]["speaker_count"] for arm in ARMS},
        "n_trees": gdoc["n_trees"],
        "reference": annotations is not None,
    }
    if annotations is None:
        return out

    hdoc, lbdoc = docs["shots.json"], docs["labels.json"]
    out["cuts"] = f1_cuts(hdoc["cuts"], annotations.get("cuts", []), config.cut_tolerance).to_dict()
    hyp_sim = {int(k): v for k, v in lbdoc["similar_shots"].items()}
    ref_sim = {int(k): v for k, v in annotations.get("similar_shots", {}).items()}
    out["similarity"] = f1_similarity(hyp_sim, ref_sim).to_dict()

    refs = annotations.get("speakers", {})
    unknown = sorted(set(spans) - set(refs))
    if unknown:
        raise StructureError(f"reference lacks speakers for {len(unknown)} segments, e.g. {unknown[0]}")

    local_pairs, naive_pairs = [], []
    for scene_id, entries in ldoc["scenes"].items():
        hyp = {sid: e["local_speaker_id"] for e in entries for sid in e["segment_ids"]}
        if not hyp:
            continue
        ref = _restricted(refs, hyp)
        local_pairs.append((hyp, ref))
        naive = ldoc["naive_baseline"].get(scene_id)
        if naive is not None:
            naive_pairs.append((naive, _restricted(refs, naive)))
    out["local"] = {
        "der": single_show_der(local_pairs, durations) if local_pairs else None,
        "naive_der": single_show_der(naive_pairs, durations) if naive_pairs else None,
        "scenes_scored": len(local_pairs),
    }

    ref_covered = _restricted(refs, covered)
    out["global"] = {
        arm: (der(gdoc["arms"][arm]["segments"], ref_covered, durations) if covered else None)
        for arm in ARMS
    }
    out["reference_speakers"] = {
        "covered": len(set(ref_covered.values())),
        "total": len({refs[sid] for sid in spans}),
    }
    return out


def summarize(metrics: Sequence[dict]) -> tuple[dict, str]:
    """Corpus-level JSON summary and a plain-text report."""
    scored = [m for m in metrics if m.get("reference")]

    def mean(values):
        values = [v for v in values if v is not None]
        return sum(values) / len(values) if values else None

    rows = [
        SpeakerCountRow(m["episode"], m["reference_speakers"]["covered"], dict(m["speaker_count"]))
        for m in scored
    ]
    summary = {
        "episodes": [m["episode"] for m in metrics],
        "scored": len(scored),
        "cut_f1": mean(m["cuts"]["f1"] for m in scored),
        "similarity_f1": mean(m["similarity"]["f1"] for m in scored),
        "coverage_pct": mean(m["scenes"]["coverage_pct"] for m in metrics),
        "local_der": mean(m["local"]["der"] for m in scored),
        "naive_der": mean(m["local"]["naive_der"] for m in scored),
        "global_der": {arm: mean(m["global"][arm] for m in scored) for arm in ARMS},
        "speaker_counts": speaker_count_report(rows),
    }

    parts = []
    parts.append("Shot structure")
    parts.append(
        format_table(
            ["episode", "cut P", "cut R", "cut F1", "sim P", "sim R", "sim F1"],
            [
                [m["episode"], m["cuts"]["precision"], m["cuts"]["recall"], m["cuts"]["f1"],
                 m["similarity"]["precision"], m["similarity"]["recall"], m["similarity"]["f1"]]
                for m in scored
            ],
        )
    )
    parts.append("\nDiarization error rate")
    parts.append(
        format_table(
            ["episode", "naive", "local", *ARMS],
            [
                [m["episode"], m["local"]["naive_der"], m["local"]["der"],
                 *(m["global"][arm] for arm in ARMS)]
                for m in scored
            ],
        )
    )
    parts.append("\nSpeakers per episode")
    parts.append(
        format_table(
            ["episode", "reference", *ARMS],
            [[r.episode, r.ref_k, *(r.hyp_k.get(arm) for arm in ARMS)] for r in rows]
            + [["mean", summary["speaker_counts"]["mean_ref"],
                *(summary["speaker_counts"]["mean"].get(arm) for arm in ARMS)],
               ["MAE", None, *(summary["speaker_counts"]["mae"].get(arm) for arm in ARMS)]],
        )
    )
    return summary, "\n".join(parts) + "\n"


# --- whole pipeline ---------------------------------------------------------


def process_episode(
    episode: EpisodeInput,
    config: Config,
    metrics: tuple[CovarianceModel, CovarianceModel],
    constrained: bool = True,
) -> dict[str, str]:
    """All seven output documents of one episode, as text."""
    local_metric, global_metric = metrics
    shots = run_shots(episode, config)
    graph, labeling, labelled = run_labels(shots, config)
    scenes = run_motifs(labelled, episode.segments)
    speakers = run_local(scenes, episode.segments, local_metric, config)
    naive = naive_partitions(scenes, labelled, episode.segments)
    result = run_global(speakers, global_metric, config)

    docs = {
        "shots.json": shots_doc(episode.episode_id, shots),
        "labels.json": labels_doc(episode.episode_id, shots, graph, labeling),
        "scenes.json": scenes_doc(episode.episode_id, scenes, episode.segments, episode.ref_speakers),
        "local_diar.json": local_doc(episode.episode_id, scenes, speakers, naive),
        "global_diar.json": global_doc(episode.episode_id, result, constrained),
    }
    docs["metrics.json"] = evaluate_episode(docs, episode.annotations, config)
    files = {name: dumps(doc) for name, doc in docs.items()}
    files["diarization.rttm"] = rttm_text(
        episode.episode_id, docs["global_diar.json"], docs["scenes.json"]["segments"]
    )
    return files


def _finish(episode: EpisodeInput, config, metrics, constrained, out) -> dict:
    files = process_episode(episode, config, metrics, constrained)
    write_atomic_dir(Path(out) / episode.episode_id, files)
    return json.loads(files["metrics.json"])


def _worker(args) -> dict:
    path, config, metrics, constrained, out = args
    return _finish(load_episode(path, config), config, metrics, constrained, out)


def run_pipeline(
    inputs: Sequence[str | Path],
    out: str | Path,
    config: Config,
    constrained: bool = True,
    jobs: int = 1,
) -> dict:
    """Run every stage on every episode and write per-episode outputs plus a summary."""
    paths = sorted((Path(p) for p in inputs), key=lambda p: p.name)
    names = [p.name for p in paths]
    if len(set(names)) != len(names):
        raise StructureError("episode directory names must be unique")
    episodes = [load_episode(p, config) for p in paths]
    metrics = resolve_metrics(config, episodes)
    if jobs > 1 and len(paths) > 1:
        tasks = [(p, config, metrics, constrained, out) for p in paths]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_worker, tasks))
    else:
        results = [_finish(ep, config, metrics, constrained, out) for ep in episodes]
    summary, table = summarize(results)
    write_text_atomic(Path(out) / "summary.json", dumps(summary))
    write_text_atomic(Path(out) / "summary.txt", table)
    return summary
