"""Scores for every stage: cut and similarity F1, DER, speaker counts."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Partition


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _harmonic(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def f1_cuts(hyp: Sequence[int], ref: Sequence[int], tol: int = 1) -> PRF:
    """Precision/recall of detected cuts with one-to-one matching within ``tol`` frames.

    Both lists empty scores 1; exactly one empty scores 0.
    """
    hyp, ref = sorted(hyp), sorted(ref)
    if not hyp and not ref:
        return PRF(1.0, 1.0, 1.0)
    if not hyp or not ref:
        return PRF(0.0, 0.0, 0.0)
    # earliest-deadline greedy; optimal for interval matching on a line
    matched = 0
    j = 0
    for h in hyp:
        while j < len(ref) and ref[j] < h - tol:
            j += 1
        if j < len(ref) and ref[j] <= h + tol:
            matched += 1
            j += 1
    p, r = matched / len(hyp), matched / len(ref)
    return PRF(p, r, _harmonic(p, r))


def f1_similarity(
    hyp_lists: Mapping[Hashable, Sequence[Hashable]],
    ref_lists: Mapping[Hashable, Sequence[Hashable]],
) -> PRF:
    """Per-shot similar-shot lists; a shot is correct when both lists intersect.

    Precision counts over shots with a non-empty hypothesis list, recall over
    shots with a non-empty reference list; an empty denominator gives 0.
    """
    keys = set(hyp_lists) | set(ref_lists)
    correct = sum(
        1 for k in keys if set(hyp_lists.get(k, ())) & set(ref_lists.get(k, ()))
    )
    n_hyp = sum(1 for k in keys if hyp_lists.get(k))
    n_ref = sum(1 for k in keys if ref_lists.get(k))
    p = correct / n_hyp if n_hyp else 0.0
    r = correct / n_ref if n_ref else 0.0
    return PRF(p, r, _harmonic(p, r))


def confusion_matrix(
    hyp: Mapping[str, Hashable], ref: Mapping[str, Hashable], durations: Mapping[str, int]
) -> tuple[np.ndarray, list, list]:
    if set(hyp) != set(ref):
        raise ValueError("hypothesis and reference cover different segments")
    hyp_ids = sorted(set(hyp.values()), key=repr)
    ref_ids = sorted(set(ref.values()), key=repr)
    hi = {h: i for i, h in enumerate(hyp_ids)}
    ri = {r: i for i, r in enumerate(ref_ids)}
    conf = np.zeros((len(hyp_ids), len(ref_ids)), dtype=np.int64)
    for seg in hyp:
        conf[hi[hyp[seg]], ri[ref[seg]]] += durations[seg]
    return conf, hyp_ids, ref_ids


def optimal_mapping(conf: np.ndarray) -> tuple[dict[int, int], int]:
    """One-to-one hypothesis to reference mapping maximising shared time."""
    if conf.size == 0:
        return {}, 0
    rows, cols = linear_sum_assignment(conf, maximize=True)
    return {int(r): int(c) for r, c in zip(rows, cols)}, int(conf[rows, cols].sum())


def der(
    hyp: Partition | Mapping[str, Hashable],
    ref: Mapping[str, Hashable],
    durations: Mapping[str, int],
) -> float:
    """Fraction of speech time attributed to the wrong speaker.

    Segments are given, so there is no missed or false-alarm speech; only
    confusion remains. Unmapped hypothesis clusters count entirely as error.
    """
    hyp = hyp.assignment if isinstance(hyp, Partition) else hyp
    conf, _, _ = confusion_matrix(hyp, ref, durations)
    total = int(conf.sum())
    if total == 0:
        return 0.0
    _, attributed = optimal_mapping(conf)
    return 1.0 - attributed / total


def single_show_der(
    scenes: Sequence[tuple[Mapping[str, Hashable], Mapping[str, Hashable]]],
    durations: Mapping[str, int],
) -> float:
    """Per-scene DER averaged with scene speech time as weight."""
    num = 0.0
    den = 0
    for hyp, ref in scenes:
        hyp = hyp.assignment if isinstance(hyp, Partition) else hyp
        weight = sum(durations[s] for s in hyp)
        if weight == 0:
            continue
        num += weight * der(hyp, ref, durations)
        den += weight
    return num / den if den else 0.0


@dataclass
class SpeakerCountRow:
    episode: str
    ref_k: int
    hyp_k: dict[str, int]


def speaker_count_report(rows: Sequence[SpeakerCountRow]) -> dict:
    """Per-episode hypothesis vs reference counts and mean absolute error per system."""
    systems = sorted({name for row in rows for name in row.hyp_k})
    mae = {}
    mean_k = {}
    for name in systems:
        errs = [abs(row.hyp_k[name] - row.ref_k) for row in rows if name in row.hyp_k]
        mae[name] = sum(errs) / len(errs) if errs else None
        ks = [row.hyp_k[name] for row in rows if name in row.hyp_k]
        mean_k[name] = sum(ks) / len(ks) if ks else None
    return {
        "episodes": [
            {"episode": row.episode, "ref": row.ref_k, **{n: row.hyp_k.get(n) for n in systems}}
            for row in rows
        ],
        "mean_ref": sum(r.ref_k for r in rows) / len(rows) if rows else None,
        "mean": mean_k,
        "mae": mae,
    }


def format_table(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    """Aligned plain-text table."""

    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    cells = [[cell(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cells:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"
