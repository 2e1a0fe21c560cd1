"""Slow reference implementations used to check the fast ones.

Each oracle recomputes its answer from definitions, without sharing code
with the module it checks.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional, Sequence

import numpy as np

MAX_ORACLE_SPEAKERS = 6

_ALTERNATION = re.compile(r"(.)(?!\1)(.)(?:\1\2)*\1", re.DOTALL)


@dataclass(frozen=True, order=True)
class OracleMotif:
    span: tuple[int, int]
    pair: tuple[int, int]


def oracle_motifs(labels: Sequence[int]) -> set[OracleMotif]:
    """Strict alternation matches by testing every substring against a regex.

    Every substring ``labels[i:j]`` that reads ``a (b a)+`` is collected;
    overlapping substrings of the same unordered pair are fused, and each
    fused span is cut back to odd length.
    """
    alphabet = sorted(set(labels))
    code = {lab: chr(0x100 + k) for k, lab in enumerate(alphabet)}
    text = "".join(code[x] for x in labels)
    found: dict[frozenset, list[tuple[int, int]]] = {}
    n = len(text)
    for i in range(n):
        for j in range(i + 3, n + 1):
            if _ALTERNATION.fullmatch(text, i, j):
                key = frozenset((labels[i], labels[i + 1]))
                found.setdefault(key, []).append((i, j))
    out = set()
    for spans in found.values():
        fused: list[list[int]] = []
        for s, e in sorted(spans):
            if fused and s < fused[-1][1]:
                fused[-1][1] = max(fused[-1][1], e)
            else:
                fused.append([s, e])
        for s, e in fused:
            if (e - s) % 2 == 0:
                e -= 1
            out.add(OracleMotif((s, e), (labels[s], labels[s + 1])))
    return out


def oracle_components(n: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    """Connected-component labels by repeated breadth-first search."""
    adj: dict[int, set[int]] = {i: set() for i in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    label = [-1] * n
    nxt = 0
    for start in range(n):
        if label[start] >= 0:
            continue
        frontier = [start]
        label[start] = nxt
        while frontier:
            new = []
            for node in frontier:
                for other in adj[node]:
                    if label[other] < 0:
                        label[other] = nxt
                        new.append(other)
            frontier = new
        nxt += 1
    return label


def oracle_covariance(training: Sequence[tuple[Hashable, Sequence[float]]]) -> np.ndarray:
    """Within-class covariance by explicit loops over speakers and segments."""
    groups: dict[Hashable, list[list[float]]] = {}
    for spk, vec in training:
        groups.setdefault(spk, []).append([float(v) for v in vec])
    d = len(next(iter(groups.values()))[0])
    total = sum(len(v) for v in groups.values())
    w = [[0.0] * d for _ in range(d)]
    for vecs in groups.values():
        mean = [sum(v[k] for v in vecs) / len(vecs) for k in range(d)]
        for v in vecs:
            for a in range(d):
                for b in range(d):
                    w[a][b] += (v[a] - mean[a]) * (v[b] - mean[b])
    return np.array(w) / total


@dataclass
class OracleForest:
    merges: list[tuple[int, int, float, int]]  # (older id, younger id, height, new id)
    roots: list[frozenset[int]]  # leaf positions under each surviving root
    violations: int


def oracle_hac(
    points,
    constraints: Iterable[tuple[int, int]] = (),
    whitener: Optional[np.ndarray] = None,
    tie_tol: float = 1e-9,
) -> OracleForest:
    """Greedy Ward merges recomputed from cluster membership at every step.

    ``constraints`` are pairs of leaf positions that must never share a
    cluster. Costs within ``tie_tol`` (relative) of the minimum count as
    tied and go to the smallest (older id, younger id) pair.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if whitener is not None:
        x = np.array([whitener @ row for row in x])
    pairs = [tuple(p) for p in constraints]
    clusters: dict[int, frozenset[int]] = {i: frozenset([i]) for i in range(len(x))}
    merges = []
    violations = 0
    next_id = len(x)
    while len(clusters) > 1:
        candidates = []
        for a, b in itertools.combinations(sorted(clusters), 2):
            ca, cb = clusters[a], clusters[b]
            if any((p in ca and q in cb) or (q in ca and p in cb) for p, q in pairs):
                continue
            ga = sum(x[i] for i in ca) / len(ca)
            gb = sum(x[i] for i in cb) / len(cb)
            diff = ga - gb
            cost = len(ca) * len(cb) / (len(ca) + len(cb)) * float(diff @ diff)
            candidates.append((cost, a, b))
        if not candidates:
            break
        best = min(c[0] for c in candidates)
        tol = tie_tol * max(1.0, abs(best))
        cost, a, b = min((c for c in candidates if c[0] <= best + tol), key=lambda c: (c[1], c[2]))
        merged = clusters.pop(a) | clusters.pop(b)
        if any(p in merged and q in merged for p, q in pairs):
            violations += 1
        clusters[next_id] = merged
        merges.append((a, b, cost, next_id))
        next_id += 1
    roots = sorted(clusters.values(), key=min)
    return OracleForest(merges, roots, violations)


def _naive_silhouette(x: np.ndarray, labels: Sequence[int]) -> float:
    n = len(labels)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(math.dist(x[i], x[j]) for j in own) / len(own)
        b = math.inf
        for c in set(labels) - {labels[i]}:
            others = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(math.dist(x[i], x[j]) for j in others) / len(others))
        m = max(a, b)
        if m > 0:
            total += (b - a) / m
    return total / n


def oracle_silhouette_cut(
    merges: Sequence[tuple[int, int]],
    points,
    theta_single: float = 0.10,
    theta_pair: float = 12.2,
    whitener: Optional[np.ndarray] = None,
    tie_tol: float = 1e-12,
) -> list[int]:
    """Exhaustive choice among all cut levels of a merge list.

    ``merges`` holds ``(a, b)`` child ids in merge order, new ids counting up
    from ``n``. Returns cluster labels numbered by first leaf.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if whitener is not None:
        x = np.array([whitener @ row for row in x])
    n = len(x)
    if n <= 1:
        return [0] * n
    if n == 2:
        return [0, 0] if math.dist(x[0], x[1]) < theta_pair else [0, 1]

    def labels_after(t: int) -> list[int]:
        members = {i: [i] for i in range(n)}
        for step, (a, b) in enumerate(merges[:t]):
            members[n + step] = members.pop(a) + members.pop(b)
        owner = {}
        for cid, leaves in members.items():
            for leaf in leaves:
                owner[leaf] = cid
        numbering: dict[int, int] = {}
        return [numbering.setdefault(owner[i], len(numbering)) for i in range(n)]

    best_labels, best = None, -math.inf
    for k in range(2, n + 1):
        labels = labels_after(n - k)
        score = _naive_silhouette(x, labels)
        if score > best + tie_tol:
            best, best_labels = score, labels
    if best < theta_single:
        return [0] * n
    return best_labels


def oracle_der_mapping(
    hyp: Mapping[str, Hashable], ref: Mapping[str, Hashable], durations: Mapping[str, int]
) -> float:
    """DER maximised over every one-to-one speaker mapping.

    Raises ``ValueError`` beyond six speakers on either side.
    """
    hyp_ids = sorted(set(hyp.values()), key=repr)
    ref_ids = sorted(set(ref.values()), key=repr)
    if max(len(hyp_ids), len(ref_ids)) > MAX_ORACLE_SPEAKERS:
        raise ValueError(f"exhaustive mapping supports at most {MAX_ORACLE_SPEAKERS} speakers")
    total = sum(durations[s] for s in hyp)
    if total == 0:
        return 0.0
    size = max(len(hyp_ids), len(ref_ids))
    padded_ref = ref_ids + [None] * (size - len(ref_ids))
    best = 0
    for perm in itertools.permutations(padded_ref):
        mapping = dict(zip(hyp_ids, perm))
        agreed = sum(durations[s] for s in hyp if mapping[hyp[s]] is not None and mapping[hyp[s]] == ref[s])
        best = max(best, agreed)
    return 1.0 - best / total


def oracle_cannot_links(
    scene_segments: Mapping[Hashable, set[str]], speaker_segments: Mapping[str, set[str]]
) -> set[frozenset[str]]:
    """Pairs of local speakers whose joint segments lie inside one scene."""
    out = set()
    for a, b in itertools.combinations(sorted(speaker_segments), 2):
        joint = speaker_segments[a] | speaker_segments[b]
        if any(joint <= segs for segs in scene_segments.values()):
            out.add(frozenset((a, b)))
    return out
