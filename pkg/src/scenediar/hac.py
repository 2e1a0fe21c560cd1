"""Ward agglomerative clustering, optionally under cannot-link constraints,
and silhouette-based selection of the dendrogram cut."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .core import CannotLinkSet, Partition, StructureError
from .metric import CovarianceModel

# silhouette scores closer than this are treated as tied
SCORE_TIE = 1e-12


@dataclass(frozen=True)
class Merge:
    a: int
    b: int
    height: float
    new_id: int


@dataclass(frozen=True, eq=False)
class Dendrogram:
    """Merge history over ``leaves``.

    Leaf ``i`` has cluster id ``i``; the cluster created by the ``t``-th merge
    has id ``len(leaves) + t``. A constrained run may stop early, leaving
    several roots.
    """

    leaves: tuple[Hashable, ...]
    merges: tuple[Merge, ...]
    masses: dict[int, int] = field(repr=False)
    centroids: dict[int, np.ndarray] = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.leaves)

    @property
    def heights(self) -> list[float]:
        return [m.height for m in self.merges]

    def roots(self) -> list[int]:
        merged = {c for m in self.merges for c in (m.a, m.b)}
        total = self.n + len(self.merges)
        return [c for c in range(total) if c not in merged]

    def members(self, cluster_id: int) -> list[int]:
        """Leaf positions under ``cluster_id``."""
        children = {m.new_id: (m.a, m.b) for m in self.merges}
        out, stack = [], [cluster_id]
        while stack:
            c = stack.pop()
            if c < self.n:
                out.append(c)
            else:
                stack.extend(children[c])
        return sorted(out)

    def cut(self, n_merges: int) -> np.ndarray:
        """Cluster index per leaf after the first ``n_merges`` merges.

        Clusters are numbered by the position of their first leaf.
        """
        parent = list(range(self.n + len(self.merges)))
        for m in self.merges[:n_merges]:
            parent[m.a] = m.new_id
            parent[m.b] = m.new_id

        def find(c):
            while parent[c] != c:
                c = parent[c]
            return c

        roots = [find(i) for i in range(self.n)]
        numbering: dict[int, int] = {}
        return np.array([numbering.setdefault(r, len(numbering)) for r in roots], dtype=int)

    def trees(self) -> list["Dendrogram"]:
        """Split into one self-contained dendrogram per root.

        Trees are ordered by their first leaf; ids are renumbered per tree.
        """
        out = []
        for root in sorted(self.roots(), key=lambda r: self.members(r)[0]):
            leaf_pos = self.members(root)
            remap = {old: new for new, old in enumerate(leaf_pos)}
            merges = []
            for m in self.merges:
                if m.a in remap and m.b in remap:
                    new_id = len(leaf_pos) + len(merges)
                    merges.append(Merge(remap[m.a], remap[m.b], m.height, new_id))
                    remap[m.new_id] = new_id
            masses = {remap[c]: v for c, v in self.masses.items() if c in remap}
            centroids = {remap[c]: v for c, v in self.centroids.items() if c in remap}
            out.append(
                Dendrogram(tuple(self.leaves[i] for i in leaf_pos), tuple(merges), masses, centroids)
            )
        return out


def _as_whitened(points, metric: Optional[CovarianceModel]) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2:
        raise StructureError(f"points must be a 2-D array, got shape {x.shape}")
    return x if metric is None else metric.whiten(x)


def _ward_cost(ma, ga, mb, gb) -> np.ndarray:
    diff = ga - gb
    return (ma * mb / (ma + mb)) * np.einsum("...i,...i->...", diff, diff)


def agglomerate(
    points,
    metric: Optional[CovarianceModel] = None,
    blocked: Optional[np.ndarray] = None,
    leaves: Optional[Sequence[Hashable]] = None,
) -> Dendrogram:
    """Greedy Ward agglomeration in whitened space.

    ``blocked[i, j]`` forbids leaves ``i`` and ``j`` from ever sharing a
    cluster; a merged cluster inherits the prohibitions of both parts.
    Merging stops when every remaining pair is forbidden. Among equal costs
    the pair with the smallest (older id, younger id) wins.
    """
    x = _as_whitened(points, metric)
    n = len(x)
    leaves = tuple(range(n)) if leaves is None else tuple(leaves)
    if len(leaves) != n:
        raise StructureError("leaf ids and points differ in length")
    masses = {i: 1 for i in range(n)}
    centroids = {i: x[i].copy() for i in range(n)}
    if n == 0:
        return Dendrogram(leaves, (), masses, centroids)

    ids = list(range(n))
    mass = np.ones(n)
    cent = x.copy()
    block = np.zeros((n, n), dtype=bool) if blocked is None else np.array(blocked, dtype=bool)
    if block.shape != (n, n):
        raise StructureError(f"constraint matrix has shape {block.shape}, expected {(n, n)}")
    block = block | block.T

    cost = _ward_cost(mass[:, None], cent[:, None, :], mass[None, :], cent[None, :, :])
    merges = []
    next_id = n
    while len(ids) > 1:
        masked = np.where(block, np.inf, cost)
        masked[np.tril_indices(len(ids))] = np.inf
        flat = int(np.argmin(masked))
        i, j = divmod(flat, len(ids))
        height = masked[i, j]
        if not np.isfinite(height):
            break
        mi, mj = mass[i], mass[j]
        gi, gj = cent[i], cent[j]
        # exact when gi == gj, so identical points keep zero heights
        g_new = gi + (gj - gi) * (mj / (mi + mj))
        m_new = mi + mj
        b_new = block[i] | block[j]

        keep = [k for k in range(len(ids)) if k not in (i, j)]
        merges.append(Merge(ids[i], ids[j], float(height), next_id))
        masses[next_id] = int(m_new)
        centroids[next_id] = g_new.copy()

        ids = [ids[k] for k in keep] + [next_id]
        next_id += 1
        mass = np.append(mass[keep], m_new)
        cent = np.vstack([cent[keep], g_new])
        new_block = np.append(b_new[keep], False)
        block = block[np.ix_(keep, keep)]
        block = np.vstack([np.hstack([block, new_block[:-1, None]]), new_block[None, :]])
        new_cost = _ward_cost(m_new, g_new[None, :], mass, cent)
        new_cost[-1] = np.inf
        cost = cost[np.ix_(keep, keep)]
        cost = np.vstack([np.hstack([cost, new_cost[:-1, None]]), new_cost[None, :]])

    return Dendrogram(leaves, tuple(merges), masses, centroids)


def ward_hac(points, metric: Optional[CovarianceModel] = None, leaves=None) -> Dendrogram:
    """Unconstrained Ward agglomeration down to a single root."""
    return agglomerate(points, metric, None, leaves)


def constraint_matrix(leaves: Sequence[Hashable], constraints: Iterable) -> np.ndarray:
    index = {leaf: i for i, leaf in enumerate(leaves)}
    block = np.zeros((len(leaves), len(leaves)), dtype=bool)
    for pair in constraints:
        a, b = tuple(pair)
        if a not in index or b not in index:
            raise StructureError(f"constraint {sorted(pair, key=repr)} names an unknown item")
        block[index[a], index[b]] = block[index[b], index[a]] = True
    return block


# --- silhouette -----------------------------------------------------------


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * x @ x.T
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def _silhouette_from_sums(sums: np.ndarray, sizes: np.ndarray, labels: np.ndarray) -> float:
    """Mean silhouette given per-point distance sums to every cluster."""
    n = len(labels)
    own_size = sizes[labels]
    own_sum = sums[np.arange(n), labels]
    with np.errstate(invalid="ignore", divide="ignore"):
        a = own_sum / (own_size - 1)
        means = sums / sizes[None, :]
    means[np.arange(n), labels] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = (b - a) / denom
    s = np.where((own_size <= 1) | (denom == 0), 0.0, s)
    return float(s.mean())


def silhouette_score(points, labels, metric: Optional[CovarianceModel] = None) -> float:
    """Mean silhouette of a labelling; singleton clusters score 0."""
    x = _as_whitened(points, metric)
    labels = np.asarray(labels)
    _, labels = np.unique(labels, return_inverse=True)
    k = labels.max() + 1 if len(labels) else 0
    if k < 2:
        raise ValueError("silhouette is undefined for fewer than two clusters")
    dist = pairwise_distances(x)
    onehot = np.eye(k)[labels]
    return _silhouette_from_sums(dist @ onehot, onehot.sum(axis=0), labels)


@dataclass(frozen=True)
class CutChoice:
    labels: np.ndarray
    k: int
    score: Optional[float]
    scores: dict[int, float]


def select_cut(
    dendro: Dendrogram,
    points,
    metric: Optional[CovarianceModel] = None,
    theta_single: float = 0.10,
    theta_pair: float = 12.2,
) -> CutChoice:
    """Pick the number of clusters along a complete dendrogram.

    One point gives one cluster. Two points stay together iff their whitened
    distance is below ``theta_pair``. Otherwise every cut with ``k >= 2``
    clusters is scored by mean silhouette; the best (smallest ``k`` on ties)
    is kept unless it scores below ``theta_single``, in which case all points
    form one cluster.
    """
    x = _as_whitened(points, metric)
    n = len(x)
    if n != dendro.n:
        raise StructureError("dendrogram and points differ in size")
    if n == 0:
        return CutChoice(np.zeros(0, dtype=int), 0, None, {})
    if len(dendro.merges) != n - 1:
        raise StructureError("silhouette cut needs a complete (single-root) dendrogram")
    if n == 1:
        return CutChoice(np.zeros(1, dtype=int), 1, None, {})
    if n == 2:
        dist = float(np.linalg.norm(x[0] - x[1]))
        together = dist < theta_pair
        return CutChoice(np.array([0, 0] if together else [0, 1]), 1 if together else 2, None, {})

    dist = pairwise_distances(x)
    # columns indexed by cluster id; replay merges from the all-singletons state
    sums = np.zeros((n, n + len(dendro.merges)))
    sums[:, :n] = dist
    sizes = np.zeros(n + len(dendro.merges))
    sizes[:n] = 1
    cluster_of = np.arange(n)
    active = list(range(n))
    scores = {n: 0.0}
    for t, m in enumerate(dendro.merges[:-1]):
        sums[:, m.new_id] = sums[:, m.a] + sums[:, m.b]
        sizes[m.new_id] = sizes[m.a] + sizes[m.b]
        cluster_of[np.isin(cluster_of, (m.a, m.b))] = m.new_id
        active.remove(m.a)
        active.remove(m.b)
        active.append(m.new_id)
        col = {c: i for i, c in enumerate(active)}
        labels = np.array([col[c] for c in cluster_of])
        scores[n - t - 1] = _silhouette_from_sums(sums[:, active], sizes[active], labels)

    best_k, best = None, -np.inf
    for k in sorted(scores):
        if scores[k] > best + SCORE_TIE:
            best_k, best = k, scores[k]
    if best < theta_single:
        return CutChoice(np.zeros(n, dtype=int), 1, best, scores)
    return CutChoice(dendro.cut(n - best_k), best_k, best, scores)


def silhouette_cut(
    dendro: Dendrogram,
    points,
    metric: Optional[CovarianceModel] = None,
    theta_single: float = 0.10,
    theta_pair: float = 12.2,
) -> Partition:
    choice = select_cut(dendro, points, metric, theta_single, theta_pair)
    return Partition({leaf: int(c) for leaf, c in zip(dendro.leaves, choice.labels)})


def check_constraints(dendro: Dendrogram, constraints: CannotLinkSet) -> None:
    """Raise if any cluster formed along ``dendro`` joins a cannot-link pair."""
    if not constraints:
        return
    index = {leaf: i for i, leaf in enumerate(dendro.leaves)}
    pairs = [tuple(index[x] for x in p) for p in constraints]
    members: dict[int, set[int]] = {i: {i} for i in range(dendro.n)}
    for m in dendro.merges:
        joined = members[m.a] | members[m.b]
        for a, b in pairs:
            if a in joined and b in joined:
                raise AssertionError(
                    f"merge {m.new_id} joins cannot-link pair "
                    f"({dendro.leaves[a]!r}, {dendro.leaves[b]!r})"
                )
        members[m.new_id] = joined
