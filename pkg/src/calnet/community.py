"""Modularity evaluation and community detection.

Modularity is evaluated on the undirected view of a net network (no pair has
edges both ways, so nothing is lost) using total degree ``k_in + k_out`` or
total strength ``s_in + s_out``.

Detection is a Louvain-style multi-level greedy optimiser: nodes are visited
in index order and moved to the neighbouring community with the largest gain,
then communities are collapsed into super-nodes and the process repeats.
Seeds only break exact ties between equal-gain moves.
"""

from __future__ import annotations

import csv
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import SchemaError, UndefinedMetricError
from .netgraph import NetTradeNetwork, symmetrize

PARTITION_HEADER = ("node", "community")
_MAX_SWEEPS = 1000


def _canonical(labels: Sequence[object]) -> tuple[int, ...]:
    remap: dict[object, int] = {}
    out = []
    for label in labels:
        if label not in remap:
            remap[label] = len(remap) + 1
        out.append(remap[label])
    return tuple(out)


@dataclass(frozen=True)
class Partition:
    """Community index (1..n_groups) for each node, canonically numbered.

    Canonical numbering assigns indices by first appearance in node order, so
    two partitions describing the same set partition compare equal.
    """

    nodes: tuple[str, ...]
    labels: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) != len(self.labels):
            raise ValueError("nodes and labels differ in length")
        object.__setattr__(self, "labels", _canonical(self.labels))

    @classmethod
    def from_mapping(cls, nodes: Sequence[str], assignment: Mapping[str, object]) -> Partition:
        missing = [n for n in nodes if n not in assignment]
        if missing:
            raise ValueError(f"partition is missing nodes: {missing[:5]}")
        return cls(tuple(nodes), tuple(assignment[n] for n in nodes))  # type: ignore[arg-type]

    @classmethod
    def single(cls, nodes: Sequence[str]) -> Partition:
        return cls(tuple(nodes), (1,) * len(nodes))

    @classmethod
    def singletons(cls, nodes: Sequence[str]) -> Partition:
        return cls(tuple(nodes), tuple(range(1, len(nodes) + 1)))

    @property
    def n_groups(self) -> int:
        return max(self.labels, default=0)

    def mapping(self) -> dict[str, int]:
        return dict(zip(self.nodes, self.labels))

    def blocks(self) -> list[frozenset[str]]:
        groups: dict[int, set[str]] = defaultdict(set)
        for node, label in zip(self.nodes, self.labels):
            groups[label].add(node)
        return [frozenset(groups[k]) for k in sorted(groups)]

    def as_set_partition(self) -> frozenset[frozenset[str]]:
        return frozenset(self.blocks())


def _labels_for(g: NetTradeNetwork, p: Partition) -> dict[str, int]:
    mapping = p.mapping()
    missing = [n for n in g.nodes if n not in mapping]
    if missing:
        raise ValueError(f"partition is missing nodes: {missing[:5]}")
    return mapping


def modularity(
    g: NetTradeNetwork,
    p: Partition,
    weighted: bool = False,
    resolution: float = 1.0,
) -> float:
    """Newman-Girvan modularity of ``p`` on the undirected view of ``g``.

    Per community ``c`` this is ``in_c / m - resolution * (tot_c / 2m)^2`` with
    ``in_c`` the internal edge weight, ``tot_c`` the summed node degrees and
    ``m`` the total edge weight (edge count when unweighted). All sums are
    exact-then-rounded, so the single-community partition scores exactly 0.
    """
    label = _labels_for(g, p)
    weights = [w if weighted else 1.0 for w in g.edges.values()]
    m = math.fsum(weights)
    if m == 0:
        raise UndefinedMetricError("modularity is undefined on a network without edges")
    internal: dict[int, list[float]] = defaultdict(list)
    degree: dict[int, list[float]] = defaultdict(list)
    for ((u, v), w) in zip(g.edges, weights):
        cu, cv = label[u], label[v]
        degree[cu].append(w)
        degree[cv].append(w)
        if cu == cv:
            internal[cu].append(w)
    terms = []
    for c in sorted(degree):
        frac_in = math.fsum(internal[c]) / m
        frac_tot = math.fsum(degree[c]) / (2 * m)
        terms.append(frac_in)
        terms.append(-resolution * frac_tot * frac_tot)
    return math.fsum(terms)


@dataclass(frozen=True)
class CommunityStats:
    community: int
    size: int
    internal_edges: int
    internal_weight: float
    internal_connectivity: float | None


def community_report(g: NetTradeNetwork, p: Partition) -> list[CommunityStats]:
    """Internal edge count, weight and connectivity of every community."""
    label = _labels_for(g, p)
    sizes: dict[int, int] = defaultdict(int)
    for node in g.nodes:
        sizes[label[node]] += 1
    counts: dict[int, int] = defaultdict(int)
    weights: dict[int, list[float]] = defaultdict(list)
    for (u, v), w in g.edges.items():
        if label[u] == label[v]:
            counts[label[u]] += 1
            weights[label[u]].append(w)
    out = []
    for c in sorted(sizes):
        n = sizes[c]
        conn = counts[c] / (n * (n - 1)) if n >= 2 else None
        out.append(CommunityStats(c, n, counts[c], math.fsum(weights[c]), conn))
    return out


# --- detection -------------------------------------------------------------


def _one_level(
    adj: list[dict[int, float]],
    k: list[float],
    m2: float,
    resolution: float,
    rng: random.Random,
) -> tuple[list[int], bool]:
    n = len(adj)
    comm = list(range(n))
    tot = list(k)
    moved_any = False
    for _ in range(_MAX_SWEEPS):
        moved = False
        for i in range(n):
            ci = comm[i]
            ki = k[i]
            links: dict[int, float] = defaultdict(float)
            for j, w in adj[i].items():
                if j != i:
                    links[comm[j]] += w
            tot[ci] -= ki
            own_gain = links.get(ci, 0.0) - resolution * tot[ci] * ki / m2
            best_gain = own_gain
            best: list[int] = [ci]
            for c in sorted(links):
                if c == ci:
                    continue
                gain = links[c] - resolution * tot[c] * ki / m2
                if gain > best_gain:
                    best_gain, best = gain, [c]
                elif gain == best_gain:
                    best.append(c)
            if ci in best:
                target = ci
            else:
                target = best[0] if len(best) == 1 else rng.choice(sorted(best))
            tot[target] += ki
            if target != ci:
                comm[i] = target
                moved = moved_any = True
        if not moved:
            break
    return comm, moved_any


def _aggregate(
    adj: list[dict[int, float]], comm: list[int]
) -> tuple[list[dict[int, float]], list[int]]:
    relabel: dict[int, int] = {}
    for c in comm:
        if c not in relabel:
            relabel[c] = len(relabel)
    new_of = [relabel[c] for c in comm]
    parts: list[dict[int, list[float]]] = [defaultdict(list) for _ in relabel]
    for i, nbrs in enumerate(adj):
        for j, w in nbrs.items():
            parts[new_of[i]][new_of[j]].append(w)
    new_adj = [{j: math.fsum(ws) for j, ws in sorted(d.items())} for d in parts]
    return new_adj, new_of


def detect_communities(
    g: NetTradeNetwork,
    weighted: bool = False,
    seed: int = 42,
    resolution: float = 1.0,
) -> Partition:
    """Greedy multi-level modularity maximisation.

    Deterministic for a fixed ``(g, seed, resolution)``. Never returns a
    partition scoring below the single-community partition.
    """
    if g.n_edges == 0:
        raise UndefinedMetricError("community detection needs at least one edge")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    und = symmetrize(g)
    idx = g.index()
    n = g.n_nodes
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for (u, v), w in und.edges.items():
        value = w if weighted else 1.0
        adj[idx[u]][idx[v]] = value
        adj[idx[v]][idx[u]] = value
    rng = random.Random(seed)
    node_comm = list(range(n))
    while True:
        # Aggregated self-loops already hold twice the internal weight.
        k = [math.fsum(nbrs.values()) for nbrs in adj]
        m2 = math.fsum(k)
        comm, moved = _one_level(adj, k, m2, resolution, rng)
        if not moved:
            break
        adj, new_of = _aggregate(adj, comm)
        node_comm = [new_of[c] for c in node_comm]
    found = Partition(g.nodes, tuple(node_comm))
    single = Partition.single(g.nodes)
    if modularity(g, found, weighted, resolution) < modularity(g, single, weighted, resolution):
        return single
    return found


# --- exhaustive oracle -----------------------------------------------------


def _restricted_growth_strings(n: int) -> np.ndarray:
    """All canonical set-partition labelings of n items, lexicographic order."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int8)
    rows = np.zeros((1, 1), dtype=np.int8)
    maxima = np.zeros(1, dtype=np.int64)
    for _ in range(1, n):
        counts = maxima + 2
        starts = np.cumsum(counts) - counts
        total = int(counts.sum())
        values = np.arange(total) - np.repeat(starts, counts)
        rows = np.hstack([np.repeat(rows, counts, axis=0), values[:, None].astype(np.int8)])
        maxima = np.maximum(np.repeat(maxima, counts), values)
    return rows


def brute_force_best_partition(
    g: NetTradeNetwork,
    weighted: bool = False,
    max_n: int = 10,
    resolution: float = 1.0,
    tie_tol: float = 1e-12,
) -> tuple[Partition, float]:
    """Exhaustively search every set partition for the best modularity.

    Scores use the dense modularity matrix, independently of
    :func:`modularity`. Among partitions within ``tie_tol`` of the optimum the
    lexicographically smallest canonical labeling wins.
    """
    n = g.n_nodes
    if n > max_n:
        raise ValueError(f"brute force refused: {n} nodes exceeds max_n={max_n}")
    if g.n_edges == 0:
        raise UndefinedMetricError("modularity is undefined on a network without edges")
    a = symmetrize(g).adjacency(weighted=weighted)
    k = a.sum(axis=1)
    m2 = k.sum()
    b = a - resolution * np.outer(k, k) / m2
    labels = _restricted_growth_strings(n)
    scores = np.full(labels.shape[0], float(np.trace(b)))
    for i in range(n):
        for j in range(i + 1, n):
            if b[i, j] != 0:
                scores += 2.0 * b[i, j] * (labels[:, i] == labels[:, j])
    scores /= m2
    best = float(scores.max())
    winner = int(np.flatnonzero(scores >= best - tie_tol)[0])
    part = Partition(g.nodes, tuple(int(x) for x in labels[winner]))
    return part, float(scores[winner])


# --- I/O -------------------------------------------------------------------


def write_partition(p: Partition, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(PARTITION_HEADER)
    for node, label in zip(p.nodes, p.labels):
        writer.writerow((node, label))


def read_partition(source: IO[str] | Iterable[str]) -> Partition:
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(header) != PARTITION_HEADER:
        raise SchemaError("partition header must be node,community", line=1)
    nodes, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise SchemaError("expected 2 fields", line=lineno)
        nodes.append(row[0])
        labels.append(int(row[1]))
    return Partition(tuple(nodes), tuple(labels))
