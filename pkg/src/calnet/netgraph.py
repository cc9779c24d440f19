"""Net caloric flow networks.

Gross yearly flows between countries are netted pairwise into a directed,
weighted network in which every unordered country pair carries at most one
edge, pointing from the net exporter to the net importer.

Edges are keyed ``(source, target)``, i.e. ``(exporter, importer)``. In matrix
form (see :meth:`NetTradeNetwork.flow_matrix`) row ``s`` holds what ``s``
sends, so column sums are in-strengths and row sums out-strengths.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping

import numpy as np

from .errors import SchemaError

EDGE_LIST_HEADER = ("year", "source", "target", "kcal")


def format_kcal(value: float) -> str:
    """Shortest text that parses back to exactly ``value``.

    Integral values print without a trailing ``.0`` so that ``5000.0`` is
    written as ``5000``.
    """
    if value.is_integer() and abs(value) < 2**53:
        return str(int(value))
    return repr(value)


@dataclass(frozen=True)
class CalorieMatrix:
    """Gross caloric flows of one year.

    ``flows`` maps ``(importer, exporter)`` to kilocalories sent from the
    exporter to the importer. Absent pairs are zero.
    """

    year: int
    nodes: tuple[str, ...]
    flows: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node in CalorieMatrix")
        known = set(self.nodes)
        for (importer, exporter), kcal in self.flows.items():
            if importer == exporter:
                raise ValueError(f"diagonal entry for {importer!r}")
            if importer not in known or exporter not in known:
                raise ValueError(f"flow {exporter}->{importer} references unknown node")
            if not (kcal >= 0 and math.isfinite(kcal)):
                raise ValueError(f"flow {exporter}->{importer} must be finite and >= 0, got {kcal}")

    def get(self, importer: str, exporter: str) -> float:
        return self.flows.get((importer, exporter), 0.0)

    def total(self) -> float:
        return math.fsum(self.flows.values())


@dataclass(frozen=True)
class NetTradeNetwork:
    """Directed, antisymmetric net-flow network of one year."""

    year: int
    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node in NetTradeNetwork")
        known = set(self.nodes)
        for (src, dst), w in self.edges.items():
            if src == dst:
                raise ValueError(f"self-loop on {src!r}")
            if src not in known or dst not in known:
                raise ValueError(f"edge {src}->{dst} references unknown node")
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"edge {src}->{dst} must have finite positive weight, got {w}")
            if (dst, src) in self.edges:
                raise ValueError(f"reciprocal edges between {src!r} and {dst!r}")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_weight(self) -> float:
        return math.fsum(self.edges.values())

    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    def weight(self, source: str, target: str) -> float:
        return self.edges.get((source, target), 0.0)

    def flow_matrix(self, weighted: bool = True) -> np.ndarray:
        """Dense ``N x N`` matrix with entry ``[s, t]`` = flow from s to t.

        With ``weighted=False`` the entries are 0/1 edge indicators.
        """
        idx = self.index()
        out = np.zeros((self.n_nodes, self.n_nodes), dtype=np.float64)
        for (src, dst), w in self.edges.items():
            out[idx[src], idx[dst]] = w if weighted else 1.0
        return out

    def scaled(self, factor: float) -> NetTradeNetwork:
        """Copy with every weight multiplied by ``factor`` (> 0)."""
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        return NetTradeNetwork(
            self.year, self.nodes, {k: w * factor for k, w in self.edges.items()}
        )


def build_net_network(matrix: CalorieMatrix) -> NetTradeNetwork:
    """Net the two gross directions of every country pair.

    The larger direction wins and keeps the difference as its weight. Exact
    ties (including pairs that never trade) produce no edge. All nodes of the
    matrix are kept, isolated or not.
    """
    edges: dict[tuple[str, str], float] = {}
    seen: set[frozenset[str]] = set()
    for importer, exporter in matrix.flows:
        pair = frozenset((importer, exporter))
        if pair in seen:
            continue
        seen.add(pair)
        forward = matrix.get(importer, exporter)  # exporter -> importer
        backward = matrix.get(exporter, importer)
        if forward > backward:
            edges[(exporter, importer)] = forward - backward
        elif backward > forward:
            edges[(importer, exporter)] = backward - forward
    return NetTradeNetwork(matrix.year, matrix.nodes, dict(sorted(edges.items())))


def to_calorie_matrix(network: NetTradeNetwork) -> CalorieMatrix:
    """Reinterpret net weights as gross flows (inverse view of netting)."""
    return CalorieMatrix(
        network.year,
        network.nodes,
        {(dst, src): w for (src, dst), w in network.edges.items()},
    )


@dataclass(frozen=True)
class UndirectedGraph:
    """Undirected weighted view; edge keys are ordered by node index."""

    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, node: str) -> int:
        return sum(1 for u, v in self.edges if node in (u, v))

    def strength(self, node: str) -> float:
        return math.fsum(w for (u, v), w in self.edges.items() if node in (u, v))

    def adjacency(self, weighted: bool = True) -> np.ndarray:
        idx = {node: i for i, node in enumerate(self.nodes)}
        out = np.zeros((len(self.nodes), len(self.nodes)), dtype=np.float64)
        for (u, v), w in self.edges.items():
            value = w if weighted else 1.0
            out[idx[u], idx[v]] = value
            out[idx[v], idx[u]] = value
        return out


def symmetrize(network: NetTradeNetwork) -> UndirectedGraph:
    """Drop edge direction. Lossless because no pair has reciprocal edges."""
    idx = network.index()
    edges = {}
    for (src, dst), w in network.edges.items():
        key = (src, dst) if idx[src] < idx[dst] else (dst, src)
        edges[key] = w
    return UndirectedGraph(network.nodes, dict(sorted(edges.items(), key=lambda kv: (idx[kv[0][0]], idx[kv[0][1]]))))


def export_edge_list(network: NetTradeNetwork, sink: IO[str]) -> None:
    """Write ``year,source,target,kcal`` rows sorted by (source, target)."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(EDGE_LIST_HEADER)
    for (src, dst) in sorted(network.edges):
        writer.writerow((network.year, src, dst, format_kcal(network.edges[(src, dst)])))


def read_edge_list(
    source: IO[str], nodes: Iterable[str] | None = None, year: int | None = None
) -> NetTradeNetwork:
    """Inverse of :func:`export_edge_list`.

    An edge list cannot represent isolated nodes, so pass the full node list
    when it is known (the build manifest records it).
    """
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(header) != EDGE_LIST_HEADER:
        raise SchemaError(f"edge list header must be {','.join(EDGE_LIST_HEADER)}", line=1)
    edges: dict[tuple[str, str], float] = {}
    seen_nodes: list[str] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise SchemaError("expected 4 fields", line=lineno)
        row_year = int(row[0])
        if year is None:
            year = row_year
        elif row_year != year:
            raise SchemaError(f"mixed years {year} and {row_year}", line=lineno)
        edges[(row[1], row[2])] = float(row[3])
        seen_nodes.extend((row[1], row[2]))
    if year is None:
        raise SchemaError("empty edge list needs an explicit year")
    node_list = list(nodes) if nodes is not None else sorted(set(seen_nodes))
    return NetTradeNetwork(year, tuple(node_list), edges)
