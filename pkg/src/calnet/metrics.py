"""Degree, connectivity, heterogeneity and correlation measures.

All functions are pure. Metrics that are 0/0 on a degenerate network raise
:class:`~calnet.errors.UndefinedMetricError`; callers building time series
turn that into a missing value rather than a zero.

Matrix convention: ``F[s, t]`` is the net flow from ``s`` to ``t``. A node's
in-profile is its column of ``F`` and its out-profile its row.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .errors import UndefinedMetricError
from .netgraph import NetTradeNetwork

CorrelationVariant = Literal["row-row", "in-out-self"]
CORRELATION_VARIANTS: tuple[str, ...] = ("row-row", "in-out-self")


@dataclass(frozen=True)
class NodeDegrees:
    nodes: tuple[str, ...]
    k_in: np.ndarray
    k_out: np.ndarray
    s_in: np.ndarray
    s_out: np.ndarray

    def row(self, node: str) -> tuple[int, int, float, float]:
        i = self.nodes.index(node)
        return int(self.k_in[i]), int(self.k_out[i]), float(self.s_in[i]), float(self.s_out[i])


@dataclass(frozen=True)
class NetworkSummary:
    year: int
    N: int
    L: int
    connectivity: float | None
    h: float | None
    h_w: float | None
    r_unweighted: float | None
    r_weighted: float | None
    degree_corr: float | None
    Q_unweighted: float | None
    Q_weighted: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def degrees(g: NetTradeNetwork) -> NodeDegrees:
    idx = g.index()
    n = g.n_nodes
    k_in = np.zeros(n, dtype=np.int64)
    k_out = np.zeros(n, dtype=np.int64)
    s_in_parts: list[list[float]] = [[] for _ in range(n)]
    s_out_parts: list[list[float]] = [[] for _ in range(n)]
    for (src, dst), w in g.edges.items():
        i, j = idx[src], idx[dst]
        k_out[i] += 1
        k_in[j] += 1
        s_out_parts[i].append(w)
        s_in_parts[j].append(w)
    # fsum keeps strengths independent of edge order (permutation invariance).
    s_in = np.array([math.fsum(p) for p in s_in_parts], dtype=np.float64)
    s_out = np.array([math.fsum(p) for p in s_out_parts], dtype=np.float64)
    return NodeDegrees(g.nodes, k_in, k_out, s_in, s_out)


def connectivity(g: NetTradeNetwork) -> float:
    """Edge count over ``N(N-1)``; at most 0.5 for a net network."""
    n = g.n_nodes
    if n < 2:
        raise UndefinedMetricError("connectivity needs at least 2 nodes")
    return g.n_edges / (n * (n - 1))


def heterogeneity(g: NetTradeNetwork, weighted: bool = False) -> float:
    """Mean in/out imbalance over mean total degree (or strength).

    The denominator is the mean of ``k_in + k_out``, i.e. ``2L/N``, which
    puts a pure exporter/importer bipartition at exactly 1.
    """
    d = degrees(g)
    if weighted:
        total = math.fsum([*d.s_in, *d.s_out])
        imbalance = math.fsum(abs(a - b) for a, b in zip(d.s_in, d.s_out))
    else:
        total = float(d.k_in.sum() + d.k_out.sum())
        imbalance = float(np.abs(d.k_in - d.k_out).sum())
    if total == 0:
        raise UndefinedMetricError("heterogeneity is undefined on a network without edges")
    # Both means share the 1/N factor.
    return min(1.0, imbalance / total)


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = math.fsum(xc * xc)
    syy = math.fsum(yc * yc)
    if sxx == 0 or syy == 0:
        return None
    r = math.fsum(xc * yc) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def degree_correlation(g: NetTradeNetwork) -> float:
    """Pearson correlation across nodes between out- and in-strength."""
    if g.n_nodes < 2:
        raise UndefinedMetricError("degree correlation needs at least 2 nodes")
    d = degrees(g)
    r = _pearson(d.s_out, d.s_in)
    if r is None:
        raise UndefinedMetricError("strength series has zero variance")
    return r


def _unit_rows(m: np.ndarray) -> np.ndarray:
    """Mean-centre each row and scale it to unit norm; constant rows become 0."""
    centred = m - m.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", centred, centred))
    out = np.zeros_like(centred)
    nz = norms > 0
    out[nz] = centred[nz] / norms[nz, None]
    return out


def node_correlation_similarity(
    g: NetTradeNetwork,
    weighted: bool = True,
    variant: CorrelationVariant = "row-row",
) -> float:
    """Mean Pearson similarity of node trade profiles.

    ``row-row``: mean over all ordered pairs ``i != j`` of the correlation
    between the in-profiles of ``i`` and ``j`` (length-N vectors, the zero
    self entry included). Pairs involving a constant profile count as 0.

    ``in-out-self``: mean over nodes of the correlation between a node's own
    in-profile and out-profile.
    """
    n = g.n_nodes
    if n < 2:
        raise UndefinedMetricError("node correlation needs at least 2 nodes")
    flows = g.flow_matrix(weighted=weighted)
    in_profiles = flows.T
    if variant == "row-row":
        unit = _unit_rows(in_profiles)
        # einsum avoids BLAS so the result does not depend on thread count.
        corr = np.clip(np.einsum("ik,jk->ij", unit, unit), -1.0, 1.0)
        np.fill_diagonal(corr, 0.0)
        return math.fsum(corr.ravel()) / (n * (n - 1))
    if variant == "in-out-self":
        a = _unit_rows(in_profiles)
        b = _unit_rows(flows)
        per_node = np.clip(np.einsum("ik,ik->i", a, b), -1.0, 1.0)
        return math.fsum(per_node) / n
    raise ValueError(f"unknown correlation variant {variant!r}")
