"""Yearly analysis products: metric series, rankings, peripheral countries.

Everything here emits plot-ready tables; drawing is left to external tools.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable, Literal, Mapping, Sequence, TypeVar

from .community import Partition, detect_communities, modularity
from .errors import UndefinedMetricError
from .metrics import (
    CORRELATION_VARIANTS,
    CorrelationVariant,
    NetworkSummary,
    connectivity,
    degree_correlation,
    degrees,
    heterogeneity,
    node_correlation_similarity,
)
from .netgraph import NetTradeNetwork, format_kcal

Direction = Literal["export", "import"]

# Zero-export stages; 1997-2000 belong to none.
STAGES: tuple[tuple[int, int], ...] = ((1986, 1996), (2001, 2013), (2014, 2022))

T = TypeVar("T")


def _maybe(fn: Callable[..., T], *args, **kwargs) -> T | None:
    try:
        return fn(*args, **kwargs)
    except UndefinedMetricError:
        return None


@dataclass(frozen=True)
class RankingTable:
    year: int
    direction: Direction
    entries: tuple[tuple[str, float], ...]


def rank_top(g: NetTradeNetwork, direction: Direction, k: int = 5) -> RankingTable:
    """Top ``k`` countries by out-strength (export) or in-strength (import).

    Ties go to the smaller country code; zero-strength countries never rank.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    d = degrees(g)
    if direction == "export":
        strength = d.s_out
    elif direction == "import":
        strength = d.s_in
    else:
        raise ValueError(f"direction must be 'export' or 'import', got {direction!r}")
    ranked = sorted(
        ((node, float(s)) for node, s in zip(g.nodes, strength) if s > 0),
        key=lambda e: (-e[1], e[0]),
    )
    return RankingTable(g.year, direction, tuple(ranked[:k]))


def export_share(g: NetTradeNetwork, countries: Iterable[str]) -> float:
    """Fraction of total net flow exported by ``countries``."""
    chosen = set(countries)
    unknown = chosen - set(g.nodes)
    if unknown:
        raise ValueError(f"countries not in network: {sorted(unknown)[:5]}")
    total = g.total_weight
    if total == 0:
        raise UndefinedMetricError("export share is undefined when total weight is 0")
    part = math.fsum(w for (src, _), w in g.edges.items() if src in chosen)
    return min(1.0, part / total)


def peripheral_nodes(g: NetTradeNetwork) -> frozenset[str]:
    """Countries with zero net export strength, isolated ones included."""
    exporters = {src for src, _ in g.edges}
    return frozenset(n for n in g.nodes if n not in exporters)


@dataclass(frozen=True)
class ZeroExportFractions:
    per_year: dict[int, float]
    stage_means: dict[str, float | None]


def stage_label(stage: tuple[int, int]) -> str:
    return f"{stage[0]}-{stage[1]}"


def zero_export_fraction(
    networks: Iterable[NetTradeNetwork],
    stages: Sequence[tuple[int, int]] = STAGES,
) -> ZeroExportFractions:
    """Per-year share of peripheral countries and its mean over each stage.

    A stage without any built year has mean None.
    """
    per_year: dict[int, float] = {}
    for g in sorted(networks, key=lambda g: g.year):
        per_year[g.year] = len(peripheral_nodes(g)) / g.n_nodes if g.n_nodes else 0.0
    if not per_year:
        raise ValueError("need at least one network")
    means: dict[str, float | None] = {}
    for stage in stages:
        values = [v for y, v in per_year.items() if stage[0] <= y <= stage[1]]
        means[stage_label(stage)] = math.fsum(values) / len(values) if values else None
    return ZeroExportFractions(per_year, means)


@dataclass(frozen=True)
class NodeRow:
    country: str
    k_in: int
    k_out: int
    s_in: float
    s_out: float
    peripheral: bool
    isolated: bool


def node_table(g: NetTradeNetwork) -> list[NodeRow]:
    d = degrees(g)
    rows = []
    for i, node in enumerate(g.nodes):
        s_in, s_out = float(d.s_in[i]), float(d.s_out[i])
        rows.append(
            NodeRow(node, int(d.k_in[i]), int(d.k_out[i]), s_in, s_out, s_out == 0, s_out == 0 and s_in == 0)
        )
    return rows


@dataclass(frozen=True)
class YearAnalysis:
    summary: NetworkSummary
    nodes: list[NodeRow]
    # variant -> (unweighted, weighted)
    correlations: dict[str, tuple[float | None, float | None]]
    partition_unweighted: Partition | None
    partition_weighted: Partition | None


@dataclass
class TimeSeries:
    years: list[YearAnalysis] = field(default_factory=list)

    @property
    def summaries(self) -> list[NetworkSummary]:
        return [y.summary for y in self.years]

    def by_year(self) -> dict[int, YearAnalysis]:
        return {y.summary.year: y for y in self.years}


def _detected_q(g: NetTradeNetwork, weighted: bool, seed: int, resolution: float):
    try:
        part = detect_communities(g, weighted=weighted, seed=seed, resolution=resolution)
    except UndefinedMetricError:
        return None, None
    return part, modularity(g, part, weighted=weighted, resolution=resolution)


def analyze_year(
    g: NetTradeNetwork,
    seed: int = 42,
    resolution: float = 1.0,
    variant: CorrelationVariant = "row-row",
) -> YearAnalysis:
    correlations = {
        v: (
            _maybe(node_correlation_similarity, g, weighted=False, variant=v),
            _maybe(node_correlation_similarity, g, weighted=True, variant=v),
        )
        for v in CORRELATION_VARIANTS
    }
    part_u, q_u = _detected_q(g, False, seed, resolution)
    part_w, q_w = _detected_q(g, True, seed, resolution)
    summary = NetworkSummary(
        year=g.year,
        N=g.n_nodes,
        L=g.n_edges,
        connectivity=_maybe(connectivity, g),
        h=_maybe(heterogeneity, g, weighted=False),
        h_w=_maybe(heterogeneity, g, weighted=True),
        r_unweighted=correlations[variant][0],
        r_weighted=correlations[variant][1],
        degree_corr=_maybe(degree_correlation, g),
        Q_unweighted=q_u,
        Q_weighted=q_w,
    )
    return YearAnalysis(summary, node_table(g), correlations, part_u, part_w)


def metric_series(
    networks: Mapping[int, NetTradeNetwork] | Iterable[NetTradeNetwork],
    seed: int = 42,
    resolution: float = 1.0,
    variant: CorrelationVariant = "row-row",
    threads: int = 1,
) -> TimeSeries:
    """Analyse every year; rows come back in increasing year order."""
    if variant not in CORRELATION_VARIANTS:
        raise ValueError(f"unknown correlation variant {variant!r}")
    nets = list(networks.values()) if isinstance(networks, Mapping) else list(networks)
    if not nets:
        raise ValueError("need at least one network")
    nets.sort(key=lambda g: g.year)
    if len({g.year for g in nets}) != len(nets):
        raise ValueError("duplicate year in network series")

    def run(g: NetTradeNetwork) -> YearAnalysis:
        return analyze_year(g, seed, resolution, variant)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, nets))
    else:
        results = [run(g) for g in nets]
    return TimeSeries(results)


# --- writers ---------------------------------------------------------------


def _num(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_summary_json(series: TimeSeries, sink: IO[str]) -> None:
    json.dump([s.to_dict() for s in series.summaries], sink, indent=2)
    sink.write("\n")


NODE_HEADER = ("country", "k_in", "k_out", "s_in", "s_out", "peripheral", "isolated")


def write_node_table(rows: Iterable[NodeRow], sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(NODE_HEADER)
    for r in rows:
        writer.writerow(
            (r.country, r.k_in, r.k_out, format_kcal(r.s_in), format_kcal(r.s_out),
             str(r.peripheral).lower(), str(r.isolated).lower())
        )


RANKING_HEADER = ("year", "direction", "rank", "country", "kcal")


def write_rankings(tables: Iterable[RankingTable], sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(RANKING_HEADER)
    for t in tables:
        for rank, (country, kcal) in enumerate(t.entries, start=1):
            writer.writerow((t.year, t.direction, rank, country, format_kcal(kcal)))


def write_zero_export(fractions: ZeroExportFractions, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("year", "fraction"))
    for year, value in fractions.per_year.items():
        writer.writerow((year, repr(value)))


def write_stage_means(fractions: ZeroExportFractions, sink: IO[str]) -> None:
    json.dump({"stage_means": fractions.stage_means}, sink, indent=2)
    sink.write("\n")


def write_correlation_variants(series: TimeSeries, sink: IO[str]) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("year", "variant", "r_unweighted", "r_weighted"))
    for y in series.years:
        for variant in CORRELATION_VARIANTS:
            r_u, r_w = y.correlations[variant]
            writer.writerow((y.summary.year, variant, _num(r_u), _num(r_w)))


def write_export_shares(networks: Iterable[NetTradeNetwork], sink: IO[str], k: int = 10) -> None:
    """Share of total net flow held by each year's top-``k`` exporters."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(("year", "k", "share"))
    for g in sorted(networks, key=lambda g: g.year):
        top = [c for c, _ in rank_top(g, "export", k).entries]
        writer.writerow((g.year, k, _num(_maybe(export_share, g, top))))
