import io
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from calnet.community import detect_communities, modularity
from calnet.errors import UndefinedMetricError
from calnet.metrics import connectivity, degree_correlation, heterogeneity, node_correlation_similarity
from calnet.report import (
    TimeSeries,
    analyze_year,
    export_share,
    metric_series,
    node_table,
    peripheral_nodes,
    rank_top,
    write_rankings,
    write_summary_json,
    zero_export_fraction,
)
from conftest import cycle, net, networks, planted


def strengths_fixture():
    # out-strengths BRA 9, USA 7, ARG 7; X only imports
    return net({("BRA", "X"): 9.0, ("USA", "X"): 7.0, ("ARG", "X"): 7.0}, year=1990)


def test_rank_top_tie_break():
    t = rank_top(strengths_fixture(), "export", 3)
    assert t.entries == (("BRA", 9.0), ("ARG", 7.0), ("USA", 7.0))


def test_rank_top_short_table_and_import():
    g = strengths_fixture()
    assert len(rank_top(g, "export", 10).entries) == 3
    assert rank_top(g, "import", 5).entries == (("X", 23.0),)
    with pytest.raises(ValueError):
        rank_top(g, "export", 0)


@given(networks(min_edges=1))
def test_full_ranking_sums_to_total(g):
    t = rank_top(g, "export", g.n_nodes)
    assert math.fsum(s for _, s in t.entries) == pytest.approx(g.total_weight, rel=1e-9)


def test_export_share():
    g = strengths_fixture()
    assert export_share(g, g.nodes) == 1.0
    assert export_share(g, []) == 0.0
    assert export_share(g, ["BRA"]) == pytest.approx(9 / 23)
    with pytest.raises(UndefinedMetricError):
        export_share(net({}, nodes=["a"]), ["a"])
    with pytest.raises(ValueError):
        export_share(g, ["ZZZ"])


@given(networks(min_edges=1), st.data())
def test_export_share_is_monotone(g, data):
    subset = data.draw(st.sets(st.sampled_from(g.nodes)))
    extra = data.draw(st.sampled_from(g.nodes))
    assert export_share(g, subset | {extra}) >= export_share(g, subset)


def test_peripheral_nodes():
    star = net({("H", "a"): 1.0, ("H", "b"): 1.0, ("H", "c"): 1.0})
    assert peripheral_nodes(star) == {"a", "b", "c"}
    assert peripheral_nodes(cycle(3)) == frozenset()
    isolated = net({("a", "b"): 1.0}, nodes=["a", "b", "z"])
    assert peripheral_nodes(isolated) == {"b", "z"}


@given(networks())
def test_peripheral_nodes_have_no_exports(g):
    exporters = {u for u, _ in g.edges}
    assert peripheral_nodes(g).isdisjoint(exporters)
    assert peripheral_nodes(g) | exporters == set(g.nodes)


def test_zero_export_fraction_and_stages():
    half = net({("a", "b"): 1.0, ("c", "d"): 1.0}, year=1990)  # b, d peripheral
    none = net({("a", "b"): 1.0, ("b", "a2"): 1.0, ("a2", "a"): 1.0}, year=2005)
    gap = net({("a", "b"): 1.0}, year=1998)
    res = zero_export_fraction([none, half, gap])
    assert res.per_year == {1990: 0.5, 1998: 0.5, 2005: 0.0}
    assert list(res.per_year) == [1990, 1998, 2005]
    assert res.stage_means == {"1986-1996": 0.5, "2001-2013": 0.0, "2014-2022": None}


def test_stage_mean_is_exact_mean():
    nets = [net({("a", "b"): 1.0}, nodes=["a", "b"] + [f"z{i}" for i in range(y % 4)], year=y)
            for y in range(1986, 1997)]
    res = zero_export_fraction(nets)
    values = [res.per_year[y] for y in range(1986, 1997)]
    assert res.stage_means["1986-1996"] == math.fsum(values) / len(values)


def test_node_table_flags():
    g = net({("a", "b"): 2.0}, nodes=["a", "b", "z"])
    rows = {r.country: r for r in node_table(g)}
    assert (rows["a"].peripheral, rows["a"].isolated) == (False, False)
    assert (rows["b"].peripheral, rows["b"].isolated) == (True, False)
    assert (rows["z"].peripheral, rows["z"].isolated) == (True, True)


def test_single_year_matches_individual_metrics():
    g = planted()
    row = metric_series([g]).summaries[0]
    assert row.N == 10 and row.L == g.n_edges
    assert row.connectivity == connectivity(g)
    assert row.h == heterogeneity(g)
    assert row.h_w == heterogeneity(g, True)
    assert row.r_unweighted == node_correlation_similarity(g, False)
    assert row.r_weighted == node_correlation_similarity(g, True)
    assert row.degree_corr == degree_correlation(g)
    assert row.Q_unweighted == modularity(g, detect_communities(g, False), False)
    assert row.Q_weighted == modularity(g, detect_communities(g, True), True)


def test_identical_years_give_identical_rows():
    a, b = planted(), planted()
    b = type(b)(2001, b.nodes, b.edges)
    rows = metric_series({2001: b, 2000: a}).summaries
    assert [r.year for r in rows] == [2000, 2001]
    da, db = rows[0].to_dict(), rows[1].to_dict()
    da.pop("year"), db.pop("year")
    assert da == db


def test_degenerate_year_reports_absent_values():
    y = analyze_year(net({}, nodes=["a", "b"], year=1999))
    s = y.summary
    assert s.connectivity == 0.0
    assert s.h is None and s.h_w is None and s.degree_corr is None
    assert s.Q_unweighted is None and s.Q_weighted is None
    buf = io.StringIO()
    write_summary_json(TimeSeries([y]), buf)
    data = json.loads(buf.getvalue())
    assert data[0]["h"] is None
    assert set(data[0]) == {"year", "N", "L", "connectivity", "h", "h_w", "r_unweighted", "r_weighted",
                            "degree_corr", "Q_unweighted", "Q_weighted"}


def test_variant_selects_summary_value():
    g = planted()
    y = analyze_year(g, variant="in-out-self")
    assert y.summary.r_weighted == node_correlation_similarity(g, True, "in-out-self")
    assert set(y.correlations) == {"row-row", "in-out-self"}


def test_threaded_series_matches_serial():
    nets = [type(planted())(y, planted().nodes, planted(y).edges) for y in range(2000, 2006)]
    serial = metric_series(nets)
    threaded = metric_series(nets, threads=4)
    assert serial.summaries == threaded.summaries


def test_rankings_csv():
    buf = io.StringIO()
    write_rankings([rank_top(strengths_fixture(), "export", 2)], buf)
    assert buf.getvalue() == "year,direction,rank,country,kcal\n1990,export,1,BRA,9\n1990,export,2,ARG,7\n"
