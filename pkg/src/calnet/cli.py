"""``calnet`` command line: build, analyze, validate."""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

from . import __version__
from .community import write_partition
from .config import ConfigError, RunConfig, make_config
from .errors import CalnetError
from .ingest import (
    FactorTable,
    IngestStats,
    ingest,
    iter_trade_records,
    parse_nutritive_factors,
    to_calories,
)
from .netgraph import NetTradeNetwork, build_net_network, export_edge_list, read_edge_list
from .report import (
    STAGES,
    TimeSeries,
    ZeroExportFractions,
    metric_series,
    rank_top,
    stage_label,
    write_correlation_variants,
    write_export_shares,
    write_node_table,
    write_rankings,
    write_stage_means,
    write_summary_json,
    write_zero_export,
    zero_export_fraction,
)

LOGGER = logging.getLogger("calnet")

MANIFEST = "manifest.json"


def atomic_write(path: Path, write: Callable[[io.StringIO], None]) -> str:
    """Render with ``write`` and move into place; returns the sha256 of the bytes."""
    buf = io.StringIO()
    write(buf)
    data = buf.getvalue().encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return hashlib.sha256(data).hexdigest()


def thread_count() -> int:
    raw = os.environ.get("CALNET_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CALNET_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("CALNET_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


class _HashingReader:
    """Iterate lines of a binary file while hashing every byte."""

    def __init__(self, path: Path) -> None:
        self.path = path
        self.digest = hashlib.sha256()
        self.size = 0

    def __iter__(self) -> Iterator[bytes]:
        with open(self.path, "rb") as fh:
            for line in fh:
                self.digest.update(line)
                self.size += len(line)
                yield line

    def info(self) -> dict:
        return {"path": str(self.path), "bytes": self.size, "sha256": self.digest.hexdigest()}


def _open_input(path: Path, what: str) -> _HashingReader:
    if not path.is_file():
        raise CalnetError(f"{what} file not found: {path}")
    return _HashingReader(path)


@dataclass
class BuildResult:
    networks: dict[int, NetTradeNetwork]
    stats: IngestStats


def _load_factors(path: Path) -> tuple[FactorTable, dict]:
    reader = _open_input(path, "factors")
    table = parse_nutritive_factors(iter(reader))
    return table, reader.info()


def cmd_build(cfg: RunConfig) -> BuildResult:
    """Ingest, net and write per-year edge lists plus stats and manifest."""
    cfg.require("trade_path", "factors_path", "output_dir")
    assert cfg.trade_path and cfg.factors_path and cfg.output_dir
    factors, factors_info = _load_factors(cfg.factors_path)
    trade = _open_input(cfg.trade_path, "trade")
    matrices, stats = ingest(iter(trade), factors, cfg.ingest)
    trade_info = trade.info()
    networks = {year: build_net_network(m) for year, m in matrices.items()}

    out = cfg.output_dir
    years = []
    for year, g in sorted(networks.items()):
        name = f"edges_{year}.csv"
        digest = atomic_write(out / name, lambda buf, g=g: export_edge_list(g, buf))
        years.append({"year": year, "nodes": list(g.nodes), "edges_file": name, "sha256": digest})
    stats_digest = atomic_write(out / "ingest_stats.json", lambda buf: buf.write(stats.to_json()))
    manifest = {
        "tool": "calnet",
        "version": __version__,
        "config": cfg.echo(),
        "inputs": {"trade": trade_info, "factors": factors_info},
        "ingest": {
            "stats_file": "ingest_stats.json",
            "sha256": stats_digest,
            "bytes_read": stats.bytes_read,
            "coverage": stats.coverage,
            "records_excluded_secondary": stats.records_excluded,
            "missing_items": sorted(stats.missing_items),
        },
        "years": years,
    }
    atomic_write(out / MANIFEST, lambda buf: (json.dump(manifest, buf, indent=2), buf.write("\n")))
    if stats.coverage < 1.0:
        LOGGER.warning("factor coverage %.6f: %d record(s) without a nutritive factor",
                       stats.coverage, stats.records_missing_factor)
    LOGGER.info("built %d year(s) into %s", len(networks), out)
    return BuildResult(networks, stats)


def load_built_networks(output_dir: Path) -> dict[int, NetTradeNetwork]:
    """Reload networks written by :func:`cmd_build`."""
    path = output_dir / MANIFEST
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise CalnetError(f"no build outputs in {output_dir} ({exc}); run 'calnet build' "
                          "or configure trade_path and factors_path") from exc
    networks = {}
    for entry in manifest["years"]:
        with open(output_dir / entry["edges_file"], encoding="utf-8", newline="") as fh:
            networks[entry["year"]] = read_edge_list(fh, entry["nodes"], entry["year"])
    return networks


def cmd_analyze(cfg: RunConfig) -> None:
    """Write every analysis product for the configured inputs."""
    cfg.require("output_dir")
    assert cfg.output_dir is not None
    if cfg.trade_path is not None and cfg.factors_path is not None:
        networks = cmd_build(cfg).networks
    else:
        networks = load_built_networks(cfg.output_dir)
    out = cfg.output_dir
    nets = [networks[y] for y in sorted(networks)]

    if nets:
        series = metric_series(nets, cfg.seed, cfg.resolution, cfg.correlation_variant,  # type: ignore[arg-type]
                               threads=thread_count())
        fractions = zero_export_fraction(nets)
    else:
        series = TimeSeries()
        fractions = ZeroExportFractions({}, {stage_label(s): None for s in STAGES})

    atomic_write(out / "summary.json", lambda buf: write_summary_json(series, buf))
    for y in series.years:
        atomic_write(out / f"nodes_{y.summary.year}.csv", lambda buf, y=y: write_node_table(y.nodes, buf))
    tables = [rank_top(g, d, cfg.top_k) for g in nets for d in ("export", "import")]
    atomic_write(out / "rankings.csv", lambda buf: write_rankings(tables, buf))
    atomic_write(out / "zero_export.csv", lambda buf: write_zero_export(fractions, buf))
    atomic_write(out / "zero_export_stages.json", lambda buf: write_stage_means(fractions, buf))
    atomic_write(out / "correlation_variants.csv", lambda buf: write_correlation_variants(series, buf))
    atomic_write(out / "export_shares.csv", lambda buf: write_export_shares(nets, buf))

    part_dir = out / "partitions"
    for y in series.years:
        for flag, part in (("unweighted", y.partition_unweighted), ("weighted", y.partition_weighted)):
            if part is not None:
                atomic_write(part_dir / f"partition_{y.summary.year}_{flag}.csv",
                             lambda buf, part=part: write_partition(part, buf))
    params = {"seed": cfg.seed, "resolution": cfg.resolution, "weighted": [False, True],
              "algorithm": "greedy multi-level (Louvain)"}
    atomic_write(part_dir / "params.json", lambda buf: (json.dump(params, buf, indent=2), buf.write("\n")))
    LOGGER.info("analyzed %d year(s) into %s", len(nets), out)


def cmd_validate(cfg: RunConfig) -> int:
    """Dry-run schema and factor-coverage check. Returns an exit code."""
    cfg.require("trade_path", "factors_path")
    assert cfg.trade_path and cfg.factors_path
    factors, _ = _load_factors(cfg.factors_path)
    stats = IngestStats()
    for record in iter_trade_records(iter(_open_input(cfg.trade_path, "trade")), cfg.ingest, stats):
        to_calories(record, factors, cfg.ingest, stats)
    for line, reason in stats.samples:
        print(f"warning: {cfg.trade_path}: line {line}: rejected ({reason})", file=sys.stderr)
    rejected = sum(stats.rows_rejected.values())
    if rejected > len(stats.samples):
        print(f"warning: {rejected - len(stats.samples)} more rejected row(s) not shown", file=sys.stderr)
    if stats.missing_items:
        print(f"warning: no nutritive factor for item(s): {', '.join(sorted(stats.missing_items))}",
              file=sys.stderr)
    if stats.coverage < 1.0:
        print(f"warning: factor coverage below 1 ({stats.coverage:.6f})", file=sys.stderr)
    print(f"rows_read {stats.rows_read}")
    print(f"rows_accepted {stats.rows_accepted}")
    print(f"coverage {stats.coverage:.6f}")
    return 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--trade", dest="trade_path", help="trade CSV")
    common.add_argument("--factors", dest="factors_path", help="nutritive factors CSV")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--from", dest="year_from", type=int, help="first year (default 1986)")
    common.add_argument("--to", dest="year_to", type=int, help="last year (default 2022)")
    common.add_argument("--mass-unit", dest="mass_unit", choices=("tonnes", "kilograms"))
    common.add_argument("-v", "--verbose", action="store_true")

    analysis = argparse.ArgumentParser(add_help=False)
    analysis.add_argument("--seed", type=int)
    analysis.add_argument("--resolution", type=float)
    analysis.add_argument("--top-k", dest="top_k", type=int)
    analysis.add_argument("--correlation-variant", dest="correlation_variant",
                          choices=("row-row", "in-out-self"))

    parser = argparse.ArgumentParser(prog="calnet", description="Net food-calorie trade networks.")
    parser.add_argument("--version", action="version", version=f"calnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("build", parents=[common], help="ingest inputs and write yearly edge lists")
    sub.add_parser("analyze", parents=[common, analysis], help="compute metrics and reports")
    sub.add_parser("validate", parents=[common], help="check inputs without writing anything")
    return parser


_NON_CONFIG = {"command", "config", "verbose"}


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    overrides = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    try:
        cfg = make_config(args.config, overrides)
        if args.command == "build":
            cmd_build(cfg)
        elif args.command == "analyze":
            cmd_analyze(cfg)
        else:
            return cmd_validate(cfg)
    except (CalnetError, OSError) as exc:
        print(f"calnet {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
