"""Command-line front end: snapshot validation, metric computation, and
report emission.

Outputs are plot-ready CSV/JSON with stable ordering and fixed decimal
formatting, so identical inputs and flags produce byte-identical output
directories. Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from datetime import date
from pathlib import Path
from typing import Sequence

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from vaultscope import comovement, economics, exposure, network
from vaultscope.concentration import chain_hhi, factor_hhi, issuer_concentration
from vaultscope.data import (
    Dataset,
    DatasetError,
    EntityId,
    EntityKind,
    UndefinedMetricError,
    align_calendar,
    load_dataset,
)
from vaultscope.disclosure import StressScenario, emit_disclosure_bundle, render_bundle

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2

DEFAULTS = {
    "threshold": 0.15,
    "weight_mode": "min_sum",
    "tail_q": 0.10,
    "tail_mode": "union",
    "min_obs": 30,
    "return_mode": "log",
    "fee_capture_mode": "mean",
    "top_n": 5,
    "match_window_seconds": 7 * 86_400,
    "min_cohort_n": 10,
}


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _round12(x: float) -> float:
    return float(f"{x:.12g}")


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, doc: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def _parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise UsageError(f"bad date {text!r}: {exc}") from None


def _matrix_rows(matrix: comovement.CorrelationMatrix) -> tuple[list[str], list[list[str]]]:
    names = [e.name for e in matrix.entities]
    header = ["entity"] + names
    rows = []
    for i, e in enumerate(matrix.entities):
        row = [e.name]
        for j in range(len(names)):
            v = matrix.values[i, j]
            row.append("" if math.isnan(v) else _fmt(float(v)))
        rows.append(row)
    return header, rows


def _undefined_list(matrix: comovement.CorrelationMatrix) -> list[list[str]]:
    return [[a.name, b.name] for a, b in matrix.undefined]


# ---------------------------------------------------------------------------
# Settings: config file values fill in flags the user did not pass
# ---------------------------------------------------------------------------


class Settings:
    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = args
        self.config = config

    def get(self, section: str, key: str, default=None):
        cli_value = getattr(self.args, key, None)
        if cli_value is not None:
            return cli_value
        if section in self.config and key in self.config[section]:
            return self.config[section][key]
        if key in DEFAULTS:
            return DEFAULTS[key]
        return default


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise UsageError(f"config file {path} not found")
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _resolve_data_dir(args: argparse.Namespace, config: dict) -> Path:
    candidate = args.data or config.get("global", {}).get("data") or os.environ.get("VAULTSCOPE_DATA")
    if not candidate:
        raise UsageError("no dataset directory: pass --data, set VAULTSCOPE_DATA, or configure [global].data")
    p = Path(candidate)
    if not p.is_dir():
        raise UsageError(f"dataset directory {p} does not exist")
    return p


def _parse_scenarios(raw: Sequence[str] | None, config: dict) -> list[StressScenario]:
    if raw:
        scenarios = []
        for item in raw:
            name, sep, bps = item.partition(":")
            if not sep:
                raise UsageError(f"bad --scenario {item!r}, expected NAME:SLIPPAGE_BPS")
            try:
                scenarios.append(StressScenario(name, int(bps)))
            except ValueError as exc:
                raise UsageError(f"bad --scenario {item!r}: {exc}") from None
        return scenarios
    configured = config.get("disclose", {}).get("scenario", [])
    if configured:
        try:
            return [
                StressScenario(
                    s["name"], int(s.get("slippage_bps", 100)), s.get("haircuts", {})
                )
                for s in configured
            ]
        except (KeyError, ValueError, TypeError) as exc:
            raise UsageError(f"bad [[disclose.scenario]] entry: {exc}") from None
    return [StressScenario("base", 100)]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(dataset: Dataset) -> int:
    counts = {
        "tvl": len(dataset.tvl),
        "positions": len(dataset.positions),
        "loans": len(dataset.loans),
        "fees": len(dataset.fees),
        "events": len(dataset.events),
        "liquidity": len(dataset.liquidity.depth_at_slippage),
        "deps": len(dataset.dependencies),
        "classified_assets": len(dataset.classification.class_of),
    }
    for table, n in counts.items():
        print(f"{table}: {n} rows")
    for w in dataset.warnings:
        print(f"warning: {w}")
    print("0 violations")
    return EXIT_OK


def cmd_concentration(dataset: Dataset, settings: Settings, out_dir: Path) -> list[Path]:
    top_n = int(settings.get("concentration", "top_n"))
    rows: list[list[str]] = []
    for entity in dataset.tvl_entities():
        for d in dataset.tvl_series(entity).dates:
            try:
                point = chain_hhi(dataset, entity, d)
            except UndefinedMetricError:
                continue
            rows.append(
                [entity.kind.value, entity.name, d.isoformat(), "chain_hhi", _fmt(point.hhi), str(point.n_buckets)]
            )
    for curator in dataset.curators():
        for d in dataset.position_dates():
            mine = dataset.positions_for(curator, d)
            if not mine:
                continue
            try:
                point = factor_hhi(mine, dataset.classification)
                conc = issuer_concentration(mine, top_n=top_n, classification=dataset.classification)
            except UndefinedMetricError:
                continue
            rows.append(
                [curator.kind.value, curator.name, d.isoformat(), "factor_hhi", _fmt(point.hhi), str(point.n_buckets)]
            )
            rows.append(
                [curator.kind.value, curator.name, d.isoformat(), "issuer_hhi", _fmt(conc.hhi), str(conc.n_buckets)]
            )
    rows.sort(key=lambda r: (r[3], r[0], r[1], r[2]))
    path = out_dir / "concentration.csv"
    _write_csv(path, ["entity_kind", "entity_name", "date", "metric", "value", "n_buckets"], rows)
    return [path]


def cmd_exposure(dataset: Dataset, settings: Settings, out_dir: Path) -> list[Path]:
    merge_rwa = bool(settings.get("exposure", "merge_rwa", False))
    panel = exposure.exposure_panel(dataset, merge_rwa_into_stable=merge_rwa)
    rows = [
        [d.isoformat(), curator.name, cls.value, _fmt(share)]
        for d, curator, cls, share in panel.rows
    ]
    paths = [out_dir / "exposure.csv"]
    _write_csv(paths[0], ["date", "curator", "class", "share"], rows)

    as_of = settings.get("exposure", "as_of")
    if isinstance(as_of, str):
        as_of = _parse_date(as_of)
    if as_of is None:
        dates = dataset.position_dates()
        as_of = dates[-1] if dates else None
    if as_of is not None:
        try:
            shares = exposure.curator_tvl_shares(dataset, as_of)
        except UndefinedMetricError:
            shares = {}
        share_rows = [[c.name, _fmt(v)] for c, v in shares.items()]
        paths.append(out_dir / "curator_tvl_shares.csv")
        _write_csv(paths[1], ["curator", "share"], share_rows)
    return paths


def cmd_comove(dataset: Dataset, settings: Settings, out_dir: Path) -> list[Path]:
    min_obs = int(settings.get("comove", "min_obs"))
    return_mode = str(settings.get("comove", "return_mode"))
    tail_q = float(settings.get("comove", "tail_q"))
    tail_mode = str(settings.get("comove", "tail_mode"))
    split_raw = settings.get("comove", "split_date")
    split_date = _parse_date(split_raw) if isinstance(split_raw, str) else split_raw

    paths: list[Path] = []
    meta: dict = {
        "return_mode": return_mode,
        "min_obs": min_obs,
        "tail_q": tail_q,
        "tail_mode": tail_mode,
        "alignment": {"returns": "drop_gaps", "drawdowns": "forward_fill"},
    }

    protocols = dataset.tvl_entities(EntityKind.protocol)
    protocol_returns = []
    skipped_pairs = {}
    for p in protocols:
        series = dataset.tvl_series(p)
        if len(series.points) < 2:
            continue
        r = comovement.log_returns(series, return_mode)
        protocol_returns.append(r)
        skipped_pairs[p.name] = r.skipped_pairs
    meta["skipped_return_pairs"] = dict(sorted(skipped_pairs.items()))

    if protocol_returns:
        all_dates = sorted({d for r in protocol_returns for d, _ in r.points})
        try:
            w1, w2 = comovement.split_subsamples(all_dates, split_date)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        meta["sample1"] = {"start": w1.start.isoformat(), "end": w1.end.isoformat()}
        meta["sample2"] = {"start": w2.start.isoformat(), "end": w2.end.isoformat()}
        for label, window in (("sample1", w1), ("sample2", w2)):
            matrix = comovement.correlation_matrix(protocol_returns, window, min_obs)
            header, rows = _matrix_rows(matrix)
            path = out_dir / f"tvl_correlation_{label}.csv"
            _write_csv(path, header, rows)
            paths.append(path)
            meta[f"undefined_{label}"] = _undefined_list(matrix)

    curators = dataset.curators()
    curator_series = []
    for c in curators:
        series = dataset.curator_tvl_series(c)
        if series.points:
            curator_series.append(align_calendar(series, "forward_fill").series)
    if curator_series:
        dd_rows = []
        drawable = []
        for s in curator_series:
            try:
                path_dd = comovement.drawdown_series(s)
            except UndefinedMetricError:
                meta.setdefault("drawdown_skipped", []).append(s.entity.name)
                continue
            drawable.append(s)
            for d, v in path_dd:
                dd_rows.append([s.entity.name, d.isoformat(), _fmt(v)])
        dd_rows.sort(key=lambda r: (r[0], r[1]))
        path = out_dir / "drawdowns.csv"
        _write_csv(path, ["entity", "date", "drawdown"], dd_rows)
        paths.append(path)

        dd_matrix = comovement.drawdown_matrix(drawable, min_obs=3)
        header, rows = _matrix_rows(dd_matrix)
        path = out_dir / "drawdown_correlation.csv"
        _write_csv(path, header, rows)
        paths.append(path)
        meta["undefined_drawdown"] = _undefined_list(dd_matrix)

        raw_series = [dataset.curator_tvl_series(c) for c in curators]
        curator_returns = [
            comovement.log_returns(s, return_mode) for s in raw_series if len(s.points) >= 2
        ]
        tail = comovement.tail_matrix(curator_returns, tail_q, None, tail_mode)
        header, rows = _matrix_rows(tail)
        path = out_dir / "tail_dependence.csv"
        _write_csv(path, header, rows)
        paths.append(path)
        meta["undefined_tail"] = _undefined_list(tail)

    meta_path = out_dir / "comove.json"
    _write_json(meta_path, meta)
    paths.append(meta_path)
    return paths


def cmd_network(dataset: Dataset, settings: Settings, out_dir: Path) -> list[Path]:
    threshold = float(settings.get("network", "threshold"))
    weight_mode = str(settings.get("network", "weight_mode"))
    average = bool(settings.get("network", "average", False))
    as_of = settings.get("network", "as_of")
    if isinstance(as_of, str):
        as_of = _parse_date(as_of)
    graph = network.build_graph(dataset, as_of, threshold, weight_mode, average)

    doc: dict = {
        "nodes": [n.name for n in graph.nodes],
        "edges": [
            {"i": graph.nodes[i].name, "j": graph.nodes[j].name, "w": _round12(w)}
            for i, j, w in graph.edges
        ],
        "threshold": threshold,
    }
    centrality: dict = {}
    if graph.n >= 2:
        centrality["degree"] = {
            n.name: _round12(v) for n, v in network.degree_centrality(graph).items()
        }
    centrality["betweenness"] = {
        n.name: _round12(v) for n, v in network.betweenness_centrality(graph).items()
    }
    eig = network.eigenvector_centrality(graph)
    centrality["eigenvector"] = {n.name: _round12(v) for n, v in eig.scores.items()}
    doc["centrality"] = centrality
    doc["metadata"] = {
        **graph.metadata,
        "eigenvector_converged": eig.converged,
        "eigenvector_component": [n.name for n in eig.component],
        "eigenvector_normalization": "euclidean, largest component",
    }
    path = out_dir / "network.json"
    _write_json(path, doc)
    return [path]


def cmd_economics(dataset: Dataset, settings: Settings, out_dir: Path) -> list[Path]:
    capture_mode = str(settings.get("economics", "fee_capture_mode"))
    ratio_of_sums = capture_mode == "ratio_of_sums"
    if capture_mode not in ("mean", "ratio_of_sums"):
        raise UsageError(f"bad fee_capture_mode {capture_mode!r}")
    points, warnings = economics.frontier_points(dataset)
    for p in points:
        if p.flagged_over_one:
            warnings.append(
                f"{p.entity}: utilization above 1 on {p.flagged_over_one} day(s), possible data mismatch"
            )
    captures: dict[EntityId, float] = {}
    fee_entities = sorted({f.entity for f in dataset.fees}, key=lambda e: e.sort_key)
    for entity in fee_entities:
        try:
            captures[entity] = economics.fee_capture(
                dataset.fees_for(entity), ratio_of_sums=ratio_of_sums
            )
        except UndefinedMetricError:
            continue

    rows: list[list[str]] = []
    covered = set()
    for p in points:
        covered.add(p.entity)
        capture = captures.get(p.entity)
        rows.append(
            [
                p.entity.kind.value,
                p.entity.name,
                _fmt(p.mean_utilization),
                _fmt(p.fee_yield),
                _fmt(capture) if capture is not None else "",
            ]
        )
    for entity in fee_entities:
        if entity in covered or entity not in captures:
            continue
        rows.append([entity.kind.value, entity.name, "", "", _fmt(captures[entity])])
    path = out_dir / "economics.csv"
    _write_csv(
        path,
        ["entity_kind", "entity_name", "mean_utilization", "annualized_fee_yield", "fee_capture"],
        rows,
    )
    if warnings:
        _write_json(out_dir / "economics_warnings.json", {"warnings": sorted(warnings)})
        return [path, out_dir / "economics_warnings.json"]
    return [path]


def cmd_disclose(
    dataset: Dataset,
    settings: Settings,
    out_dir: Path,
    entity_name: str,
    entity_kind: str,
    scenarios: list[StressScenario],
) -> list[Path]:
    as_of = settings.get("disclose", "as_of")
    if isinstance(as_of, str):
        as_of = _parse_date(as_of)
    try:
        kind = EntityKind(entity_kind)
    except ValueError:
        raise UsageError(f"bad entity kind {entity_kind!r}") from None
    if kind is EntityKind.protocol:
        raise UsageError("disclosure bundles cover curator or vault entities")
    entity = EntityId(kind, entity_name)
    try:
        doc = emit_disclosure_bundle(
            dataset,
            entity,
            as_of,
            scenarios,
            top_n=int(settings.get("disclose", "top_n")),
            match_window_seconds=int(settings.get("disclose", "match_window_seconds")),
            min_cohort_n=int(settings.get("disclose", "min_cohort_n")),
        )
    except UndefinedMetricError as exc:
        raise UsageError(str(exc)) from None
    path = out_dir / f"disclosure_{entity_name}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_bundle(doc), encoding="utf-8")
    return [path]


def cmd_report(
    dataset: Dataset, settings: Settings, out_dir: Path, data_dir: Path, scenarios: list[StressScenario]
) -> list[Path]:
    produced: list[Path] = []
    produced += cmd_concentration(dataset, settings, out_dir / "concentration")
    produced += cmd_exposure(dataset, settings, out_dir / "exposure")
    produced += cmd_comove(dataset, settings, out_dir / "comove")
    produced += cmd_network(dataset, settings, out_dir / "network")
    produced += cmd_economics(dataset, settings, out_dir / "economics")
    for curator in dataset.curators():
        produced += cmd_disclose(
            dataset, settings, out_dir / "disclosure", curator.name, "curator", scenarios
        )

    as_of = settings.get("report", "as_of")
    if isinstance(as_of, str):
        as_of = _parse_date(as_of)
    if as_of is None:
        as_of = dataset.last_date()

    sources = []
    for p in sorted(data_dir.iterdir()):
        if p.is_file():
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            sources.append({"name": p.name, "sha256": digest})

    manifest = {
        "schema": "vaultscope.report/v1",
        "as_of": as_of.isoformat(),
        "source_files": sources,
        "parameters": {
            "concentration": {"top_n": int(settings.get("concentration", "top_n"))},
            "exposure": {"merge_rwa": bool(settings.get("exposure", "merge_rwa", False))},
            "comove": {
                "min_obs": int(settings.get("comove", "min_obs")),
                "return_mode": str(settings.get("comove", "return_mode")),
                "tail_q": float(settings.get("comove", "tail_q")),
                "tail_mode": str(settings.get("comove", "tail_mode")),
                "split_date": str(settings.get("comove", "split_date") or "midpoint"),
                "alignment": {"returns": "drop_gaps", "drawdowns": "forward_fill"},
            },
            "network": {
                "threshold": float(settings.get("network", "threshold")),
                "weight_mode": str(settings.get("network", "weight_mode")),
                "average": bool(settings.get("network", "average", False)),
                "graph_date": "last snapshot date unless overridden",
            },
            "economics": {
                "fee_capture_mode": str(settings.get("economics", "fee_capture_mode")),
                "annualization": "365-day, gross fees",
            },
            "disclose": {
                "scenarios": [
                    {"name": s.name, "slippage_bps": s.slippage_bps, "haircuts": dict(sorted(s.haircuts.items()))}
                    for s in scenarios
                ],
                "top_n": int(settings.get("disclose", "top_n")),
                "match_window_seconds": int(settings.get("disclose", "match_window_seconds")),
                "min_cohort_n": int(settings.get("disclose", "min_cohort_n")),
            },
        },
        "policies": {
            "unknown_asset_policy": dataset.classification.default_policy,
            "curator_tvl_source": "tvl table if present, else summed positions",
            "decimal_format": "12 significant digits",
        },
        "warnings": list(dataset.warnings),
        "outputs": sorted(str(p.relative_to(out_dir)) for p in produced),
    }
    manifest_path = out_dir / "manifest.json"
    _write_json(manifest_path, manifest)
    produced.append(manifest_path)
    return produced


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaultscope",
        description="Deterministic analytics over modular-credit snapshot data.",
    )
    parser.add_argument("--data", help="dataset directory (or set VAULTSCOPE_DATA)")
    parser.add_argument("--config", help="TOML config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", help="parse the dataset and report invariant violations")

    p = sub.add_parser("concentration", help="chain/factor/issuer HHI panels")
    p.add_argument("--out", required=True)
    p.add_argument("--top-n", dest="top_n", type=int)

    p = sub.add_parser("exposure", help="class-share panels and curator TVL shares")
    p.add_argument("--out", required=True)
    p.add_argument("--as-of", dest="as_of")
    p.add_argument("--merge-rwa", dest="merge_rwa", action="store_const", const=True)

    p = sub.add_parser("comove", help="correlation matrices, drawdowns, tail dependence")
    p.add_argument("--out", required=True)
    p.add_argument("--split-date", dest="split_date")
    p.add_argument("--tail-q", dest="tail_q", type=float)
    p.add_argument("--tail-mode", dest="tail_mode", choices=comovement.TAIL_MODES)
    p.add_argument("--min-obs", dest="min_obs", type=int)
    p.add_argument("--return-mode", dest="return_mode", choices=("log", "simple"))

    p = sub.add_parser("network", help="curator overlap graph and centralities")
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--weight-mode", dest="weight_mode", choices=network.WEIGHT_MODES)
    p.add_argument("--as-of", dest="as_of")
    p.add_argument("--average", action="store_const", const=True)

    p = sub.add_parser("economics", help="utilization, fee yield, fee capture")
    p.add_argument("--out", required=True)
    p.add_argument("--fee-capture-mode", dest="fee_capture_mode", choices=("mean", "ratio_of_sums"))

    p = sub.add_parser("disclose", help="emit a transparency bundle for one entity")
    p.add_argument("--out", required=True)
    p.add_argument("--entity", required=True)
    p.add_argument("--entity-kind", dest="entity_kind", default="curator")
    p.add_argument("--scenario", action="append", help="NAME:SLIPPAGE_BPS, repeatable")
    p.add_argument("--as-of", dest="as_of")

    p = sub.add_parser("report", help="run every command and write a manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--as-of", dest="as_of")
    p.add_argument("--scenario", action="append", help="NAME:SLIPPAGE_BPS, repeatable")

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        settings = Settings(args, config)
        data_dir = _resolve_data_dir(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        dataset = load_dataset(data_dir)
    except DatasetError as exc:
        print("validation failed:", file=sys.stderr)
        for issue in exc.issues:
            print(f"  {issue}", file=sys.stderr)
        return EXIT_VALIDATION

    try:
        if args.command == "validate":
            return cmd_validate(dataset)
        out_dir = Path(args.out)
        if args.command == "concentration":
            cmd_concentration(dataset, settings, out_dir)
        elif args.command == "exposure":
            cmd_exposure(dataset, settings, out_dir)
        elif args.command == "comove":
            cmd_comove(dataset, settings, out_dir)
        elif args.command == "network":
            cmd_network(dataset, settings, out_dir)
        elif args.command == "economics":
            cmd_economics(dataset, settings, out_dir)
        elif args.command == "disclose":
            scenarios = _parse_scenarios(args.scenario, config)
            cmd_disclose(dataset, settings, out_dir, args.entity, args.entity_kind, scenarios)
        elif args.command == "report":
            scenarios = _parse_scenarios(getattr(args, "scenario", None), config)
            cmd_report(dataset, settings, out_dir, data_dir, scenarios)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UndefinedMetricError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
