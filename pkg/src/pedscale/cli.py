"""Batch command line: clean | decompose | to-dual | centrality | landuse |
stats | pipeline.

Flags override values from an optional TOML config file; the fully resolved
config (minus runtime-only knobs like worker count) is echoed into the output
GeoJSON metadata and into a TOML sidecar so runs are reproducible. Outputs
are written atomically and are byte-identical across reruns and worker
counts.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .centrality import (
    NODE_MEASURES,
    SEGMENT_MEASURES,
    AnalysisConfig,
    CentralityError,
    node_centrality,
    segment_centrality,
)
from .clean import CleanConfig, consolidate_nodes, infer_simple_geoms, remove_dangling_nodes, remove_filler_nodes
from .geojson import WGS_ENDPOINT_TOLERANCE, ParseError, export_network, import_network
from .graph import GraphError, Multigraph
from .layers import (
    AggregationConfig,
    LayerError,
    assign_to_network,
    compute_accessibilities,
    compute_mixed_uses,
    compute_stats,
    load_data_points,
)
from .metrics import MetricsTable
from .projection import project_wgs_to_utm
from .structure import build_structure, decompose, to_dual

log = logging.getLogger(__name__)

SUBCOMMANDS = ("clean", "decompose", "to-dual", "centrality", "landuse", "stats", "pipeline")


class UsageError(Exception):
    """Bad flags or config; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- tiny TOML emitter (RunConfig schema only: scalars, lists, one section level)

def toml_dumps(doc: dict) -> str:
    lines: list[str] = []
    for key, value in doc.items():
        if not isinstance(value, dict):
            lines.append(f"{key} = {_toml_value(value)}")
    for key, value in doc.items():
        if isinstance(value, dict):
            lines.append("")
            lines.append(f"[{key}]")
            for k, v in value.items():
                lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise UsageError(f"unsupported config value type: {type(v).__name__}")


# -- run summary ---------------------------------------------------------------

@dataclass
class RunSummary:
    stages: list[dict] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    wall_seconds: float = 0.0
    output_path: str = ""

    def record_stage(self, name: str, before: Multigraph, after: Multigraph) -> None:
        self.stages.append({
            "stage": name,
            "nodes_in": before.node_count, "nodes_out": after.node_count,
            "edges_in": before.edge_count, "edges_out": after.edge_count,
        })

    def render(self) -> str:
        lines = []
        for st in self.stages:
            lines.append(
                f"{st['stage']}: nodes {st['nodes_in']} -> {st['nodes_out']}, "
                f"edges {st['edges_in']} -> {st['edges_out']}"
            )
        for key, value in self.counters.items():
            lines.append(f"{key}: {value}")
        if self.output_path:
            lines.append(f"wrote {self.output_path}")
        lines.append(f"wall time {self.wall_seconds:.2f} s")
        return "\n".join(lines)

    def sidecar_doc(self, resolved: dict) -> dict:
        # deterministic: no wall time, no worker count
        doc = dict(resolved)
        doc["summary"] = {}
        for st in self.stages:
            doc["summary"][f"{st['stage']}_nodes"] = [st["nodes_in"], st["nodes_out"]]
            doc["summary"][f"{st['stage']}_edges"] = [st["edges_in"], st["edges_out"]]
        for key, value in self.counters.items():
            doc["summary"][key.replace(" ", "_")] = value
        return doc


# -- config resolution -----------------------------------------------------------

def _csv_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}")


def _csv_strs(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip() != ""]


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}")


def _pick(section: dict, key: str, flag_value, default):
    """Flag beats config file beats default."""
    if flag_value is not None:
        return flag_value
    if key in section:
        return section[key]
    return default


def _resolve_common(ns, cfg: dict) -> dict:
    input_cfg = cfg.get("input", {})
    output_cfg = cfg.get("output", {})
    path_in = _pick(input_cfg, "path", getattr(ns, "input", None), None)
    path_out = _pick(output_cfg, "path", getattr(ns, "output", None), None)
    if path_in is None:
        raise UsageError("an input is required (-i/--input or [input] path)")
    if path_out is None:
        raise UsageError("an output is required (-o/--output or [output] path)")
    return {
        "version": __version__,
        "subcommand": ns.subcommand,
        "input": {
            "path": str(path_in),
            "from_wgs": bool(_pick(input_cfg, "from_wgs", getattr(ns, "from_wgs", None), False)),
        },
        "output": {"path": str(path_out)},
    }


def _resolve_clean(ns, cfg: dict) -> dict:
    section = cfg.get("clean", {})
    consolidate = _pick(section, "consolidate_dist", getattr(ns, "consolidate_dist", None), [12.0])
    if not isinstance(consolidate, list):
        consolidate = [consolidate]
    return {
        "infer_geoms": bool(_pick(section, "infer_geoms", getattr(ns, "infer_geoms", None), False)),
        "despine": float(_pick(section, "despine", getattr(ns, "despine", None), 25.0)),
        "consolidate_dist": [float(x) for x in consolidate],
        "merge_parallel_max_len": float(
            _pick(section, "merge_parallel_max_len", getattr(ns, "merge_parallel_max_len", None), 100.0)),
        "keep_largest": bool(_pick(section, "keep_largest", getattr(ns, "keep_largest", None), True)),
    }


def _resolve_decompose(ns, cfg: dict) -> dict:
    section = cfg.get("decompose", {})
    max_length = _pick(section, "max_length", getattr(ns, "max_length", None), None)
    if max_length is None:
        raise UsageError("decompose requires --max-length (or [decompose] max_length)")
    if float(max_length) <= 0:
        raise UsageError("--max-length must be positive")
    return {"max_length": float(max_length)}


def _analysis_config(section: dict, ns, prefix: str) -> AnalysisConfig:
    distances = _pick(section, "distances", getattr(ns, "distances", None), None)
    if distances is None:
        raise UsageError(f"{prefix} requires --distances (or [{prefix}] distances)")
    betas = _pick(section, "betas", getattr(ns, "betas", None), None)
    heuristic = _pick(section, "heuristic", getattr(ns, "heuristic", None), "shortest")
    try:
        return AnalysisConfig(
            distances=[float(d) for d in distances],
            betas=None if not betas else [float(b) for b in betas],
            heuristic=str(heuristic),
        )
    except CentralityError as exc:
        raise UsageError(str(exc))


def _resolve_centrality(ns, cfg: dict) -> dict:
    section = cfg.get("centrality", {})
    ac = _analysis_config(section, ns, "centrality")
    measures = _pick(section, "measures", getattr(ns, "measures", None), None)
    segments = bool(_pick(section, "segments", getattr(ns, "segments", None), False))
    if measures is None:
        node_measures = list(NODE_MEASURES)
        seg_measures = list(SEGMENT_MEASURES) if segments else []
    else:
        measures = list(measures)
        node_measures = [m for m in measures if m in NODE_MEASURES]
        seg_measures = [m for m in measures if m in SEGMENT_MEASURES]
        unknown = [m for m in measures if m not in NODE_MEASURES + SEGMENT_MEASURES]
        if unknown:
            raise UsageError(f"unknown measure(s): {', '.join(unknown)}")
        if segments:
            seg_measures = seg_measures or list(SEGMENT_MEASURES)
    return {
        "distances": ac.distances,
        "betas": ac.betas,
        "heuristic": ac.heuristic,
        "measures": node_measures,
        "segment_measures": seg_measures,
    }


def _resolve_landuse(ns, cfg: dict) -> dict:
    section = cfg.get("landuse", {})
    data = _pick(section, "data", getattr(ns, "data", None), None)
    if data is None:
        raise UsageError("landuse requires --data (or [landuse] data)")
    category_field = _pick(section, "category_field", getattr(ns, "category_field", None), None)
    if category_field is None:
        raise UsageError("landuse requires --category-field")
    ac = _analysis_config(section, ns, "landuse")
    hill_q = _pick(section, "hill_q", getattr(ns, "hill_q", None), [0.0, 1.0, 2.0])
    categories = _pick(section, "categories", getattr(ns, "categories", None), [])
    try:
        AggregationConfig(hill_orders=[float(q) for q in hill_q])
    except LayerError as exc:
        raise UsageError(str(exc))
    return {
        "data": str(data),
        "category_field": str(category_field),
        "categories": [str(c) for c in categories],
        "hill_q": [float(q) for q in hill_q],
        "distances": ac.distances,
        "betas": ac.betas,
        "heuristic": ac.heuristic,
        "max_assign_dist": float(
            _pick(section, "max_assign_dist", getattr(ns, "max_assign_dist", None), 400.0)),
    }


def _resolve_stats(ns, cfg: dict) -> dict:
    section = cfg.get("stats", {})
    data = _pick(section, "data", getattr(ns, "data", None), None)
    if data is None:
        raise UsageError("stats requires --data (or [stats] data)")
    fields = _pick(section, "value_fields", getattr(ns, "value_field", None), None)
    if not fields:
        raise UsageError("stats requires --value-field")
    if isinstance(fields, str):
        fields = [fields]
    ac = _analysis_config(section, ns, "stats")
    return {
        "data": str(data),
        "value_fields": [str(f) for f in fields],
        "distances": ac.distances,
        "betas": ac.betas,
        "heuristic": ac.heuristic,
        "max_assign_dist": float(
            _pick(section, "max_assign_dist", getattr(ns, "max_assign_dist", None), 400.0)),
    }


def resolve_config(ns) -> dict:
    cfg = _load_config_file(getattr(ns, "config", None))
    resolved = _resolve_common(ns, cfg)
    sub = ns.subcommand
    if sub == "clean":
        resolved["clean"] = _resolve_clean(ns, cfg)
    elif sub == "decompose":
        resolved["decompose"] = _resolve_decompose(ns, cfg)
    elif sub == "to-dual":
        resolved["dual"] = {"enabled": True}
    elif sub == "centrality":
        resolved["centrality"] = _resolve_centrality(ns, cfg)
    elif sub == "landuse":
        resolved["landuse"] = _resolve_landuse(ns, cfg)
    elif sub == "stats":
        resolved["stats"] = _resolve_stats(ns, cfg)
    elif sub == "pipeline":
        if not getattr(ns, "config", None):
            raise UsageError("pipeline requires --config")
        for name, resolver in (("clean", _resolve_clean), ("decompose", _resolve_decompose),
                               ("centrality", _resolve_centrality), ("landuse", _resolve_landuse),
                               ("stats", _resolve_stats)):
            if name in cfg:
                resolved[name] = resolver(ns, cfg)
        if cfg.get("dual", {}).get("enabled"):
            resolved["dual"] = {"enabled": True}
    return resolved


# -- execution ----------------------------------------------------------------------

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise GraphError(f"cannot read {path}: {exc}")


def _write_text_atomic(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    tmp = f"{path}.tmp{os.getpid()}"
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _run_clean(g: Multigraph, c: dict, summary: RunSummary) -> Multigraph:
    before = g
    if c["infer_geoms"]:
        g = infer_simple_geoms(g)
    clean_cfg = CleanConfig(
        despine_dist=c["despine"],
        keep_largest_component=c["keep_largest"],
        merge_parallel_max_len=c["merge_parallel_max_len"],
    )
    g = remove_dangling_nodes(g, clean_cfg)
    g = remove_filler_nodes(g)
    for dist in c["consolidate_dist"]:
        pass_cfg = CleanConfig(
            despine_dist=c["despine"],
            consolidate_dist=float(dist),
            keep_largest_component=c["keep_largest"],
            merge_parallel_max_len=c["merge_parallel_max_len"],
        )
        g = consolidate_nodes(g, pass_cfg)
    summary.record_stage("clean", before, g)
    return g


def _run_analysis(g: Multigraph, resolved: dict, workers: int | None,
                  summary: RunSummary) -> MetricsTable | None:
    """Run whichever of centrality/landuse/stats sections are present."""
    needs = [k for k in ("centrality", "landuse", "stats") if k in resolved]
    if not needs:
        return None
    g_full = infer_simple_geoms(g)
    structure = build_structure(g_full)
    table: MetricsTable | None = None

    def merge(new: MetricsTable):
        nonlocal table
        table = new if table is None else table.merge(new)

    if "centrality" in resolved:
        c = resolved["centrality"]
        if c["measures"]:
            ac = AnalysisConfig(distances=c["distances"], betas=c["betas"],
                                heuristic=c["heuristic"], measures=tuple(c["measures"]))
            merge(node_centrality(structure, ac, workers=workers))
        if c["segment_measures"]:
            ac = AnalysisConfig(distances=c["distances"], betas=c["betas"],
                                heuristic=c["heuristic"], measures=tuple(c["segment_measures"]))
            merge(segment_centrality(structure, ac, workers=workers))
        summary.counters["centrality measures"] = len(c["measures"]) + len(c["segment_measures"])
    for section_name, runner in (("landuse", _run_landuse), ("stats", _run_stats)):
        if section_name in resolved:
            merge(runner(structure, resolved[section_name], workers, summary))
    return table


def _run_landuse(structure, c: dict, workers: int, summary: RunSummary) -> MetricsTable:
    entries = load_data_points(_read_text(c["data"]), category_field=c["category_field"])
    assigned = assign_to_network(entries, structure, c["max_assign_dist"])
    summary.counters["unassigned"] = sum(1 for e in assigned if e.nearest is None)
    categories = c["categories"] or sorted(
        {e.category for e in assigned if e.category is not None})
    agg = AggregationConfig(categories=list(categories), hill_orders=c["hill_q"])
    ac = AnalysisConfig(distances=c["distances"], betas=c["betas"], heuristic=c["heuristic"])
    table = compute_accessibilities(structure, assigned, agg, ac, workers=workers)
    return table.merge(compute_mixed_uses(structure, assigned, agg, ac, workers=workers))


def _run_stats(structure, c: dict, workers: int, summary: RunSummary) -> MetricsTable:
    table: MetricsTable | None = None
    ac = AnalysisConfig(distances=c["distances"], betas=c["betas"], heuristic=c["heuristic"])
    for field_name in c["value_fields"]:
        entries = load_data_points(_read_text(c["data"]), value_field=field_name)
        assigned = assign_to_network(entries, structure, c["max_assign_dist"])
        summary.counters.setdefault(
            "unassigned", sum(1 for e in assigned if e.nearest is None))
        part = compute_stats(structure, assigned, field_name, ac, workers=workers)
        table = part if table is None else table.merge(part)
    return table


def execute(resolved: dict, workers: int | None) -> RunSummary:
    t0 = time.perf_counter()
    summary = RunSummary()
    from_wgs = resolved["input"]["from_wgs"]
    g = import_network(_read_text(resolved["input"]["path"]),
                       endpoint_tolerance=WGS_ENDPOINT_TOLERANCE if from_wgs else None)
    if from_wgs:
        g = project_wgs_to_utm(g)
    # graph-transform stages round-trip through the serializer so a pipeline
    # run is byte-identical to composing the subcommands through files
    staged = False
    if "clean" in resolved:
        g = _run_clean(g, resolved["clean"], summary)
        staged = True
    if "decompose" in resolved:
        if staged:
            g = import_network(export_network(g))
        before = g
        g = decompose(g, resolved["decompose"]["max_length"])
        summary.record_stage("decompose", before, g)
        staged = True
    if "dual" in resolved:
        if staged:
            g = import_network(export_network(g))
        before = g
        g = to_dual(infer_simple_geoms(g))
        summary.record_stage("to-dual", before, g)
        staged = True
    if staged:
        g = import_network(export_network(g))
    table = _run_analysis(g, resolved, workers, summary)

    metadata = {k: v for k, v in resolved.items() if k != "version"}
    metadata["version"] = resolved["version"]
    text = export_network(infer_simple_geoms(g), metrics=table, metadata=metadata)
    _write_text_atomic(resolved["output"]["path"], text)
    summary.output_path = resolved["output"]["path"]
    summary.wall_seconds = time.perf_counter() - t0
    return summary


# -- argument parsing -----------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="pedscale", description=__doc__)
    parser.add_argument("--version", action="version", version=f"pedscale {__version__}")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("-i", "--input", help="network GeoJSON path, or - for stdin")
        p.add_argument("-o", "--output", help="output GeoJSON path, or - for stdout")
        p.add_argument("--config", help="TOML config file (flags override it)")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: available parallelism)")
        p.add_argument("--log-level", default=None,
                       help="debug|info|warning|error (or PEDSCALE_LOG)")
        p.add_argument("--sidecar", default=None,
                       help="sidecar TOML path (default: <output>.run.toml)")

    p = subs.add_parser("clean", help="despine, weld fillers, consolidate")
    common(p)
    p.add_argument("--from-wgs", action="store_true", default=None,
                   help="project WGS84 input to UTM first")
    p.add_argument("--infer-geoms", action="store_true", default=None)
    p.add_argument("--despine", type=float, default=None)
    p.add_argument("--consolidate-dist", type=float, action="append", default=None,
                   help="consolidation radius; repeat for multiple passes")
    p.add_argument("--merge-parallel-max-len", type=float, default=None)
    p.add_argument("--keep-largest", action=argparse.BooleanOptionalAction, default=None)

    p = subs.add_parser("decompose", help="split edges to a maximum length")
    common(p)
    p.add_argument("--max-length", type=float, default=None)

    p = subs.add_parser("to-dual", help="convert primal network to dual")
    common(p)

    p = subs.add_parser("centrality", help="windowed node/segment centralities")
    common(p)
    p.add_argument("--distances", type=lambda s: _csv_floats(s, "--distances"), default=None)
    p.add_argument("--betas", type=lambda s: _csv_floats(s, "--betas"), default=None)
    p.add_argument("--heuristic", choices=("shortest", "simplest"), default=None)
    p.add_argument("--measures", type=_csv_strs, default=None)
    p.add_argument("--segments", action="store_true", default=None,
                   help="also compute all segmentised measures")

    p = subs.add_parser("landuse", help="accessibility and mixed-use measures")
    common(p)
    p.add_argument("--data", default=None, help="GeoJSON point data path")
    p.add_argument("--category-field", default=None)
    p.add_argument("--categories", type=_csv_strs, default=None)
    p.add_argument("--distances", type=lambda s: _csv_floats(s, "--distances"), default=None)
    p.add_argument("--betas", type=lambda s: _csv_floats(s, "--betas"), default=None)
    p.add_argument("--heuristic", choices=("shortest", "simplest"), default=None)
    p.add_argument("--hill-q", type=lambda s: _csv_floats(s, "--hill-q"), default=None)
    p.add_argument("--max-assign-dist", type=float, default=None)

    p = subs.add_parser("stats", help="statistical aggregations of a numeric field")
    common(p)
    p.add_argument("--data", default=None)
    p.add_argument("--value-field", action="append", default=None)
    p.add_argument("--distances", type=lambda s: _csv_floats(s, "--distances"), default=None)
    p.add_argument("--betas", type=lambda s: _csv_floats(s, "--betas"), default=None)
    p.add_argument("--heuristic", choices=("shortest", "simplest"), default=None)
    p.add_argument("--max-assign-dist", type=float, default=None)

    p = subs.add_parser("pipeline", help="chain stages from one config document")
    common(p)
    return parser


def _setup_logging(ns) -> None:
    level_name = ns.log_level or os.environ.get("PEDSCALE_LOG", "warning")
    level = getattr(logging, str(level_name).upper(), None)
    if not isinstance(level, int):
        raise UsageError(f"unknown log level {level_name!r}")
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        _setup_logging(ns)
        resolved = resolve_config(ns)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = execute(resolved, ns.workers)
        sidecar_path = ns.sidecar
        if sidecar_path is None and resolved["output"]["path"] != "-":
            sidecar_path = resolved["output"]["path"] + ".run.toml"
        if sidecar_path:
            _write_text_atomic(sidecar_path, toml_dumps(summary.sidecar_doc(resolved)))
        print(summary.render(), file=sys.stderr)
    except (ParseError, GraphError, LayerError, CentralityError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
