"""End-to-end orchestration: ingestion, features, statistics, structure
methods, consensus voting, mediation, and report emission.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import AssociationError, correlation_matrix
from .cardio_signals import SignalError, detect_r_peaks, detrend_ecg, rr_intervals
from .graphs import Cpdag, Dag
from .mediation import MediationError, MediationFit, mediation_fit
from .param_features import FeatureError, PairedTestResult, paired_compare, param_vector
from .record_io import (
    DERIVED_SOURCES,
    PARAMETER_NAMES,
    FormatError,
    ParameterTable,
    Position,
    load_parameter_table,
    load_signal_record,
    save_parameter_table,
)
from .resp_signals import delimit_breaths, remove_cardiac_component
from .structure_search import (
    SearchConfig,
    SearchError,
    cam_learn,
    fges,
    gc_graph,
    hill_climb,
    tabu_search,
)

METHOD_NAMES = ("gc", "hc", "tabu", "fges", "cam")

# Pairs whose relationship is deterministic by construction and therefore
# never reported as a structure edge.
IGNORED_PAIRS: frozenset[frozenset[str]] = frozenset(
    frozenset((derived, source))
    for derived, sources in DERIVED_SOURCES.items()
    for source in sources
)

STRUCTURE_NAMES = tuple(n for n in PARAMETER_NAMES if n not in DERIVED_SOURCES)


class ConfigError(ValueError):
    """Invalid run configuration (exit code 3 at the CLI)."""


class PipelineError(RuntimeError):
    """Fatal cohort-level analysis failure (exit code 2 at the CLI)."""


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    input_kind: str
    positions: tuple[str, ...] = ("supine", "standing")
    methods: tuple[str, ...] = METHOD_NAMES
    seed: int = 0
    out_dir: str | None = None
    mask_derived: str = "exclude"
    mediation_paths: tuple[tuple[str, str, str], ...] = ()

    def __post_init__(self):
        if self.input_kind not in ("signals", "params"):
            raise ConfigError(f"unknown input kind {self.input_kind!r}")
        if not self.positions:
            raise ConfigError("at least one position required")
        for pos in self.positions:
            if pos not in ("supine", "standing"):
                raise ConfigError(f"unknown position {pos!r}")
        if len(set(self.positions)) != len(self.positions):
            raise ConfigError("duplicate position")
        if not self.methods:
            raise ConfigError("at least one method required")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ConfigError(f"unknown method {m!r}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate method")
        if self.mask_derived not in ("exclude", "post-hoc"):
            raise ConfigError(f"unknown mask-derived mode {self.mask_derived!r}")
        for path in self.mediation_paths:
            if len(path) != 3 or len(set(path)) != 3:
                raise ConfigError(f"mediation path must name 3 distinct parameters: {path}")
            for name in path:
                if name not in PARAMETER_NAMES:
                    raise ConfigError(f"unknown parameter {name!r} in mediation path")


@dataclass(frozen=True)
class DirectedEdgeSet:
    """Pairwise directed graph; unlike a Dag, cycles are allowed."""

    nodes: tuple[str, ...]
    edges: frozenset[tuple[str, str]]

    def sorted_edges(self) -> list[tuple[str, str]]:
        idx = {v: i for i, v in enumerate(self.nodes)}
        return sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]]))

    def to_dot(self, name: str = "edges") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.nodes:
            lines.append(f'  "{v}";')
        for a, b in self.sorted_edges():
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EdgeVotes:
    supporting: frozenset[str]
    opposing: frozenset[str]
    undirected: frozenset[str]

    def counts(self) -> tuple[int, int, int]:
        return (len(self.supporting), len(self.opposing), len(self.undirected))


@dataclass(frozen=True)
class ConsensusGraph:
    nodes: tuple[str, ...]
    edge_votes: dict[tuple[str, str], EdgeVotes]
    total_methods: int
    methods: tuple[str, ...] = field(default=())

    def votes_for(self, a: str, b: str) -> tuple[int, int, int]:
        votes = self.edge_votes.get((a, b))
        return votes.counts() if votes is not None else (0, 0, 0)

    def skeleton_pairs(self, min_methods: int | None = None) -> list[tuple[str, str]]:
        """Unordered pairs whose total vote count reaches the threshold
        (default: a strict majority of the methods that ran)."""
        if min_methods is None:
            min_methods = self.total_methods // 2 + 1
        idx = {v: i for i, v in enumerate(self.nodes)}
        pairs = set()
        for (a, b), votes in self.edge_votes.items():
            if sum(votes.counts()) >= min_methods:
                pairs.add(tuple(sorted((a, b), key=idx.__getitem__)))
        return sorted(pairs, key=lambda e: (idx[e[0]], idx[e[1]]))

    def to_dot(self, name: str = "consensus") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.nodes:
            lines.append(f'  "{v}";')
        for a, b in self.skeleton_pairs():
            n_ab = len(self.edge_votes.get((a, b), EdgeVotes(frozenset(), frozenset(), frozenset())).supporting)
            n_ba = len(self.edge_votes.get((b, a), EdgeVotes(frozenset(), frozenset(), frozenset())).supporting)
            if n_ab > n_ba:
                lines.append(f'  "{a}" -> "{b}";')
            elif n_ba > n_ab:
                lines.append(f'  "{b}" -> "{a}";')
            else:
                lines.append(f'  "{a}" -> "{b}" [dir=none];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _graph_edge_sets(graph) -> tuple[set[tuple[str, str]], set[tuple[str, str]]]:
    """Normalize a method output to (directed edges, undirected sorted pairs)."""
    if isinstance(graph, Dag):
        return set(graph.edges), set()
    if isinstance(graph, Cpdag):
        return set(graph.directed_edges), {tuple(sorted(p)) for p in graph.undirected_edges}
    if isinstance(graph, DirectedEdgeSet):
        return set(graph.edges), set()
    raise PipelineError(f"unsupported graph type {type(graph).__name__}")


def consensus(graphs) -> ConsensusGraph:
    """Per-ordered-pair vote tally over method outputs.

    Each method contributes one vote per skeleton edge: supporting the pair's
    direction, opposing it (asserting the reverse), or undirected.
    """
    graphs = list(graphs)
    if not graphs:
        raise PipelineError("consensus requires at least one graph")
    nodes = tuple(graphs[0][1].nodes)
    support: dict[tuple[str, str], set[str]] = defaultdict(set)
    undirected: dict[tuple[str, str], set[str]] = defaultdict(set)
    for method, graph in graphs:
        if tuple(graph.nodes) != nodes:
            raise PipelineError("consensus inputs must share one node set")
        directed, und = _graph_edge_sets(graph)
        for a, b in directed:
            support[(a, b)].add(method)
        for a, b in und:
            undirected[(a, b)].add(method)
            undirected[(b, a)].add(method)

    keys = set(support) | set(undirected)
    keys |= {(b, a) for a, b in keys}
    edge_votes = {}
    for a, b in sorted(keys):
        edge_votes[(a, b)] = EdgeVotes(
            supporting=frozenset(support.get((a, b), ())),
            opposing=frozenset(support.get((b, a), ())),
            undirected=frozenset(undirected.get((a, b), ())),
        )
    return ConsensusGraph(
        nodes=nodes,
        edge_votes=edge_votes,
        total_methods=len(graphs),
        methods=tuple(m for m, _ in graphs),
    )


def _mask_ignored(graph):
    """Drop edges connecting a derived parameter with any of its sources."""

    def keep(a, b):
        return frozenset((a, b)) not in IGNORED_PAIRS

    if isinstance(graph, Dag):
        return Dag(graph.nodes, frozenset(e for e in graph.edges if keep(*e)))
    if isinstance(graph, Cpdag):
        return Cpdag(
            graph.nodes,
            frozenset(e for e in graph.directed_edges if keep(*e)),
            frozenset(p for p in graph.undirected_edges if keep(*tuple(p))),
        )
    if isinstance(graph, DirectedEdgeSet):
        return DirectedEdgeSet(graph.nodes, frozenset(e for e in graph.edges if keep(*e)))
    raise PipelineError(f"unsupported graph type {type(graph).__name__}")


@dataclass(frozen=True)
class CausalReport:
    config: RunConfig
    table: ParameterTable
    paired_tests: tuple[PairedTestResult, ...]
    correlations: dict[str, np.ndarray]
    method_graphs: dict[str, dict[str, object]]
    consensus_graphs: dict[str, ConsensusGraph]
    mediation_results: tuple[tuple[str, MediationFit], ...]
    warnings: tuple[str, ...]

    def to_json(self) -> str:
        def graph_payload(graph):
            directed, und = _graph_edge_sets(graph)
            return {
                "directed": sorted(list(e) for e in directed),
                "undirected": sorted(list(e) for e in und),
            }

        payload = {
            "config": {
                "input_path": self.config.input_path,
                "input_kind": self.config.input_kind,
                "positions": list(self.config.positions),
                "methods": list(self.config.methods),
                "seed": self.config.seed,
                "mask_derived": self.config.mask_derived,
                "mediation_paths": [list(p) for p in self.config.mediation_paths],
            },
            "warnings": list(self.warnings),
            "paired_tests": [
                {
                    "parameter": t.parameter,
                    "test_used": t.test_used.value,
                    "statistic": t.statistic,
                    "p_value": t.p_value,
                    "normality_p": t.normality_p,
                }
                for t in self.paired_tests
            ],
            "correlations": {
                pos: {
                    "names": list(PARAMETER_NAMES),
                    "matrix": [
                        [None if math.isnan(v) else v for v in row]
                        for row in matrix.tolist()
                    ],
                }
                for pos, matrix in self.correlations.items()
            },
            "methods": {
                pos: {name: graph_payload(g) for name, g in graphs.items()}
                for pos, graphs in self.method_graphs.items()
            },
            "consensus": {
                pos: {
                    "nodes": list(cg.nodes),
                    "total_methods": cg.total_methods,
                    "methods": list(cg.methods),
                    "votes": [
                        {
                            "from": a,
                            "to": b,
                            "supporting": sorted(v.supporting),
                            "opposing": sorted(v.opposing),
                            "undirected": sorted(v.undirected),
                        }
                        for (a, b), v in sorted(cg.edge_votes.items())
                    ],
                }
                for pos, cg in self.consensus_graphs.items()
            },
            "mediation": [
                {
                    "position": pos,
                    "path": list(fit.path),
                    "a_hat": fit.a_hat,
                    "se_a": fit.se_a,
                    "b_hat": fit.b_hat,
                    "se_b": fit.se_b,
                    "direct_effect": fit.direct_effect,
                    "indirect_effect": fit.indirect_effect,
                    "sobel_z": fit.sobel_z,
                    "sobel_p": fit.sobel_p,
                }
                for pos, fit in self.mediation_results
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _row_from_signal_file(path: Path):
    record = load_signal_record(path)
    rate = record.sample_rate_hz
    ecg = detrend_ecg(record.ecg, rate)
    beats = detect_r_peaks(ecg, rate)
    rr = rr_intervals(beats)
    ip_clean = remove_cardiac_component(record.ip, ecg, rate)
    breaths = delimit_breaths(ip_clean, rate)
    return param_vector(rr, breaths).to_row(record.subject_id, record.position)


def _table_from_signals(input_path: Path, warnings_list: list[str]) -> ParameterTable:
    if not input_path.is_dir():
        raise PipelineError(f"signal input must be a directory: {input_path}")
    rows = []
    for path in sorted(input_path.glob("*.csv")):
        try:
            rows.append(_row_from_signal_file(path))
        except (FormatError, SignalError, FeatureError) as exc:
            warnings_list.append(f"{path.name}: {exc}")
    try:
        return ParameterTable(tuple(rows))
    except FormatError as exc:
        raise PipelineError(str(exc)) from None


def _write_outputs(report: CausalReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json(), encoding="utf-8")
    save_parameter_table(report.table, out_dir / "params.csv")
    for pos, matrix in report.correlations.items():
        lines = ["," + ",".join(PARAMETER_NAMES)]
        for name, row in zip(PARAMETER_NAMES, matrix):
            cells = ["" if math.isnan(v) else repr(float(v)) for v in row]
            lines.append(name + "," + ",".join(cells))
        (out_dir / f"correlations_{pos}.csv").write_text("\n".join(lines) + "\n", "utf-8")
    for pos, graphs in report.method_graphs.items():
        for method, graph in graphs.items():
            dot = graph.to_dot(f"method_{method}_{pos}")
            (out_dir / f"method_{method}_{pos}.dot").write_text(dot, encoding="utf-8")
    for pos, cg in report.consensus_graphs.items():
        (out_dir / f"consensus_{pos}.dot").write_text(
            cg.to_dot(f"consensus_{pos}"), encoding="utf-8"
        )


def run_pipeline(config: RunConfig) -> CausalReport:
    """Run the full analysis described by ``config`` and return the report.

    Per-subject ingestion failures become warnings; cohort-level failures
    (too few subjects, malformed tables) raise PipelineError.
    """
    warnings_list: list[str] = []
    positions = [Position(p) for p in config.positions]

    if config.input_kind == "params":
        try:
            table = load_parameter_table(config.input_path)
        except FormatError as exc:
            raise PipelineError(str(exc)) from None
    else:
        table = _table_from_signals(Path(config.input_path), warnings_list)

    for pos in positions:
        if len(table.subjects(pos)) < 4:
            raise PipelineError(f"fewer than 4 subjects for position {pos.value!r}")

    paired: list[PairedTestResult] = []
    if {Position.SUPINE, Position.STANDING} <= set(positions):
        n_common = len(
            set(table.subjects(Position.SUPINE)) & set(table.subjects(Position.STANDING))
        )
        if n_common >= 8:
            for name in PARAMETER_NAMES:
                supine, standing = table.paired_columns(name)
                try:
                    paired.append(paired_compare(supine, standing, name))
                except FeatureError as exc:
                    warnings_list.append(f"paired test for {name}: {exc}")
        else:
            warnings_list.append("fewer than 8 common subjects; paired tests skipped")

    correlations: dict[str, np.ndarray] = {}
    method_graphs: dict[str, dict[str, object]] = {}
    consensus_graphs: dict[str, ConsensusGraph] = {}
    structure_names = STRUCTURE_NAMES if config.mask_derived == "exclude" else PARAMETER_NAMES
    search_config = SearchConfig(seed=config.seed)

    for pos in positions:
        try:
            correlations[pos.value] = correlation_matrix(table, pos)
        except AssociationError as exc:
            raise PipelineError(f"correlation matrix for {pos.value}: {exc}") from None

        design = table.matrix(pos, structure_names)
        graphs: dict[str, object] = {}
        try:
            for method in config.methods:
                if method == "gc":
                    graph = DirectedEdgeSet(
                        structure_names,
                        frozenset(gc_graph(table, pos, structure_names)),
                    )
                elif method == "hc":
                    graph = hill_climb(design, search_config, names=structure_names)
                elif method == "tabu":
                    graph = tabu_search(design, search_config, names=structure_names)
                elif method == "fges":
                    graph = fges(design, search_config, names=structure_names)
                else:
                    graph = cam_learn(design, search_config, names=structure_names)
                if config.mask_derived == "post-hoc":
                    graph = _mask_ignored(graph)
                graphs[method] = graph
        except (SearchError, AssociationError) as exc:
            raise PipelineError(f"{method} search for {pos.value}: {exc}") from None
        method_graphs[pos.value] = graphs
        consensus_graphs[pos.value] = consensus(list(graphs.items()))

    mediation_results: list[tuple[str, MediationFit]] = []
    for pos in positions:
        for x_name, m_name, y_name in config.mediation_paths:
            try:
                fit = mediation_fit(
                    table.column(x_name, pos),
                    table.column(m_name, pos),
                    table.column(y_name, pos),
                    path=(x_name, m_name, y_name),
                )
            except MediationError as exc:
                warnings_list.append(
                    f"mediation {x_name}->{m_name}->{y_name} ({pos.value}): {exc}"
                )
                continue
            mediation_results.append((pos.value, fit))

    report = CausalReport(
        config=config,
        table=table,
        paired_tests=tuple(paired),
        correlations=correlations,
        method_graphs=method_graphs,
        consensus_graphs=consensus_graphs,
        mediation_results=tuple(mediation_results),
        warnings=tuple(warnings_list),
    )
    if config.out_dir is not None:
        _write_outputs(report, Path(config.out_dir))
    return report
