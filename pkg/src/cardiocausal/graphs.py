"""Directed and partially directed graphs over named parameter nodes.

A ``Dag`` is a plain directed acyclic graph.  A ``Cpdag`` is the completed
partially directed representative of a Markov equivalence class: directed
edges are those shared by every member of the class, undirected edges are
those whose orientation the class leaves open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

Edge = tuple[str, str]


class GraphError(ValueError):
    """Malformed graph structure: self-loop, cycle, or unknown endpoint."""


def topological_sort(nodes: tuple[str, ...], edges: frozenset[Edge]) -> list[str]:
    """Kahn's algorithm; raises GraphError when the edge set has a cycle.

    Ties are broken by node order in ``nodes`` so the result is deterministic.
    """
    in_deg = {v: 0 for v in nodes}
    children: dict[str, list[str]] = {v: [] for v in nodes}
    for a, b in edges:
        children[a].append(b)
        in_deg[b] += 1
    order = []
    ready = [v for v in nodes if in_deg[v] == 0]
    while ready:
        v = ready.pop(0)
        order.append(v)
        next_ready = []
        for c in sorted(children[v], key=nodes.index):
            in_deg[c] -= 1
            if in_deg[c] == 0:
                next_ready.append(c)
        ready = sorted(set(ready) | set(next_ready), key=nodes.index)
    if len(order) != len(nodes):
        raise GraphError("edge set contains a cycle")
    return order


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph; construction validates acyclicity."""

    nodes: tuple[str, ...]
    edges: frozenset[Edge]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", frozenset(self.edges))
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise GraphError("duplicate node names")
        for a, b in self.edges:
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            if a not in node_set or b not in node_set:
                raise GraphError(f"edge ({a!r}, {b!r}) references unknown node")
        topological_sort(self.nodes, self.edges)  # raises on cycle

    def parents(self, node: str) -> frozenset[str]:
        return frozenset(a for a, b in self.edges if b == node)

    def sorted_edges(self) -> list[Edge]:
        idx = {v: i for i, v in enumerate(self.nodes)}
        return sorted(self.edges, key=lambda e: (idx[e[0]], idx[e[1]]))

    def to_dot(self, name: str = "dag") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.nodes:
            lines.append(f'  "{v}";')
        for a, b in self.sorted_edges():
            lines.append(f'  "{a}" -> "{b}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Cpdag:
    """Equivalence-class graph: directed plus undirected edges, Meek-closed."""

    nodes: tuple[str, ...]
    directed_edges: frozenset[Edge]
    undirected_edges: frozenset[frozenset[str]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "directed_edges", frozenset(self.directed_edges))
        object.__setattr__(
            self, "undirected_edges", frozenset(frozenset(e) for e in self.undirected_edges)
        )
        node_set = set(self.nodes)
        for a, b in self.directed_edges:
            if a == b or a not in node_set or b not in node_set:
                raise GraphError(f"bad directed edge ({a!r}, {b!r})")
        dir_skel = {frozenset(e) for e in self.directed_edges}
        for pair in self.undirected_edges:
            if len(pair) != 2 or not pair <= node_set:
                raise GraphError(f"bad undirected edge {set(pair)!r}")
            if pair in dir_skel:
                raise GraphError(f"edge {set(pair)!r} both directed and undirected")

    def skeleton(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(e) for e in self.directed_edges) | self.undirected_edges

    def sorted_directed(self) -> list[Edge]:
        idx = {v: i for i, v in enumerate(self.nodes)}
        return sorted(self.directed_edges, key=lambda e: (idx[e[0]], idx[e[1]]))

    def sorted_undirected(self) -> list[Edge]:
        idx = {v: i for i, v in enumerate(self.nodes)}
        pairs = [tuple(sorted(p, key=idx.__getitem__)) for p in self.undirected_edges]
        return sorted(pairs, key=lambda e: (idx[e[0]], idx[e[1]]))

    def to_dot(self, name: str = "cpdag") -> str:
        lines = [f"digraph {name} {{"]
        for v in self.nodes:
            lines.append(f'  "{v}";')
        for a, b in self.sorted_directed():
            lines.append(f'  "{a}" -> "{b}";')
        for a, b in self.sorted_undirected():
            lines.append(f'  "{a}" -> "{b}" [dir=none];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _meek_closure(
    nodes: tuple[str, ...],
    directed: set[Edge],
    undirected: set[frozenset[str]],
) -> tuple[set[Edge], set[frozenset[str]]]:
    """Apply Meek orientation rules R1-R4 until a fixpoint is reached."""
    adj: dict[str, set[str]] = {v: set() for v in nodes}
    for a, b in directed:
        adj[a].add(b)
        adj[b].add(a)
    for pair in undirected:
        a, b = tuple(pair)
        adj[a].add(b)
        adj[b].add(a)

    def orient(a: str, b: str) -> None:
        undirected.discard(frozenset((a, b)))
        directed.add((a, b))

    changed = True
    while changed:
        changed = False
        for pair in sorted(undirected, key=lambda p: tuple(sorted(p))):
            if pair not in undirected:
                continue
            x, y = tuple(sorted(pair))
            for b, c in ((x, y), (y, x)):
                # R1: a -> b, b - c, a and c not adjacent  =>  b -> c
                if any((a, b) in directed and c not in adj[a] for a in nodes):
                    orient(b, c)
                    changed = True
                    break
                # R2: b -> a -> c and b - c  =>  b -> c
                if any((b, a) in directed and (a, c) in directed for a in nodes):
                    orient(b, c)
                    changed = True
                    break
                # R3: b - a1, b - a2, a1 -> c, a2 -> c, a1 and a2 not adjacent
                into_c = [a for a in nodes if (a, c) in directed and frozenset((b, a)) in undirected]
                if any(a2 not in adj[a1] for a1, a2 in combinations(into_c, 2)):
                    orient(b, c)
                    changed = True
                    break
                # R4: b - d (adjacent), d -> a, a -> c, d and c not adjacent
                fired = False
                for a in nodes:
                    if (a, c) not in directed:
                        continue
                    for d in adj[b]:
                        if (d, a) in directed and c not in adj[d]:
                            orient(b, c)
                            changed = True
                            fired = True
                            break
                    if fired:
                        break
                if fired:
                    break
    return directed, undirected


def cpdag_of(dag: Dag) -> Cpdag:
    """Equivalence-class completion: skeleton, v-structures, Meek closure.

    Idempotent in the sense that the result is a Meek fixpoint.
    """
    parents = {v: dag.parents(v) for v in dag.nodes}
    adj: dict[str, set[str]] = {v: set() for v in dag.nodes}
    for a, b in dag.edges:
        adj[a].add(b)
        adj[b].add(a)

    directed: set[Edge] = set()
    for v in dag.nodes:
        for p, q in combinations(sorted(parents[v]), 2):
            if q not in adj[p]:  # collider p -> v <- q with p, q non-adjacent
                directed.add((p, v))
                directed.add((q, v))
    undirected = {frozenset((a, b)) for a, b in dag.edges if (a, b) not in directed}
    directed, undirected = _meek_closure(dag.nodes, directed, undirected)
    return Cpdag(dag.nodes, frozenset(directed), frozenset(undirected))


def consistent_extension(
    nodes: tuple[str, ...],
    directed: frozenset[Edge],
    undirected: frozenset[frozenset[str]],
) -> Dag | None:
    """Orient a PDAG into a DAG keeping all directed edges and v-structures.

    Dor-Tarsi sink-elimination; returns None when no extension exists.
    """
    dir_edges = set(directed)
    und_edges = set(undirected)
    remaining = set(nodes)
    result: set[Edge] = set(directed)

    adj: dict[str, set[str]] = {v: set() for v in nodes}
    for a, b in dir_edges:
        adj[a].add(b)
        adj[b].add(a)
    for pair in und_edges:
        a, b = tuple(pair)
        adj[a].add(b)
        adj[b].add(a)

    while remaining:
        sink = None
        for x in sorted(remaining):
            if any(a == x and b in remaining for a, b in dir_edges):
                continue  # has outgoing directed edge
            und_nb = [tuple(p - {x})[0] for p in und_edges if x in p]
            all_nb = [v for v in adj[x] if v in remaining]
            if all(all(u == w or w in adj[u] for w in all_nb) for u in und_nb):
                sink = x
                break
        if sink is None:
            return None
        for pair in [p for p in und_edges if sink in p]:
            other = tuple(pair - {sink})[0]
            result.add((other, sink))
            und_edges.discard(pair)
        dir_edges = {(a, b) for a, b in dir_edges if a != sink and b != sink}
        for v in adj[sink]:
            adj[v].discard(sink)
        remaining.discard(sink)
    return Dag(nodes, frozenset(result))
