"""Score-based causal structure discovery over a parameter table.

All searches use the decomposable Gaussian BIC computed from the scatter
matrix, so Markov-equivalent graphs score equal up to floating rounding and
single-edge edits are evaluated incrementally.  Every search is deterministic:
candidate moves are ranked lexicographically by (operator, from, to) and the
first strict maximum wins.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy import stats
from scipy.interpolate import BSpline

from .association import AssociationError, Direction, generalized_corr_pair
from .graphs import Cpdag, Dag, consistent_extension, cpdag_of, topological_sort
from .record_io import PARAMETER_NAMES, ParameterTable, Position

__all__ = [
    "SearchConfig",
    "SearchError",
    "bic_score",
    "hill_climb",
    "tabu_search",
    "fges",
    "enumerate_best_dag",
    "EnumerationResult",
    "cam_learn",
    "gc_graph",
    "cpdag_of",
]

_log = logging.getLogger(__name__)

_EPS_GAIN = 1e-9


def _beats(delta: float, incumbent: float) -> bool:
    """Strictly better, treating near-equal deltas as ties.

    Mathematically equal move gains differ by floating rounding that depends
    on column scaling; keeping the lexicographically first move among ties
    makes search results invariant to affine rescaling.
    """
    if math.isclose(delta, incumbent, rel_tol=1e-9, abs_tol=1e-9):
        return False
    return delta > incumbent


class SearchError(ValueError):
    """Invalid search input (shape, degeneracy, or size limits)."""


@dataclass(frozen=True)
class SearchConfig:
    score: str = "gaussian_bic"
    max_parents: int = 4
    tabu_length: int = 10
    tabu_max_stalls: int = 15
    random_restarts: int = 0
    cam_prune_alpha: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.score != "gaussian_bic":
            raise SearchError(f"unknown score {self.score!r}")
        for field in ("max_parents", "tabu_length", "tabu_max_stalls"):
            if getattr(self, field) < 1:
                raise SearchError(f"{field} must be positive")
        if self.random_restarts < 0:
            raise SearchError("random_restarts must be nonnegative")


def _node_names(names, p: int) -> tuple[str, ...]:
    if names is None:
        return tuple(f"x{i}" for i in range(p))
    names = tuple(names)
    if len(names) != p:
        raise SearchError("names must match the number of data columns")
    return names


class _BicScorer:
    """Decomposable Gaussian BIC from the centered scatter matrix."""

    def __init__(self, data):
        x = np.asarray(data, dtype=float)
        if x.ndim != 2:
            raise SearchError("data must be a 2-d matrix")
        n, p = x.shape
        if n <= p:
            raise SearchError("need more rows than columns")
        if not np.all(np.isfinite(x)):
            raise SearchError("non-finite data")
        centered = x - x.mean(axis=0)
        self.scatter = centered.T @ centered
        self.n = n
        self.p = p
        self._cache: dict[tuple[int, frozenset[int]], float] = {}

    def local(self, v: int, parents: frozenset[int]) -> float:
        key = (v, parents)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        n = self.n
        svv = float(self.scatter[v, v])
        if parents:
            idx = sorted(parents)
            spp = self.scatter[np.ix_(idx, idx)]
            spv = self.scatter[idx, v]
            try:
                factor = sla.cho_factor(spp)
                beta = sla.cho_solve(factor, spv)
            except sla.LinAlgError:
                self._cache[key] = -math.inf
                return -math.inf
            rss = svv - float(spv @ beta)
        else:
            rss = svv
        sigma2 = rss / n
        floor = 1e-12 * (svv / n if svv > 0 else 1.0)
        sigma2 = max(sigma2, floor)
        k = len(parents) + 2  # slopes + intercept + variance
        score = -0.5 * n * (math.log(2.0 * math.pi * sigma2) + 1.0) - 0.5 * k * math.log(n)
        self._cache[key] = score
        return score

    def total(self, parents: dict[int, set[int]]) -> float:
        return sum(self.local(v, frozenset(parents[v])) for v in range(self.p))


def bic_score(data, dag: Dag) -> float:
    """Gaussian BIC of a DAG; column i of ``data`` is ``dag.nodes[i]``."""
    scorer = _BicScorer(data)
    if len(dag.nodes) != scorer.p:
        raise SearchError("dag node count must match data columns")
    index = {name: i for i, name in enumerate(dag.nodes)}
    return sum(
        scorer.local(index[v], frozenset(index[a] for a in dag.parents(v)))
        for v in dag.nodes
    )


# --- greedy searches over {add, delete, reverse} -------------------------


def _has_path(children: dict[int, set[int]], src: int, dst: int) -> bool:
    stack = [src]
    seen = {src}
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        for c in children[v]:
            if c not in seen:
                seen.add(c)
                stack.append(c)
    return False


def _legal_moves(children, parents, p: int, max_parents: int) -> list[tuple[str, int, int]]:
    adds, dels, revs = [], [], []
    for u in range(p):
        for v in range(p):
            if u == v:
                continue
            if v in children[u]:
                dels.append(("delete", u, v))
                if len(parents[u]) < max_parents:
                    children[u].discard(v)
                    cycle = _has_path(children, u, v)
                    children[u].add(v)
                    if not cycle:
                        revs.append(("reverse", u, v))
            elif u not in children[v]:
                if len(parents[v]) < max_parents and not _has_path(children, v, u):
                    adds.append(("add", u, v))
    return adds + dels + revs


def _move_delta(scorer: _BicScorer, parents, move) -> float:
    op, u, v = move
    pv = frozenset(parents[v])
    if op == "add":
        return scorer.local(v, pv | {u}) - scorer.local(v, pv)
    if op == "delete":
        return scorer.local(v, pv - {u}) - scorer.local(v, pv)
    pu = frozenset(parents[u])
    return (
        scorer.local(v, pv - {u})
        + scorer.local(u, pu | {v})
        - scorer.local(v, pv)
        - scorer.local(u, pu)
    )


def _apply_move(children, parents, move) -> None:
    op, u, v = move
    if op == "add":
        children[u].add(v)
        parents[v].add(u)
    elif op == "delete":
        children[u].discard(v)
        parents[v].discard(u)
    else:
        children[u].discard(v)
        parents[v].discard(u)
        children[v].add(u)
        parents[u].add(v)


def _inverse_move(move) -> tuple[str, int, int]:
    op, u, v = move
    if op == "add":
        return ("delete", u, v)
    if op == "delete":
        return ("add", u, v)
    return ("reverse", v, u)


def _state_from_edges(p: int, edges) -> tuple[dict[int, set[int]], dict[int, set[int]]]:
    children = {v: set() for v in range(p)}
    parents = {v: set() for v in range(p)}
    for u, v in edges:
        children[u].add(v)
        parents[v].add(u)
    return children, parents


def _edges_of(children) -> frozenset[tuple[int, int]]:
    return frozenset((u, v) for u, cs in children.items() for v in cs)


def _start_edges(start: Dag | None, names: tuple[str, ...]) -> frozenset[tuple[int, int]]:
    if start is None:
        return frozenset()
    index = {name: i for i, name in enumerate(names)}
    try:
        return frozenset((index[a], index[b]) for a, b in start.edges)
    except KeyError as exc:
        raise SearchError(f"start graph node {exc.args[0]!r} not in data") from None


def _greedy_climb(scorer: _BicScorer, config: SearchConfig, edges0) -> tuple[frozenset, float]:
    children, parents = _state_from_edges(scorer.p, edges0)
    score = scorer.total(parents)
    while True:
        best_move, best_delta = None, _EPS_GAIN
        for move in _legal_moves(children, parents, scorer.p, config.max_parents):
            delta = _move_delta(scorer, parents, move)
            if _beats(delta, best_delta):
                best_move, best_delta = move, delta
        if best_move is None:
            return _edges_of(children), score
        _apply_move(children, parents, best_move)
        score += best_delta


def _random_edges(rng, p: int, max_parents: int) -> frozenset[tuple[int, int]]:
    perm = rng.permutation(p)
    edges = set()
    indegree = {v: 0 for v in range(p)}
    for i in range(p):
        for j in range(i + 1, p):
            u, v = int(perm[i]), int(perm[j])
            if indegree[v] < max_parents and rng.random() < 0.5:
                edges.add((u, v))
                indegree[v] += 1
    return frozenset(edges)


def hill_climb(data, config: SearchConfig | None = None, *, names=None, start: Dag | None = None) -> Dag:
    """Greedy best-improvement search over {add, delete, reverse}."""
    config = config or SearchConfig()
    scorer = _BicScorer(data)
    names = _node_names(names, scorer.p)
    best_edges, best_score = _greedy_climb(scorer, config, _start_edges(start, names))
    rng = np.random.default_rng(config.seed)
    for _ in range(config.random_restarts):
        edges, score = _greedy_climb(scorer, config, _random_edges(rng, scorer.p, config.max_parents))
        if score > best_score + _EPS_GAIN:
            best_edges, best_score = edges, score
    return Dag(names, frozenset((names[u], names[v]) for u, v in best_edges))


def tabu_search(data, config: SearchConfig | None = None, *, names=None, start: Dag | None = None) -> Dag:
    """Hill climbing that escapes local optima via a tabu list.

    While improving moves exist the trajectory matches plain hill climbing
    (tabu moves are admitted when they beat the best score seen, so the
    ascent is never blocked).  When stuck, the best non-improving non-tabu
    move is taken, for at most ``tabu_max_stalls`` stalls without a new
    global best.  The best structure encountered is returned, so the result
    never scores below hill_climb on the same data and configuration.
    """
    config = config or SearchConfig()
    scorer = _BicScorer(data)
    names = _node_names(names, scorer.p)
    children, parents = _state_from_edges(scorer.p, _start_edges(start, names))
    score = scorer.total(parents)
    best_edges, best_score = _edges_of(children), score
    tabu: deque = deque(maxlen=config.tabu_length)
    stalls = 0

    while True:
        moves = _legal_moves(children, parents, scorer.p, config.max_parents)
        chosen, chosen_delta = None, _EPS_GAIN
        for move in moves:
            delta = _move_delta(scorer, parents, move)
            if not _beats(delta, chosen_delta):
                continue
            if move in tabu and score + delta <= best_score + _EPS_GAIN:
                continue
            chosen, chosen_delta = move, delta
        if chosen is None:
            if stalls >= config.tabu_max_stalls:
                break
            worst = -math.inf
            for move in moves:
                if move in tabu:
                    continue
                delta = _move_delta(scorer, parents, move)
                if chosen is None or _beats(delta, worst):
                    chosen, worst = move, delta
            if chosen is None:
                break
            chosen_delta = worst
            stalls += 1
        _apply_move(children, parents, chosen)
        score += chosen_delta
        tabu.append(_inverse_move(chosen))
        if score > best_score + _EPS_GAIN:
            best_edges, best_score = _edges_of(children), score
            stalls = 0

    return Dag(names, frozenset((names[u], names[v]) for u, v in best_edges))


# --- greedy equivalence search -------------------------------------------


def _und_neighbors(undirected, v) -> set:
    return {next(iter(pair - {v})) for pair in undirected if v in pair}


def _adjacency(directed, undirected, p: int) -> dict[int, set[int]]:
    adj = {v: set() for v in range(p)}
    for a, b in directed:
        adj[a].add(b)
        adj[b].add(a)
    for pair in undirected:
        a, b = tuple(pair)
        adj[a].add(b)
        adj[b].add(a)
    return adj


def _is_clique(nodes, adj) -> bool:
    return all(b in adj[a] for a, b in itertools.combinations(sorted(nodes), 2))


def _semi_directed_reaches(y: int, x: int, blocked, directed, undirected, p: int) -> bool:
    """True when a semi-directed path y -> ... -> x avoids ``blocked``."""
    step = {v: set() for v in range(p)}
    for a, b in directed:
        step[a].add(b)
    for pair in undirected:
        a, b = tuple(pair)
        step[a].add(b)
        step[b].add(a)
    stack = [y]
    seen = {y}
    while stack:
        v = stack.pop()
        for w in step[v]:
            if w in blocked or w in seen:
                continue
            if w == x:
                return True
            seen.add(w)
            stack.append(w)
    return False


def _pattern_rebuild(p: int, directed, undirected):
    nodes = tuple(range(p))
    dag = consistent_extension(
        nodes, frozenset(directed), frozenset(frozenset(e) for e in undirected)
    )
    if dag is None:
        return None
    cp = cpdag_of(dag)
    return set(cp.directed_edges), set(cp.undirected_edges)


def fges(data, config: SearchConfig | None = None, *, names=None) -> Cpdag:
    """Greedy equivalence search: Insert phase, then Delete phase.

    Operators follow the standard characterization: Insert(x, y, T) requires
    NA(y, x) | T to form a clique and to block every semi-directed path from
    y to x; Delete(x, y, H) requires NA(y, x) \\ H to form a clique.  After
    each operator the pattern is rebuilt (consistent extension, v-structures,
    orientation-rule closure).
    """
    config = config or SearchConfig()
    scorer = _BicScorer(data)
    p = scorer.p
    names = _node_names(names, p)
    directed: set[tuple[int, int]] = set()
    undirected: set[frozenset] = set()

    def pa(y):
        return {a for a, b in directed if b == y}

    def forward_candidates():
        adj = _adjacency(directed, undirected, p)
        out = []
        order = 0
        for y in range(p):
            nb_y = _und_neighbors(undirected, y)
            for x in range(p):
                if x == y or x in adj[y]:
                    continue
                na = {v for v in nb_y if v in adj[x]}
                t0 = sorted(nb_y - adj[x] - {x})
                for size in range(len(t0) + 1):
                    for t in itertools.combinations(t0, size):
                        block = na | set(t)
                        base = frozenset(block | pa(y))
                        new = base | {x}
                        if len(new) > config.max_parents:
                            continue
                        if not _is_clique(block, adj):
                            continue
                        if _semi_directed_reaches(y, x, block, directed, undirected, p):
                            continue
                        delta = scorer.local(y, frozenset(new)) - scorer.local(y, base)
                        if delta > _EPS_GAIN:
                            out.append((delta, order, x, y, t))
                        order += 1
        return out

    def backward_candidates():
        adj = _adjacency(directed, undirected, p)
        out = []
        order = 0
        for y in range(p):
            nb_y = _und_neighbors(undirected, y)
            for x in range(p):
                if x == y:
                    continue
                if (x, y) not in directed and frozenset((x, y)) not in undirected:
                    continue
                na = {v for v in nb_y if v in adj[x]}
                for size in range(len(na) + 1):
                    for h in itertools.combinations(sorted(na), size):
                        rest = na - set(h)
                        if not _is_clique(rest, adj):
                            continue
                        base = frozenset((rest | pa(y)) - {x})
                        delta = scorer.local(y, base) - scorer.local(y, frozenset(base | {x}))
                        if delta > _EPS_GAIN:
                            out.append((delta, order, x, y, h))
                        order += 1
        return out

    def run_phase(candidate_fn, apply_fn):
        nonlocal directed, undirected
        while True:
            candidates = sorted(candidate_fn(), key=lambda c: (-c[0], c[1]))
            applied = False
            for _, _, x, y, extra in candidates:
                new_dir = set(directed)
                new_und = set(undirected)
                apply_fn(new_dir, new_und, x, y, extra)
                rebuilt = _pattern_rebuild(p, new_dir, new_und)
                if rebuilt is None:
                    continue
                directed, undirected = rebuilt
                applied = True
                break
            if not applied:
                return

    def apply_insert(new_dir, new_und, x, y, t):
        new_dir.add((x, y))
        for v in t:
            new_und.discard(frozenset((v, y)))
            new_dir.add((v, y))

    def apply_delete(new_dir, new_und, x, y, h):
        new_dir.discard((x, y))
        new_und.discard(frozenset((x, y)))
        for v in h:
            if frozenset((y, v)) in new_und:
                new_und.discard(frozenset((y, v)))
                new_dir.add((y, v))
            if frozenset((x, v)) in new_und:
                new_und.discard(frozenset((x, v)))
                new_dir.add((x, v))

    run_phase(forward_candidates, apply_insert)
    run_phase(backward_candidates, apply_delete)

    return Cpdag(
        names,
        frozenset((names[a], names[b]) for a, b in directed),
        frozenset(frozenset(names[v] for v in pair) for pair in undirected),
    )


# --- exhaustive small-graph oracle ----------------------------------------


@dataclass(frozen=True)
class EnumerationResult:
    best: Dag
    best_score: float
    best_cpdag: Cpdag
    n_dags: int


def enumerate_best_dag(data, *, names=None) -> EnumerationResult:
    """Score every DAG on up to 5 nodes; ties break on sorted edge sets."""
    scorer = _BicScorer(data)
    p = scorer.p
    if p > 5:
        raise SearchError("exhaustive enumeration is limited to 5 nodes")
    names = _node_names(names, p)

    seen: set[frozenset] = set()
    best_edges: frozenset | None = None
    best_key: tuple | None = None
    best_score = -math.inf
    for perm in itertools.permutations(range(p)):
        pairs = [(perm[i], perm[j]) for i in range(p) for j in range(i + 1, p)]
        m = len(pairs)
        for mask in range(1 << m):
            edges = frozenset(pairs[k] for k in range(m) if mask >> k & 1)
            if edges in seen:
                continue
            seen.add(edges)
            parent_sets = {v: set() for v in range(p)}
            for u, v in edges:
                parent_sets[v].add(u)
            score = scorer.total(parent_sets)
            key = tuple(sorted(edges))
            if score > best_score or (score == best_score and key < best_key):
                best_edges, best_key, best_score = edges, key, score

    best = Dag(names, frozenset((names[u], names[v]) for u, v in best_edges))
    return EnumerationResult(
        best=best, best_score=best_score, best_cpdag=cpdag_of(best), n_dags=len(seen)
    )


# --- causal additive model -------------------------------------------------

_N_BASIS = 10
_LAMBDA_GRID = np.logspace(-6.0, 6.0, 25)


class _SplineTerm:
    """Centered cubic B-spline basis with an exact curvature penalty."""

    def __init__(self, x: np.ndarray):
        lo, hi = float(np.min(x)), float(np.max(x))
        if hi - lo <= 0:
            raise SearchError("degenerate column for smoother")
        interior = np.unique(
            np.quantile(x, np.linspace(0.0, 1.0, _N_BASIS - 2)[1:-1])
        )
        interior = interior[(interior > lo) & (interior < hi)]
        if interior.size < _N_BASIS - 4:
            interior = np.linspace(lo, hi, _N_BASIS - 2)[1:-1]
        knots = np.concatenate([[lo] * 4, interior, [hi] * 4])
        design = BSpline.design_matrix(x, knots, 3).toarray()
        self.basis = design - design.mean(axis=0)
        self.penalty = self._curvature_penalty(knots)

    @staticmethod
    def _curvature_penalty(knots: np.ndarray) -> np.ndarray:
        """Integral of products of basis second derivatives (exact).

        Second derivatives of cubic splines are piecewise linear, so their
        pairwise products are quadratic per knot span and two-point
        Gauss-Legendre quadrature integrates them exactly.
        """
        nb = knots.size - 4
        spans = np.unique(knots)
        gauss = np.array([-1.0, 1.0]) / math.sqrt(3.0)
        points, weights = [], []
        for a, b in zip(spans[:-1], spans[1:]):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            points.extend(mid + half * gauss)
            weights.extend([half, half])
        points = np.asarray(points)
        weights = np.asarray(weights)
        d2 = np.empty((points.size, nb))
        for j in range(nb):
            coeff = np.zeros(nb)
            coeff[j] = 1.0
            d2[:, j] = BSpline(knots, coeff, 3)(points, nu=2)
        return (d2 * weights[:, None]).T @ d2


@dataclass(frozen=True)
class _GamFit:
    rss: float
    edf: float
    lam: float


def _fit_at_lambda(xtx, xty, yty, omega, lam: float, n: int) -> _GamFit | None:
    d = xtx.shape[0]
    ridge = 1e-9 * (np.trace(xtx) / d if d else 1.0)
    a = xtx + lam * omega + ridge * np.eye(d)
    try:
        factor = sla.cho_factor(a)
    except sla.LinAlgError:
        return None
    beta = sla.cho_solve(factor, xty)
    rss = float(yty - 2.0 * beta @ xty + beta @ (xtx @ beta))
    rss = max(rss, 0.0)
    edf = float(np.trace(sla.cho_solve(factor, xtx)))
    return _GamFit(rss=rss, edf=edf, lam=lam)


def _assemble(terms: list[_SplineTerm], n: int):
    blocks = [np.ones((n, 1))] + [t.basis for t in terms]
    x = np.hstack(blocks)
    d = x.shape[1]
    omega = np.zeros((d, d))
    col = 1
    slices = []
    for t in terms:
        k = t.basis.shape[1]
        omega[col : col + k, col : col + k] = t.penalty
        slices.append(slice(col, col + k))
        col += k
    return x, omega, slices


def _gam_rss(terms: list[_SplineTerm], y: np.ndarray) -> tuple[float, float, float]:
    """(rss, edf, lambda) of the GCV-best additive spline fit."""
    n = y.size
    if not terms:
        yc = y - y.mean()
        return float(yc @ yc), 1.0, 0.0
    x, omega, _ = _assemble(terms, n)
    xtx = x.T @ x
    xty = x.T @ y
    yty = float(y @ y)
    best: tuple[float, _GamFit] | None = None
    for lam in _LAMBDA_GRID:
        fit = _fit_at_lambda(xtx, xty, yty, omega, lam, n)
        if fit is None or fit.edf >= n:
            continue
        gcv = n * fit.rss / (n - fit.edf) ** 2
        if best is None or gcv < best[0]:
            best = (gcv, fit)
    if best is None:
        raise SearchError("smoother failure: no valid penalty value")
    fit = best[1]
    return fit.rss, fit.edf, fit.lam


def _prune_node(
    terms_all: list[_SplineTerm], preds: list[int], y: np.ndarray, alpha: float
) -> list[int]:
    """Approximate F-test of each smooth term; keep parents with p < alpha."""
    n = y.size
    terms = [terms_all[u] for u in preds]
    x, omega, slices = _assemble(terms, n)
    xtx = x.T @ x
    xty = x.T @ y
    yty = float(y @ y)
    best: tuple[float, _GamFit] | None = None
    for lam in _LAMBDA_GRID:
        fit = _fit_at_lambda(xtx, xty, yty, omega, lam, n)
        if fit is None or fit.edf >= n:
            continue
        gcv = n * fit.rss / (n - fit.edf) ** 2
        if best is None or gcv < best[0]:
            best = (gcv, fit)
    if best is None:
        raise SearchError("smoother failure: no valid penalty value")
    full = best[1]

    kept = []
    for j, u in enumerate(preds):
        keep_cols = [
            i for i in range(x.shape[1]) if not (slices[j].start <= i < slices[j].stop)
        ]
        sub = np.ix_(keep_cols, keep_cols)
        reduced = _fit_at_lambda(xtx[sub], xty[keep_cols], yty, omega[sub], full.lam, n)
        if reduced is None:
            continue
        df1 = full.edf - reduced.edf
        df2 = n - full.edf
        if df1 <= 1e-9 or df2 <= 1e-9 or full.rss <= 0:
            continue
        f_stat = ((reduced.rss - full.rss) / df1) / (full.rss / df2)
        if f_stat <= 0:
            continue
        p_value = float(stats.f.sf(f_stat, df1, df2))
        if p_value < alpha:
            kept.append(u)
    return kept


def cam_learn(data, config: SearchConfig | None = None, *, names=None) -> Dag:
    """Causal additive model: greedy order search, then term-wise pruning.

    Stage 1 repeatedly inserts the order-compatible edge with the largest
    additive-regression log-likelihood gain (penalized cubic splines, GCV
    smoothing).  Stage 2 regresses each node on all order-preceding nodes
    and keeps only parents whose smooth term tests significant below
    ``cam_prune_alpha``.  Columns are standardized internally.
    """
    config = config or SearchConfig()
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise SearchError("data must be a 2-d matrix")
    n, p = x.shape
    if n < 50:
        raise SearchError("need at least 50 rows")
    if p > 20:
        raise SearchError("at most 20 columns supported")
    sd = x.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise SearchError("degenerate column for smoother")
    z = (x - x.mean(axis=0)) / sd
    names = _node_names(names, p)
    terms = [_SplineTerm(z[:, j]) for j in range(p)]

    rss_cache: dict[tuple[int, frozenset[int]], float] = {}

    def rss_of(v: int, parent_set: frozenset[int]) -> float:
        key = (v, parent_set)
        if key not in rss_cache:
            fit_terms = [terms[u] for u in sorted(parent_set)]
            rss, _, _ = _gam_rss(fit_terms, z[:, v])
            rss_cache[key] = max(rss, 1e-300)
        return rss_cache[key]

    children = {v: set() for v in range(p)}
    parents = {v: set() for v in range(p)}
    while True:
        best, best_gain = None, _EPS_GAIN
        for v in range(p):
            base = rss_of(v, frozenset(parents[v]))
            for u in range(p):
                if u == v or u in parents[v]:
                    continue
                if _has_path(children, v, u):
                    continue
                new = rss_of(v, frozenset(parents[v] | {u}))
                gain = 0.5 * n * math.log(base / new)
                if gain > best_gain:
                    best, best_gain = (u, v), gain
        if best is None:
            break
        children[best[0]].add(best[1])
        parents[best[1]].add(best[0])

    order = topological_sort(
        tuple(range(p)), frozenset((u, v) for u, cs in children.items() for v in cs)
    )
    edges = []
    for pos, v in enumerate(order):
        preds = order[:pos]
        if not preds:
            continue
        for u in _prune_node(terms, preds, z[:, v], config.cam_prune_alpha):
            edges.append((names[u], names[v]))
    return Dag(names, frozenset(edges))


# --- pairwise generalized-correlation graph --------------------------------


def gc_graph(table: ParameterTable, position: Position, names=None) -> set[tuple[str, str]]:
    """Directed edges from the pairwise kernel-cause rule (cycles allowed).

    Every unordered pair of parameters is tested; pairs whose computation
    fails are skipped with a warning.
    """
    names = tuple(names) if names is not None else PARAMETER_NAMES
    edges: set[tuple[str, str]] = set()
    for a, b in itertools.combinations(names, 2):
        try:
            pair = generalized_corr_pair(
                table.column(a, position), table.column(b, position)
            )
        except AssociationError as exc:
            _log.warning("skipping pair (%s, %s): %s", a, b, exc)
            continue
        if pair.direction is Direction.X_CAUSES_Y:
            edges.add((a, b))
        elif pair.direction is Direction.Y_CAUSES_X:
            edges.add((b, a))
    return edges
