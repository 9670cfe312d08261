"""Directed acyclic graphs and the structural queries used by inference.

Node identifiers are arbitrary hashable values (strings in practice).  The
position of a node in ``node_ids`` defines the canonical node order; every
set-valued result is returned as a tuple sorted by that order so that
downstream computations are reproducible no matter how the inputs were
assembled.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import ArgumentError, CycleError, UnknownNodeError

NodeId = Hashable


class Dag:
    """A directed acyclic graph with a fixed node order.

    Parameters
    ----------
    node_ids:
        Sequence of distinct node identifiers; its order is canonical.
    edges:
        Iterable of (parent, child) pairs.  Self loops, duplicate edges and
        unknown endpoints are rejected; a directed cycle raises CycleError
        naming one offending cycle.
    """

    def __init__(self, node_ids: Sequence[NodeId], edges: Iterable[tuple] = ()):
        self.node_ids = tuple(node_ids)
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ArgumentError("duplicate node ids in node list")
        self._index = {v: i for i, v in enumerate(self.node_ids)}

        edge_list = []
        seen = set()
        for edge in edges:
            u, v = edge
            if u not in self._index or v not in self._index:
                missing = u if u not in self._index else v
                raise UnknownNodeError(f"edge endpoint {missing!r} is not a node")
            if u == v:
                raise CycleError(f"self loop on {u!r}", cycle=(u, u))
            if (u, v) in seen:
                raise ArgumentError(f"duplicate edge {u!r} -> {v!r}")
            seen.add((u, v))
            edge_list.append((u, v))
        self.edges = frozenset(edge_list)

        parents = {v: [] for v in self.node_ids}
        children = {v: [] for v in self.node_ids}
        for u, v in edge_list:
            parents[v].append(u)
            children[u].append(v)
        key = self._index.__getitem__
        self._parents = {v: tuple(sorted(ps, key=key)) for v, ps in parents.items()}
        self._children = {v: tuple(sorted(cs, key=key)) for v, cs in children.items()}
        self._topo = self._compute_topological_order()

    # -- basic queries ----------------------------------------------------

    def __contains__(self, v) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return len(self.node_ids)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNodeError(f"unknown node {v!r}") from None

    def parents(self, v) -> tuple:
        self.index(v)
        return self._parents[v]

    def children(self, v) -> tuple:
        self.index(v)
        return self._children[v]

    def sort(self, nodes: Iterable) -> tuple:
        """Return the given nodes as a tuple in canonical order."""
        return tuple(sorted(nodes, key=self.index))

    def ancestors(self, v) -> tuple:
        """All strict ancestors of v, canonical order."""
        return self.sort(self._reach(v, self._parents))

    def descendants(self, v) -> tuple:
        """All strict descendants of v, canonical order."""
        return self.sort(self._reach(v, self._children))

    def ancestors_of_set(self, nodes: Iterable) -> tuple:
        """Union of strict ancestors of the given nodes, canonical order."""
        out = set()
        frontier = [v for v in nodes if self.index(v) >= 0]
        while frontier:
            nxt = []
            for v in frontier:
                for p in self._parents[v]:
                    if p not in out:
                        out.add(p)
                        nxt.append(p)
            frontier = nxt
        return self.sort(out)

    def _reach(self, v, link) -> set:
        self.index(v)
        out = set()
        frontier = [v]
        while frontier:
            nxt = []
            for u in frontier:
                for w in link[u]:
                    if w not in out:
                        out.add(w)
                        nxt.append(w)
            frontier = nxt
        out.discard(v)
        return out

    def subgraph(self, nodes: Iterable) -> "Dag":
        """Induced subgraph; node order inherited from this graph."""
        keep = set(nodes)
        for v in keep:
            self.index(v)
        ids = tuple(v for v in self.node_ids if v in keep)
        sub_edges = [(u, v) for (u, v) in self.edges if u in keep and v in keep]
        return Dag(ids, sub_edges)

    # -- topological order -------------------------------------------------

    def _compute_topological_order(self) -> tuple:
        indeg = {v: len(self._parents[v]) for v in self.node_ids}
        ready = [self._index[v] for v in self.node_ids if indeg[v] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            i = heapq.heappop(ready)
            v = self.node_ids[i]
            order.append(v)
            for c in self._children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, self._index[c])
        if len(order) != len(self.node_ids):
            raise CycleError(
                "graph contains a directed cycle: " + " -> ".join(map(repr, self._find_cycle())),
                cycle=self._find_cycle(),
            )
        return tuple(order)

    def _find_cycle(self) -> tuple:
        # iterative DFS; returns one directed cycle for the error message
        color = {v: 0 for v in self.node_ids}  # 0 new, 1 active, 2 done
        parent = {}
        for start in self.node_ids:
            if color[start]:
                continue
            stack = [(start, iter(self._children[start]))]
            color[start] = 1
            while stack:
                v, it = stack[-1]
                advanced = False
                for c in it:
                    if color[c] == 0:
                        color[c] = 1
                        parent[c] = v
                        stack.append((c, iter(self._children[c])))
                        advanced = True
                        break
                    if color[c] == 1:
                        cyc = [c, v]
                        u = v
                        while u != c:
                            u = parent[u]
                            cyc.append(u)
                        cyc.reverse()
                        return tuple(cyc)
                if not advanced:
                    color[v] = 2
                    stack.pop()
        return ()


class UndirectedGraph:
    """Simple undirected graph sharing the canonical node order of its source."""

    def __init__(self, node_ids: Sequence[NodeId], edges: Iterable[tuple] = ()):
        self.node_ids = tuple(node_ids)
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ArgumentError("duplicate node ids in node list")
        self._index = {v: i for i, v in enumerate(self.node_ids)}
        norm = set()
        for u, v in edges:
            if u not in self._index or v not in self._index:
                missing = u if u not in self._index else v
                raise UnknownNodeError(f"edge endpoint {missing!r} is not a node")
            if u == v:
                raise ArgumentError(f"self loop on {u!r}")
            if self._index[u] > self._index[v]:
                u, v = v, u
            norm.add((u, v))
        self.edges = frozenset(norm)
        adj = {v: set() for v in self.node_ids}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        key = self._index.__getitem__
        self._adjacency = {v: tuple(sorted(ns, key=key)) for v, ns in adj.items()}

    def __contains__(self, v) -> bool:
        return v in self._index

    def __len__(self) -> int:
        return len(self.node_ids)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise UnknownNodeError(f"unknown node {v!r}") from None

    def neighbors(self, v) -> tuple:
        self.index(v)
        return self._adjacency[v]

    def has_edge(self, u, v) -> bool:
        if self._index[u] > self._index[v]:
            u, v = v, u
        return (u, v) in self.edges

    def sort(self, nodes: Iterable) -> tuple:
        return tuple(sorted(nodes, key=self.index))


@dataclass(frozen=True)
class NodeRelations:
    parents: tuple
    children: tuple
    ancestors: tuple
    descendants: tuple


@dataclass(frozen=True)
class Triangulation:
    chordal: UndirectedGraph
    elimination_order: tuple


def relations(dag: Dag, v) -> NodeRelations:
    """Parents, children, ancestors and descendants of v (canonical order)."""
    return NodeRelations(
        parents=dag.parents(v),
        children=dag.children(v),
        ancestors=dag.ancestors(v),
        descendants=dag.descendants(v),
    )


def markov_blanket(dag: Dag, v) -> tuple:
    """Parents, children and co-parents of v, excluding v itself."""
    out = set(dag.parents(v)) | set(dag.children(v))
    for c in dag.children(v):
        out.update(dag.parents(c))
    out.discard(v)
    return dag.sort(out)


def topological_order(dag: Dag) -> tuple:
    """A topological order, deterministic: ties broken by canonical position."""
    return dag._topo


def moralize(dag: Dag) -> UndirectedGraph:
    """Undirected skeleton plus marriages between co-parents of each node."""
    edges = set()
    for u, v in dag.edges:
        edges.add((u, v))
    for v in dag.node_ids:
        ps = dag.parents(v)
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                edges.add((ps[i], ps[j]))
    return UndirectedGraph(dag.node_ids, edges)


def triangulate(graph: UndirectedGraph) -> Triangulation:
    """Greedy min-fill triangulation.

    Nodes are eliminated in the order that greedily minimises the number of
    fill edges, breaking ties by smaller remaining degree and then by
    canonical position.  Returns the chordal supergraph (input plus fill
    edges) together with the elimination order, which is a perfect
    elimination order of the result.
    """
    adj = {v: set(graph.neighbors(v)) for v in graph.node_ids}
    remaining = set(graph.node_ids)
    fill_edges = set()
    order = []

    def fill_count(v) -> int:
        ns = [u for u in adj[v] if u in remaining]
        cnt = 0
        for i in range(len(ns)):
            for j in range(i + 1, len(ns)):
                if ns[j] not in adj[ns[i]]:
                    cnt += 1
        return cnt

    while remaining:
        best = min(
            remaining,
            key=lambda v: (
                fill_count(v),
                sum(1 for u in adj[v] if u in remaining),
                graph.index(v),
            ),
        )
        ns = [u for u in adj[best] if u in remaining]
        for i in range(len(ns)):
            for j in range(i + 1, len(ns)):
                a, b = ns[i], ns[j]
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    fill_edges.add((a, b))
        remaining.discard(best)
        order.append(best)

    chordal = UndirectedGraph(graph.node_ids, set(graph.edges) | fill_edges)
    return Triangulation(chordal=chordal, elimination_order=tuple(order))


def d_separated(dag: Dag, a: Iterable, b: Iterable, z: Iterable = ()) -> bool:
    """True iff every undirected path between a and b is blocked given z.

    Linear-time reachability over (node, approach-direction) states: a trail
    may pass through a non-collider only when the node is unobserved, and
    through a collider only when the node has an observed descendant (itself
    included).  The three node sets must be pairwise disjoint.
    """
    a = frozenset(a)
    b = frozenset(b)
    z = frozenset(z)
    for group in (a, b, z):
        for v in group:
            dag.index(v)
    if a & b or a & z or b & z:
        raise ArgumentError("d-separation query requires pairwise disjoint node sets")
    if not a or not b:
        raise ArgumentError("d-separation query requires non-empty endpoint sets")

    obs_anc = set(z)
    obs_anc.update(dag.ancestors_of_set(z))

    # state: (node, came_from_child). Sources behave as if entered from a child.
    visited = set()
    frontier = [(s, True) for s in a]
    while frontier:
        v, from_child = frontier.pop()
        if (v, from_child) in visited:
            continue
        visited.add((v, from_child))
        if v in b:
            return False
        if from_child:
            if v not in z:
                for p in dag.parents(v):
                    frontier.append((p, True))
                for c in dag.children(v):
                    frontier.append((c, False))
        else:
            if v not in z:
                for c in dag.children(v):
                    frontier.append((c, False))
            if v in obs_anc:
                for p in dag.parents(v):
                    frontier.append((p, True))
    return True
