"""Junction-tree inference for evidence sums over small variable groups.

The pipeline is the classical one: moralize the (sub)graph, triangulate it
greedily, read the maximal cliques off the elimination order, join them by a
maximum-sepset-weight spanning tree, multiply every requested CPT into the
smallest clique containing its family, zero out table entries that contradict
the observed evidence, and run one collect pass of sum-product messages to a
root whose belief then sums to the target probability.

Boundary evidence nodes whose CPTs must act as the constant one (their
parents live outside the subgraph) are handled by simply not multiplying
their CPTs in: ``factor_nodes`` names the nodes whose CPTs enter.

Tables are kept in linear space with an attached log-scale that absorbs the
magnitude, so results remain exact in log space for networks far below the
double-precision floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

import numpy as np

from .errors import ArgumentError, CapacityError, InternalConsistencyError
from .graphs import moralize, triangulate
from .network import CategoricalBN

DEFAULT_TABLE_CAP = 2**20


@dataclass(frozen=True)
class CliqueTree:
    """A clique tree ready for message passing.

    ``cliques`` hold node tuples in canonical order; ``tree_edges`` are
    (i, j, sepset) triples forming a spanning tree over clique indices (the
    sepset may be empty when the moral graph is disconnected); ``potentials``
    are linear-space arrays whose axes follow the clique's node order.
    """

    nodes: tuple
    cliques: tuple
    tree_edges: tuple
    potentials: tuple
    factor_nodes: tuple
    cards: Mapping
    evidence: Optional[Mapping] = None

    def clique_containing(self, family: Iterable) -> int:
        """Smallest clique covering the family; ties fall to canonical content."""
        fam = set(family)
        pos = {v: k for k, v in enumerate(self.nodes)}
        best = -1
        best_key = None
        for i, c in enumerate(self.cliques):
            if fam <= set(c):
                key = (len(c), tuple(pos[v] for v in c), i)
                if best_key is None or key < best_key:
                    best = i
                    best_key = key
        return best


def _max_cliques(node_ids, chordal, order) -> list[tuple]:
    index = {v: i for i, v in enumerate(node_ids)}
    eliminated = set()
    raw = []
    for v in order:
        members = {v} | {u for u in chordal.neighbors(v) if u not in eliminated}
        raw.append(frozenset(members))
        eliminated.add(v)
    # drop cliques contained in another one
    keep = []
    for c in raw:
        if not any(c < d for d in raw):
            keep.append(c)
    uniq = []
    seen = set()
    for c in keep:
        if c not in seen:
            seen.add(c)
            uniq.append(tuple(sorted(c, key=index.__getitem__)))
    uniq.sort(key=lambda c: tuple(index[v] for v in c))
    return uniq


def _spanning_tree(cliques: list[tuple]) -> list[tuple]:
    """Maximum-sepset-weight spanning tree over the cliques (Kruskal).

    Candidate edges with empty intersections are only used to join what the
    weighted phase leaves disconnected, so a disconnected moral graph yields
    a tree whose cross-component messages are scalars.
    """
    n = len(cliques)
    if n == 0:
        return []
    sets = [set(c) for c in cliques]
    cand = []
    for i in range(n):
        for j in range(i + 1, n):
            w = len(sets[i] & sets[j])
            cand.append((-w, i, j))
    cand.sort()
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for negw, i, j in cand:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        parent[ri] = rj
        edges.append((i, j))
        if len(edges) == n - 1:
            break
    return edges


def build_junction_tree(
    bn: CategoricalBN,
    nodes: Optional[Iterable] = None,
    factor_nodes: Optional[Iterable] = None,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> CliqueTree:
    """Clique tree over the induced subgraph on ``nodes``.

    ``factor_nodes`` names the nodes whose CPTs are multiplied into the
    potentials (default: all of ``nodes``); each such node's family must lie
    inside ``nodes``.  The product of all potentials therefore equals the
    product of exactly the requested CPTs.  A clique whose joint state count
    exceeds ``table_cap`` raises CapacityError before any table is allocated.
    """
    dag = bn.dag
    if nodes is None:
        node_set = set(dag.node_ids)
    else:
        node_set = set(nodes)
        for v in node_set:
            dag.index(v)
    scope = dag.sort(node_set)
    if not scope:
        raise ArgumentError("empty node set")
    if factor_nodes is None:
        factors = set(scope)
    else:
        factors = set(factor_nodes)
    if not factors <= node_set:
        raise ArgumentError("factor_nodes must be a subset of nodes")

    sub = dag.subgraph(scope)
    for v in factors:
        if not set(dag.parents(v)) <= node_set:
            raise ArgumentError(
                f"family of factor node {v!r} reaches outside the subgraph"
            )

    tri = triangulate(moralize(sub))
    cliques = _max_cliques(sub.node_ids, tri.chordal, tri.elimination_order)

    for c in cliques:
        size = 1
        for v in c:
            size *= bn.cardinalities[v]
            if size > table_cap:
                raise CapacityError(
                    f"clique {c} exceeds table cap ({table_cap} joint states)"
                )

    tree = []
    for i, j in _spanning_tree(cliques):
        sep = tuple(v for v in cliques[i] if v in set(cliques[j]))
        tree.append((i, j, sep))

    index = {v: k for k, v in enumerate(sub.node_ids)}
    potentials = [
        np.ones([bn.cardinalities[v] for v in c], dtype=float) for c in cliques
    ]
    jt = CliqueTree(
        nodes=scope,
        cliques=tuple(cliques),
        tree_edges=tuple(tree),
        potentials=tuple(potentials),
        factor_nodes=dag.sort(factors),
        cards={v: bn.cardinalities[v] for v in scope},
    )

    pots = [p.copy() for p in potentials]
    for v in sub.node_ids:
        if v not in factors:
            continue
        family = dag.sort(set(dag.parents(v)) | {v})
        k = jt.clique_containing(family)
        if k < 0:
            raise InternalConsistencyError(f"no clique contains family of {v!r}")
        table = _family_table(bn, v, family)
        pots[k] *= _expand(table, family, jt.cliques[k], bn.cardinalities)
    return replace(jt, potentials=tuple(pots))


def _family_table(bn: CategoricalBN, v, family: tuple) -> np.ndarray:
    """CPT of v as an array whose axes follow the canonical family order."""
    ps = bn.dag.parents(v)
    shape = [bn.cardinalities[p] for p in ps] + [bn.cardinalities[v]]
    t = bn.cpts[v].reshape(shape)
    current = tuple(ps) + (v,)
    perm = [current.index(u) for u in family]
    return np.transpose(t, perm)


def _expand(table: np.ndarray, vars_: tuple, clique: tuple, cards: Mapping) -> np.ndarray:
    """Reshape a table over a subset of a clique's variables for broadcasting.

    Both variable tuples are in canonical order, so inserting singleton axes
    suffices; no transposition is needed.
    """
    shape = [cards[v] if v in set(vars_) else 1 for v in clique]
    return table.reshape(shape)


def incorporate_evidence(
    jt: CliqueTree, values: Mapping, ones_nodes: Iterable = ()
) -> CliqueTree:
    """Zero every potential entry inconsistent with the observed values.

    ``ones_nodes`` are observed boundary nodes whose CPTs must contribute the
    constant one; that is realized at build time by leaving them out of
    ``factor_nodes``, which this function verifies.  Returns a new tree; the
    input is not modified.
    """
    ones = set(ones_nodes)
    scope = set(jt.nodes)
    if not set(values) <= scope:
        raise ArgumentError("evidence names nodes outside the clique tree scope")
    if not ones <= set(values):
        raise ArgumentError("ones_nodes must all be observed")
    clash = ones & set(jt.factor_nodes)
    if clash:
        raise ArgumentError(
            f"ones_nodes {sorted(map(repr, clash))} had their CPTs multiplied in; "
            "rebuild the tree with them excluded from factor_nodes"
        )
    pots = []
    for c, pot in zip(jt.cliques, jt.potentials):
        pot = pot.copy()
        for axis, v in enumerate(c):
            if v not in values:
                continue
            s = values[v]
            if not 0 <= s < jt.cards[v]:
                raise ArgumentError(f"state {s} out of range for {v!r}")
            sel = [slice(None)] * pot.ndim
            sel[axis] = np.arange(jt.cards[v]) != s
            pot[tuple(sel)] = 0.0
        pots.append(pot)
    return replace(jt, potentials=tuple(pots), evidence=dict(values))


def log_tree_sum(jt: CliqueTree, root: int = 0) -> float:
    """Collect sum-product messages to ``root`` and return log sum of belief.

    One upward pass suffices for a total sum: each edge message sums its
    clique's belief over the variables outside the sepset, and the root
    belief's total is the requested probability mass.  Invariant under the
    choice of root.
    """
    n = len(jt.cliques)
    if not 0 <= root < n:
        raise ArgumentError(f"root index {root} out of range")
    adj = {i: [] for i in range(n)}
    seps = {}
    for i, j, sep in jt.tree_edges:
        adj[i].append(j)
        adj[j].append(i)
        seps[(i, j)] = sep
        seps[(j, i)] = sep

    # iterative post-order from the root
    order = []
    parent = {root: -1}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for u in adj[v]:
            if u not in parent:
                parent[u] = v
                stack.append(u)
    if len(order) != n:
        raise InternalConsistencyError("clique tree is not connected")

    beliefs: dict[int, tuple[np.ndarray, float]] = {}
    messages: dict[int, tuple[np.ndarray, float]] = {}
    for i in reversed(order):
        pot = jt.potentials[i]
        scale = 0.0
        val = pot
        for u in adj[i]:
            if u == parent[i]:
                continue
            msg, s = messages[u]
            val = val * _expand(msg, seps[(u, i)], jt.cliques[i], jt.cards)
            scale += s
        beliefs[i] = (val, scale)
        if parent[i] >= 0:
            sep = set(seps[(i, parent[i])])
            axes = tuple(k for k, v in enumerate(jt.cliques[i]) if v not in sep)
            msg = val.sum(axis=axes) if axes else val.copy()
            m = float(msg.max()) if msg.size else 0.0
            if m > 0.0:
                msg = msg / m
                scale += math.log(m)
            else:
                scale = 0.0  # all-zero message: contradiction propagates as zero
            messages[i] = (msg, scale)

    val, scale = beliefs[root]
    total = float(val.sum())
    if total <= 0.0:
        return -math.inf
    return math.log(total) + scale


def log_subset_marginal_exact(
    bn: CategoricalBN,
    subset: Iterable,
    bounds,
    e: Mapping,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> float:
    """Log of one subset's factor, by exact junction-tree summation.

    The factor is the sum over the subset's configurations of the product of
    the CPTs of the subset members and their evidence children, with all
    boundary evidence fixed; blanket evidence outside the child boundary
    enters as the constant one.
    """
    sub = tuple(subset)
    scope = set(sub) | set(bounds.e_mb)
    factors = set(sub) | set(bounds.e_ch)
    jt = build_junction_tree(bn, scope, factors, table_cap)
    values = {v: e[v] for v in bounds.e_mb}
    ones = [v for v in bounds.e_mb if v not in set(bounds.e_ch)]
    jt = incorporate_evidence(jt, values, ones)
    return log_tree_sum(jt)


def subset_marginal_exact(
    bn: CategoricalBN,
    subset: Iterable,
    bounds,
    e: Mapping,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> float:
    """Linear-space version of :func:`log_subset_marginal_exact`."""
    return math.exp(log_subset_marginal_exact(bn, subset, bounds, e, table_cap))


def log_full_junction_marginal(
    bn: CategoricalBN, e: Mapping, table_cap: int = DEFAULT_TABLE_CAP
) -> float:
    """Log marginal of e over the whole network by one junction tree.

    Treats the entire free set as a single group with all CPTs multiplied in
    and every evidence node zeroed to its observed state; the root belief
    then sums to the evidence marginal.
    """
    jt = build_junction_tree(bn, None, None, table_cap)
    jt = incorporate_evidence(jt, dict(e), ())
    return log_tree_sum(jt)
