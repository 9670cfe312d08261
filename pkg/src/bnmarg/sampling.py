"""Approximate evidence marginals: belief-propagation proposals, importance
sampling, and a Gibbs-frequency baseline.

The estimators share one identity: for any strictly positive factorized
proposal q over the free variables,

    sum_x prod_f CPT_f(x, e)  =  E_q[ prod_f CPT_f(X, e) / q(X) ],

so an average of importance weights is an unbiased estimate of the evidence
sum no matter how q was obtained.  Proposal quality only moves the variance.
Weights are accumulated in log space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np
from scipy.special import logsumexp

from .decompose import relevant_subgraph
from .errors import ArgumentError, InternalConsistencyError
from .junction import _family_table
from .network import (
    CategoricalBN,
    log_joint_probability,
    sample_forward_array,
    validate_evidence,
)


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs shared by the sampling estimators.

    sample_count is the importance-sample budget M; for the Gibbs baseline it
    is also the number of recorded sweeps.  belief_floor keeps proposals
    strictly positive so importance weights stay finite.
    """

    sample_count: int
    lbp_iterations: int = 10
    lbp_tolerance: float = 1e-6
    seed: int = 0
    belief_floor: float = 1e-6

    def __post_init__(self):
        if self.sample_count < 1:
            raise ArgumentError("sample_count must be >= 1")
        if self.lbp_iterations < 1:
            raise ArgumentError("lbp_iterations must be >= 1")
        if not self.lbp_tolerance > 0:
            raise ArgumentError("lbp_tolerance must be positive")
        if not 0 < self.belief_floor < 0.1:
            raise ArgumentError("belief_floor must lie in (0, 0.1)")
        if int(self.seed) < 0:
            raise ArgumentError("seed must be a non-negative integer")


@dataclass(frozen=True)
class ImportanceDistribution:
    """A fully factorized distribution over a set of nodes.

    probs maps each node to a strictly positive vector summing to one.
    """

    nodes: tuple
    probs: Mapping

    def __post_init__(self):
        for v in self.nodes:
            p = np.asarray(self.probs[v], dtype=float)
            if p.ndim != 1 or p.size < 2:
                raise ArgumentError(f"proposal for {v!r} must be a 1-d vector")
            if not np.all(p > 0.0):
                raise ArgumentError(f"proposal for {v!r} has non-positive entries")
            if abs(float(p.sum()) - 1.0) > 1e-6:
                raise ArgumentError(f"proposal for {v!r} does not sum to one")

    def sample(self, rng: np.random.Generator, m: int) -> dict:
        """m iid draws per node (inverse CDF), node order fixed."""
        out = {}
        for v in self.nodes:
            cum = np.cumsum(np.asarray(self.probs[v], dtype=float))
            u = rng.random(m)
            out[v] = np.minimum((cum < u[:, None]).sum(axis=1), cum.size - 1)
        return out

    def log_prob(self, samples: Mapping) -> np.ndarray:
        total = 0.0
        for v in self.nodes:
            total = total + np.log(np.asarray(self.probs[v], dtype=float))[samples[v]]
        return np.asarray(total, dtype=float)


@dataclass(frozen=True)
class ImportanceResult:
    """One importance-sampling run.

    weight_variance is the unbiased sample variance of w / mean(w): scale
    free, and estimate * sqrt(weight_variance / sample_count) reconstructs
    the standard error of the estimate.
    """

    estimate: float
    log_estimate: float
    weight_variance: float
    sample_count: int


def _reduced_factor(bn: CategoricalBN, v, evidence: Mapping):
    """CPT of v with observed family members fixed; returns (free_vars, table)."""
    family = bn.dag.sort(set(bn.dag.parents(v)) | {v})
    table = _family_table(bn, v, family)
    sel = []
    free_vars = []
    for u in family:
        if u in evidence:
            sel.append(int(evidence[u]))
        else:
            sel.append(slice(None))
            free_vars.append(u)
    return tuple(free_vars), np.asarray(table[tuple(sel)], dtype=float)


def loopy_bp(
    bn: CategoricalBN,
    evidence: Mapping,
    cfg: SamplerConfig,
    nodes: Optional[Iterable] = None,
    factor_nodes: Optional[Iterable] = None,
) -> ImportanceDistribution:
    """Factor-graph sum-product beliefs as a factorized proposal.

    One factor per node in ``factor_nodes`` (its evidence-clamped CPT), one
    variable per free node of the scope.  All messages start at one; each
    round recomputes every factor-to-variable message from the previous
    round, then every variable-to-factor message from those, so the result
    is independent of node order.  Runs up to ``cfg.lbp_iterations`` rounds
    or until the largest belief change drops below ``cfg.lbp_tolerance``.
    Beliefs are floored at
    ``cfg.belief_floor`` and renormalized, so the result is strictly
    positive.  On tree-shaped factor graphs the converged beliefs are the
    exact conditionals.
    """
    dag = bn.dag
    scope = set(dag.node_ids) if nodes is None else set(nodes)
    for v in scope:
        dag.index(v)
    factors_of = set(scope) if factor_nodes is None else set(factor_nodes)
    if not factors_of <= scope:
        raise ArgumentError("factor_nodes must lie inside the scope")
    free = [v for v in dag.node_ids if v in scope and v not in evidence]
    if not free:
        raise ArgumentError("no free nodes to form a proposal over")

    factors = []  # (vars, table)
    for v in dag.sort(factors_of):
        if not set(dag.parents(v)) <= scope:
            raise ArgumentError(f"family of factor node {v!r} reaches outside the scope")
        fvars, table = _reduced_factor(bn, v, evidence)
        if fvars:
            factors.append((fvars, table))

    touching = {v: [] for v in free}
    for fi, (fvars, _) in enumerate(factors):
        for v in fvars:
            touching[v].append(fi)

    cards = bn.cardinalities
    uniform = {v: np.full(cards[v], 1.0 / cards[v]) for v in free}
    vf = {}  # (v, fi) -> message
    fv = {}  # (fi, v) -> message
    for fi, (fvars, _) in enumerate(factors):
        for v in fvars:
            vf[(v, fi)] = np.ones(cards[v])
            fv[(fi, v)] = np.ones(cards[v])

    def current_beliefs(fv_msgs):
        out = {}
        for v in free:
            b = np.ones(cards[v])
            for fi in touching[v]:
                b = b * fv_msgs[(fi, v)]
            s = float(b.sum())
            out[v] = b / s if s > 0 else uniform[v].copy()
        return out

    beliefs = current_beliefs(fv)
    for _ in range(cfg.lbp_iterations):
        new_fv = {}
        for fi, (fvars, table) in enumerate(factors):
            for k, v in enumerate(fvars):
                t = table
                for k2, u in enumerate(fvars):
                    if u == v:
                        continue
                    shape = [1] * table.ndim
                    shape[k2] = cards[u]
                    t = t * vf[(u, fi)].reshape(shape)
                axes = tuple(k2 for k2 in range(table.ndim) if k2 != k)
                msg = t.sum(axis=axes) if axes else t.copy()
                s = float(msg.sum())
                new_fv[(fi, v)] = msg / s if s > 0 else uniform[v].copy()
        new_vf = {}
        for v in free:
            for fi in touching[v]:
                m = np.ones(cards[v])
                for fj in touching[v]:
                    if fj != fi:
                        m = m * new_fv[(fj, v)]
                s = float(m.sum())
                new_vf[(v, fi)] = m / s if s > 0 else uniform[v].copy()
        fv, vf = new_fv, new_vf
        nxt = current_beliefs(fv)
        delta = max(float(np.max(np.abs(nxt[v] - beliefs[v]))) for v in free)
        beliefs = nxt
        if delta < cfg.lbp_tolerance:
            break

    probs = {}
    for v in free:
        b = np.maximum(beliefs[v], cfg.belief_floor)
        probs[v] = b / b.sum()
    return ImportanceDistribution(nodes=dag.sort(free), probs=probs)


def _is_summary(logw: np.ndarray) -> tuple[float, float]:
    """(log mean weight, unbiased relative variance of the weights)."""
    m = float(logw.max())
    n = logw.size
    if not math.isfinite(m):
        return -math.inf, 0.0
    w = np.exp(logw - m)
    m1 = float(w.mean())
    if n == 1 or m1 <= 0.0:
        return m + math.log(m1) if m1 > 0 else -math.inf, 0.0
    m2 = float((w * w).mean())
    rel = max((m2 / (m1 * m1) - 1.0) * n / (n - 1), 0.0)
    return m + math.log(m1), rel


def _log_weight_terms(
    bn: CategoricalBN, factor_nodes: Iterable, samples: Mapping, evidence: Mapping, m: int
) -> np.ndarray:
    """Sum of log CPT lookups for the given factor nodes, vectorized over samples."""
    logw = np.zeros(m)
    for v in bn.dag.sort(set(factor_nodes)):
        card = bn.cardinalities[v]
        sv = np.int64(evidence[v]) if v in evidence else samples[v]
        row = np.int64(0)
        for p, stride in zip(bn.dag.parents(v), bn.parent_strides(v)):
            if p in evidence:
                row = row + stride * np.int64(evidence[p])
            elif p in samples:
                row = row + stride * samples[p]
            else:
                raise InternalConsistencyError(
                    f"factor {v!r} depends on {p!r}, which is neither sampled nor observed"
                )
        with np.errstate(divide="ignore"):
            logs = np.log(bn.cpts[v]).ravel()
        logw = logw + logs[np.asarray(row * card + sv)]
    return logw


def importance_estimate(
    bn: CategoricalBN,
    subset: Iterable,
    bounds,
    evidence: Mapping,
    q: ImportanceDistribution,
    cfg: SamplerConfig,
) -> ImportanceResult:
    """Unbiased importance estimate of one subset's factor under proposal q.

    Draws cfg.sample_count configurations of the subset from q and averages
    w = prod_{v in subset+child boundary} CPT_v(x, e) / q(x).
    """
    sub = bn.dag.sort(set(subset))
    if not set(sub) <= set(q.nodes):
        raise ArgumentError("proposal does not cover the subset")
    rng = np.random.default_rng(int(cfg.seed))
    m = cfg.sample_count
    samples = ImportanceDistribution(nodes=sub, probs={v: q.probs[v] for v in sub}).sample(
        rng, m
    )
    logw = _log_weight_terms(bn, set(sub) | set(bounds.e_ch), samples, evidence, m)
    logq = np.zeros(m)
    for v in sub:
        logq = logq + np.log(np.asarray(q.probs[v], dtype=float))[samples[v]]
    log_est, rel = _is_summary(logw - logq)
    return ImportanceResult(
        estimate=math.exp(log_est),
        log_estimate=log_est,
        weight_variance=rel,
        sample_count=m,
    )


def _log_lbp_is(bn: CategoricalBN, evidence: Mapping, cfg: SamplerConfig):
    validate_evidence(bn, evidence)
    if not evidence:
        return 0.0, 0.0, 0
    rel = relevant_subgraph(bn, set(evidence))
    free = [v for v in rel.node_ids if v not in evidence]
    if not free:
        # every relevant node observed: the marginal is a plain CPT product
        logp = 0.0
        for v in rel.node_ids:
            p = float(rel.cpts[v][rel.row_index(v, evidence), evidence[v]])
            if p <= 0.0:
                return -math.inf, 0.0, 0
            logp += math.log(p)
        return logp, 0.0, 0
    q = loopy_bp(rel, evidence, cfg)
    rng = np.random.default_rng(int(cfg.seed))
    m = cfg.sample_count
    samples = q.sample(rng, m)
    logw = _log_weight_terms(rel, rel.node_ids, samples, evidence, m) - q.log_prob(samples)
    log_est, rel_var = _is_summary(logw)
    return log_est, rel_var, m


def lbp_is_estimate(bn: CategoricalBN, evidence: Mapping, cfg: SamplerConfig) -> float:
    """Evidence marginal by belief-propagation-guided importance sampling.

    Prunes to the relevant subgraph, runs loopy BP there for a factorized
    proposal over all free nodes, and importance-weights against the full
    product of the relevant CPTs.  Unbiased for any proposal the floor keeps
    positive.
    """
    log_est, _, _ = _log_lbp_is(bn, evidence, cfg)
    return math.exp(log_est)


def _gibbs_plan(bn: CategoricalBN, free: list):
    """Flattened index structures for the single-site update loop."""
    cols = {v: i for i, v in enumerate(bn.node_ids)}
    plan = []
    for v in free:
        own = bn.cpts[v].ravel().tolist()
        card = bn.cardinalities[v]
        pcols = [cols[p] for p in bn.dag.parents(v)]
        pstrides = list(bn.parent_strides(v))
        kids = []
        for c in bn.dag.children(v):
            flat = bn.cpts[c].ravel().tolist()
            ccard = bn.cardinalities[c]
            ks = []
            vstride = 0
            for p, stride in zip(bn.dag.parents(c), bn.parent_strides(c)):
                if p == v:
                    vstride = stride
                else:
                    ks.append((cols[p], stride))
            kids.append((flat, ccard, cols[c], ks, vstride))
        plan.append((cols[v], own, card, pcols, pstrides, kids))
    return cols, plan


def _log_gibbs(bn: CategoricalBN, evidence: Mapping, cfg: SamplerConfig, burn_in: int):
    validate_evidence(bn, evidence)
    if burn_in < 0:
        raise ArgumentError("burn_in must be non-negative")
    if not evidence:
        return 0.0, 0.0, 0
    free = [v for v in bn.node_ids if v not in evidence]
    if not free:
        return log_joint_probability(bn, evidence), 0.0, 0

    rng = np.random.default_rng(int(cfg.seed))
    state = list(sample_forward_array(bn, 1, rng)[0])
    cols, plan = _gibbs_plan(bn, free)
    for v, s in evidence.items():
        state[cols[v]] = int(s)

    m = cfg.sample_count
    counts = {v: [0] * bn.cardinalities[v] for v in free}
    for sweep in range(burn_in + m):
        u = rng.random(len(plan))
        for k, (col, own, card, pcols, pstrides, kids) in enumerate(plan):
            row = 0
            for pc, st in zip(pcols, pstrides):
                row += st * state[pc]
            base = row * card
            total = 0.0
            weights = []
            for s in range(card):
                w = own[base + s]
                for flat, ccard, ccol, ks, vstride in kids:
                    crow = vstride * s
                    for pc, st in ks:
                        crow += st * state[pc]
                    w *= flat[crow * ccard + state[ccol]]
                weights.append(w)
                total += w
            if total > 0.0:
                target = u[k] * total
                acc = 0.0
                pick = card - 1
                for s in range(card):
                    acc += weights[s]
                    if acc >= target:
                        pick = s
                        break
                state[col] = pick
        if sweep >= burn_in:
            for v in free:
                counts[v][state[cols[v]]] += 1

    probs = {}
    for v in free:
        f = np.maximum(np.asarray(counts[v], dtype=float) / m, cfg.belief_floor)
        probs[v] = f / f.sum()
    q = ImportanceDistribution(nodes=bn.dag.sort(free), probs=probs)
    samples = q.sample(rng, m)
    logw = _log_weight_terms(bn, bn.node_ids, samples, evidence, m) - q.log_prob(samples)
    log_est, rel_var = _is_summary(logw)
    return log_est, rel_var, m


def gibbs_estimate(
    bn: CategoricalBN, evidence: Mapping, cfg: SamplerConfig, burn_in: int = 100
) -> float:
    """Evidence marginal by a Gibbs-frequency proposal plus importance reweighting.

    Runs systematic-scan single-site Gibbs over every non-evidence node of
    the full network (Markov-blanket conditionals), discards ``burn_in``
    sweeps, records per-node state frequencies over cfg.sample_count further
    sweeps, floors and normalizes them into a factorized proposal, and
    finally averages cfg.sample_count fresh importance weights against the
    full joint.  Total work is burn_in + 2 * sample_count sweep-equivalents.
    """
    log_est, _, _ = _log_gibbs(bn, evidence, cfg, burn_in)
    return math.exp(log_est)
