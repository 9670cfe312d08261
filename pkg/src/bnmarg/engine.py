"""Evidence-marginal engine: subset splitting with mixed exact/sampled factors.

The headline estimator decomposes P(X_e) into one factor per conditionally
independent subset plus a closed-form factor for leftover evidence whose
parents are all observed:

    P(X_e) = P(X_e') * prod_i  sum_{X_Si} prod_{v in Si + e_ch(i)} P(X_v | X_pa(v)).

Subsets smaller than ``n_max`` are summed exactly on a junction tree; the
rest are estimated by belief-propagation-guided importance sampling.  Exact
factors contribute zero variance, so mixing keeps the whole estimate
unbiased while shrinking its spread relative to sampling everything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .decompose import decompose, relevant_subgraph
from .errors import ArgumentError, CapacityError, InternalConsistencyError
from .junction import (
    DEFAULT_TABLE_CAP,
    build_junction_tree,
    incorporate_evidence,
    log_full_junction_marginal,
    log_tree_sum,
)
from .network import (
    CategoricalBN,
    log_enumerate_marginal,
    validate_evidence,
)
from .sampling import (
    SamplerConfig,
    _log_gibbs,
    _log_lbp_is,
    importance_estimate,
    loopy_bp,
)

METHODS = ("sgs", "jt", "lbp-is", "gs", "enum")
_METHOD_ALIASES = {"jt_full": "jt", "lbp_is": "lbp-is", "gibbs": "gs"}


def canonical_method(method: str) -> str:
    """Resolve method aliases; unknown names raise."""
    name = _METHOD_ALIASES.get(method, method)
    if name not in METHODS:
        raise ArgumentError(f"unknown method {method!r}; expected one of {METHODS}")
    return name


@dataclass(frozen=True)
class SgsConfig:
    """Engine configuration.

    n_max:
        Strict size threshold: subsets with fewer than n_max nodes are summed
        exactly, the rest are sampled.  There is no auto-tuning; pick it for
        the hardware at hand.  0 samples everything, a huge value sums
        everything exactly (subject to the clique table cap, which triggers a
        per-subset fallback to sampling).
    sampler:
        Shared sampling knobs; the importance budget is split across sampled
        subsets proportionally to their size, and each sampled subset draws
        from an independent stream derived from (seed, subset index).
    method_override:
        Optional per-subset forcing, {subset index: "exact" | "approx"},
        mainly for experiments.  A forced "exact" may still raise
        CapacityError.
    """

    n_max: int = 15
    sampler: SamplerConfig = field(default_factory=lambda: SamplerConfig(sample_count=1000))
    method_override: Optional[Mapping] = None
    table_cap: int = DEFAULT_TABLE_CAP

    def __post_init__(self):
        if self.n_max < 0:
            raise ArgumentError("n_max must be >= 0")
        if self.table_cap < 2:
            raise ArgumentError("table_cap must be >= 2")
        if self.method_override:
            for k, m in self.method_override.items():
                if m not in ("exact", "approx"):
                    raise ArgumentError(f"method_override[{k!r}] must be 'exact' or 'approx'")


@dataclass(frozen=True)
class SubsetReport:
    """Provenance of one subset factor inside a MarginalEstimate."""

    nodes: tuple
    method: str  # "exact" | "approx"
    log_factor: float
    sample_count: Optional[int] = None
    weight_variance: Optional[float] = None


@dataclass(frozen=True)
class MarginalEstimate:
    """A marginal probability with per-subset provenance.

    log_value always equals leftover_log plus the sum of subset log factors.
    """

    log_value: float
    method: str
    per_subset: tuple
    leftover_log: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def evidence_only_factor(bn: CategoricalBN, e_prime, evidence: Mapping) -> float:
    """Log probability of leftover evidence: a plain product of CPT rows.

    Every node in e_prime must have all parents observed; the factor is then
    prod_v P(X_v = e[v] | X_pa(v) = e[pa(v)]) with no summation at all.
    """
    validate_evidence(bn, evidence)
    total = 0.0
    for v in e_prime:
        if v not in evidence:
            raise ArgumentError(f"leftover node {v!r} is not observed")
        ps = bn.dag.parents(v)
        if not set(ps) <= set(evidence):
            raise InternalConsistencyError(
                f"leftover evidence node {v!r} has unobserved parents"
            )
        p = float(bn.cpts[v][bn.row_index(v, evidence), evidence[v]])
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
    return total


def _subset_seed(master: int, index: int) -> int:
    """Stable per-subset stream seed; independent of processing order."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def marginal_sgs(bn: CategoricalBN, evidence: Mapping, cfg: Optional[SgsConfig] = None) -> MarginalEstimate:
    """Evidence marginal via subgroup separation.

    Decomposes the query, plans exact/sampled per subset (strict n_max
    threshold, capacity fallback to sampling, optional per-subset override),
    splits the sample budget across sampled subsets proportionally to size,
    and multiplies the factors back together in log space.
    """
    cfg = cfg or SgsConfig()
    validate_evidence(bn, evidence)
    dec = decompose(bn, evidence)
    rel = relevant_subgraph(bn, set(evidence))
    override = dict(cfg.method_override or {})

    # plan: decide exact/approx per subset, keeping any junction tree we
    # already built.  The plan is fixed before any sampling so that budget
    # split and per-subset seeds do not depend on execution order.
    plans = []  # (method, prebuilt tree or None)
    for i, (sub, b) in enumerate(zip(dec.subsets, dec.boundaries)):
        forced = override.get(i)
        want_exact = forced == "exact" or (forced is None and len(sub) < cfg.n_max)
        if not want_exact:
            plans.append(("approx", None))
            continue
        scope = set(sub) | set(b.e_mb)
        factors = set(sub) | set(b.e_ch)
        try:
            jt = build_junction_tree(rel, scope, factors, cfg.table_cap)
        except CapacityError:
            if forced == "exact":
                raise
            plans.append(("approx", None))
            continue
        plans.append(("exact", jt))

    sampled = [i for i, (m, _) in enumerate(plans) if m == "approx"]
    budget = {}
    if sampled:
        total_size = sum(len(dec.subsets[i]) for i in sampled)
        for i in sampled:
            share = cfg.sampler.sample_count * len(dec.subsets[i]) / total_size
            budget[i] = max(1, int(round(share)))

    reports = []
    log_total = 0.0
    for i, (sub, b) in enumerate(zip(dec.subsets, dec.boundaries)):
        method, jt = plans[i]
        if method == "exact":
            values = {v: evidence[v] for v in b.e_mb}
            ones = [v for v in b.e_mb if v not in set(b.e_ch)]
            log_f = log_tree_sum(incorporate_evidence(jt, values, ones))
            reports.append(SubsetReport(nodes=sub, method="exact", log_factor=log_f))
        else:
            scope = set(sub) | set(b.e_mb)
            factors = set(sub) | set(b.e_ch)
            sub_cfg = SamplerConfig(
                sample_count=budget[i],
                lbp_iterations=cfg.sampler.lbp_iterations,
                lbp_tolerance=cfg.sampler.lbp_tolerance,
                seed=_subset_seed(cfg.sampler.seed, i),
                belief_floor=cfg.sampler.belief_floor,
            )
            sub_evidence = {v: evidence[v] for v in b.e_mb}
            q = loopy_bp(rel, sub_evidence, sub_cfg, nodes=scope, factor_nodes=factors)
            res = importance_estimate(rel, sub, b, sub_evidence, q, sub_cfg)
            log_f = res.log_estimate
            reports.append(
                SubsetReport(
                    nodes=sub,
                    method="approx",
                    log_factor=log_f,
                    sample_count=res.sample_count,
                    weight_variance=res.weight_variance,
                )
            )
        log_total += log_f

    leftover_log = evidence_only_factor(rel, dec.leftover_evidence, evidence)
    return MarginalEstimate(
        log_value=leftover_log + log_total,
        method="sgs",
        per_subset=tuple(reports),
        leftover_log=leftover_log,
    )


def marginal(
    bn: CategoricalBN,
    evidence: Mapping,
    method: str = "sgs",
    cfg: Optional[SgsConfig] = None,
) -> MarginalEstimate:
    """One entry point for every estimator, returning a uniform result shape.

    Methods: ``sgs`` (the decomposing estimator), ``jt`` (full junction
    tree), ``lbp-is`` (belief-propagation importance sampling on the relevant
    subgraph), ``gs`` (Gibbs-frequency proposal baseline), ``enum`` (direct
    summation; capped).
    """
    cfg = cfg or SgsConfig()
    name = canonical_method(method)
    validate_evidence(bn, evidence)

    if name == "sgs":
        return marginal_sgs(bn, evidence, cfg)

    free = tuple(v for v in bn.node_ids if v not in evidence)
    if name == "jt":
        log_v = log_full_junction_marginal(bn, evidence, cfg.table_cap)
        report = SubsetReport(nodes=free, method="exact", log_factor=log_v)
        return MarginalEstimate(log_value=log_v, method="jt", per_subset=(report,), leftover_log=0.0)
    if name == "enum":
        log_v = log_enumerate_marginal(bn, evidence)
        report = SubsetReport(nodes=free, method="exact", log_factor=log_v)
        return MarginalEstimate(log_value=log_v, method="enum", per_subset=(report,), leftover_log=0.0)
    if name == "lbp-is":
        log_v, var, m = _log_lbp_is(bn, evidence, cfg.sampler)
        report = SubsetReport(
            nodes=free, method="approx", log_factor=log_v, sample_count=m, weight_variance=var
        )
        return MarginalEstimate(log_value=log_v, method="lbp-is", per_subset=(report,), leftover_log=0.0)
    log_v, var, m = _log_gibbs(bn, evidence, cfg.sampler, burn_in=100)
    report = SubsetReport(
        nodes=free, method="approx", log_factor=log_v, sample_count=m, weight_variance=var
    )
    return MarginalEstimate(log_value=log_v, method="gs", per_subset=(report,), leftover_log=0.0)
