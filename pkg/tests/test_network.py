import itertools
import math

import numpy as np
import pytest

from bnmarg.errors import ArgumentError, CapacityError, InvalidAssignmentError, UnknownNodeError
from bnmarg.graphs import Dag
from bnmarg.network import (
    CategoricalBN,
    enumerate_marginal,
    joint_probability,
    log_enumerate_marginal,
    log_joint_probability,
    sample_forward,
    sample_forward_array,
    validate,
)

from conftest import brute_marginal, rand_bn, rand_evidence


def two_node():
    dag = Dag(("A", "B"), [("A", "B")])
    cpts = {
        "A": np.array([[0.7, 0.3]]),
        "B": np.array([[0.9, 0.1], [0.2, 0.8]]),
    }
    return CategoricalBN(dag, {"A": 2, "B": 2}, cpts)


def test_construction_checks():
    dag = Dag(("A", "B"), [("A", "B")])
    with pytest.raises(ArgumentError):
        CategoricalBN(dag, {"A": 1, "B": 2}, {})
    with pytest.raises(ArgumentError):
        CategoricalBN(
            dag,
            {"A": 2, "B": 2},
            {"A": np.array([[0.5, 0.5]]), "B": np.array([[0.5, 0.5]])},
        )  # B needs 2 rows
    with pytest.raises(UnknownNodeError):
        CategoricalBN(
            dag,
            {"A": 2, "B": 2, "Z": 2},
            {
                "A": np.array([[0.5, 0.5]]),
                "B": np.array([[0.5, 0.5], [0.5, 0.5]]),
            },
        )


def test_validate_reports_defects():
    bn = two_node()
    assert validate(bn) == []
    bad = {
        "A": np.array([[0.6, 0.3]]),  # sums to 0.9
        "B": np.array([[0.9, 0.1], [0.2, 0.8]]),
    }
    violations = validate(CategoricalBN(bn.dag, {"A": 2, "B": 2}, bad))
    assert len(violations) == 1
    assert violations[0].node == "A" and violations[0].kind == "row-normalization"
    worse = {
        "A": np.array([[1.2, -0.2]]),
        "B": np.array([[0.9, 0.1], [0.2, 0.8]]),
    }
    kinds = {v.kind for v in validate(CategoricalBN(bn.dag, {"A": 2, "B": 2}, worse))}
    assert "value-range" in kinds


def test_validate_counts_perturbed_rows():
    rng = np.random.default_rng(31)
    bn = rand_bn(rng, 8, 0.3)
    tables = {v: bn.cpts[v].copy() for v in bn.node_ids}
    broken = 0
    for v in bn.node_ids:
        if rng.random() < 0.5:
            tables[v][0, 0] += 0.25
            broken += 1
    bn2 = CategoricalBN(bn.dag, dict(bn.cardinalities), tables)
    assert len(validate(bn2)) == broken


def test_joint_probability_two_factor_product():
    dag = Dag(("A", "B"), [("A", "B")])
    cpts = {
        "A": np.array([[0.7, 0.3]]),
        "B": np.array([[0.9, 0.1], [0.2, 0.8]]),
    }
    bn = CategoricalBN(dag, {"A": 2, "B": 2}, cpts)
    assert joint_probability(bn, {"A": 1, "B": 1}) == pytest.approx(0.3 * 0.8)
    assert joint_probability(bn, {"A": 1, "B": 1}) == pytest.approx(0.24)
    with pytest.raises(InvalidAssignmentError):
        joint_probability(bn, {"A": 1})
    with pytest.raises(InvalidAssignmentError):
        joint_probability(bn, {"A": 1, "B": 2})


def test_joint_probability_uniform_network():
    rng = np.random.default_rng(5)
    dag = Dag(("a", "b", "c"), [("a", "b"), ("a", "c")])
    c = 3
    cpts = {
        "a": np.full((1, c), 1.0 / c),
        "b": np.full((c, c), 1.0 / c),
        "c": np.full((c, c), 1.0 / c),
    }
    bn = CategoricalBN(dag, {v: c for v in "abc"}, cpts)
    for _ in range(5):
        x = {v: int(rng.integers(c)) for v in "abc"}
        assert joint_probability(bn, x) == pytest.approx(c ** -3.0)


def test_joint_probability_against_lookup_loop():
    rng = np.random.default_rng(77)
    for _ in range(10):
        bn = rand_bn(rng, 7, 0.35)
        x = {v: int(rng.integers(bn.cardinalities[v])) for v in bn.node_ids}
        expected = 1.0
        for v in bn.node_ids:
            row = 0
            for p, stride in zip(bn.dag.parents(v), bn.parent_strides(v)):
                row += stride * x[p]
            expected *= float(bn.cpts[v][row, x[v]])
        assert joint_probability(bn, x) == pytest.approx(expected, rel=1e-12)
        assert log_joint_probability(bn, x) == pytest.approx(math.log(expected), rel=1e-12)


def test_joint_sums_to_one():
    rng = np.random.default_rng(13)
    bn = rand_bn(rng, 6, 0.4, cards=(2,))
    total = sum(
        joint_probability(bn, dict(zip(bn.node_ids, combo)))
        for combo in itertools.product(*(range(2) for _ in bn.node_ids))
    )
    assert total == pytest.approx(1.0, abs=1e-12)


def test_enumerate_marginal_edges():
    bn = two_node()
    assert enumerate_marginal(bn, {}) == pytest.approx(1.0, abs=1e-12)
    full = {"A": 1, "B": 0}
    assert enumerate_marginal(bn, full) == pytest.approx(joint_probability(bn, full))
    s = sum(enumerate_marginal(bn, {"A": k}) for k in range(2))
    assert s == pytest.approx(1.0, abs=1e-12)


def test_enumerate_marginal_matches_brute_force():
    rng = np.random.default_rng(101)
    for _ in range(15):
        bn = rand_bn(rng, 7, 0.3)
        e = rand_evidence(rng, bn, int(rng.integers(1, 5)))
        assert enumerate_marginal(bn, e) == pytest.approx(brute_marginal(bn, e), rel=1e-10)


def test_enumerate_marginal_consistency_properties():
    rng = np.random.default_rng(55)
    bn = rand_bn(rng, 6, 0.3)
    e = rand_evidence(rng, bn, 2)
    base = enumerate_marginal(bn, e)
    v = next(u for u in bn.node_ids if u not in e)
    total = 0.0
    for s in range(bn.cardinalities[v]):
        extended = dict(e)
        extended[v] = s
        p = enumerate_marginal(bn, extended)
        assert p <= base + 1e-12  # extension never increases probability
        total += p
    assert total == pytest.approx(base, rel=1e-10)


def test_enumerate_marginal_capacity():
    rng = np.random.default_rng(3)
    bn = rand_bn(rng, 30, 0.1, cards=(2,))
    with pytest.raises(CapacityError):
        log_enumerate_marginal(bn, {})
    # tightening the cap fails small networks too
    small = rand_bn(rng, 6, 0.3, cards=(2,))
    with pytest.raises(CapacityError):
        log_enumerate_marginal(small, {}, bits_cap=3.0)


def test_evidence_validation():
    bn = two_node()
    with pytest.raises(InvalidAssignmentError):
        enumerate_marginal(bn, {"A": 2})
    with pytest.raises(InvalidAssignmentError):
        enumerate_marginal(bn, {"Z": 0})
    with pytest.raises(InvalidAssignmentError):
        enumerate_marginal(bn, {"A": True})


def test_sample_forward_deterministic_cpts():
    dag = Dag(("A", "B"), [("A", "B")])
    cpts = {
        "A": np.array([[0.0, 1.0]]),
        "B": np.array([[1.0, 0.0], [0.0, 1.0]]),  # copies A
    }
    bn = CategoricalBN(dag, {"A": 2, "B": 2}, cpts)
    for x in sample_forward(bn, 20, seed=4):
        assert x == {"A": 1, "B": 1}


def test_sample_forward_determinism():
    rng = np.random.default_rng(17)
    bn = rand_bn(rng, 8, 0.3)
    assert sample_forward(bn, 25, seed=9) == sample_forward(bn, 25, seed=9)
    assert sample_forward(bn, 25, seed=9) != sample_forward(bn, 25, seed=10)


def test_sample_forward_frequency_matches_joint():
    rng = np.random.default_rng(21)
    bn = rand_bn(rng, 3, 0.5, cards=(2,))
    target = {v: 0 for v in bn.node_ids}
    p = joint_probability(bn, target)
    n = 100_000
    arr = sample_forward_array(bn, n, np.random.default_rng(1234))
    hits = int(np.sum(np.all(arr == 0, axis=1)))
    sigma = math.sqrt(n * p * (1 - p))
    assert abs(hits - n * p) < 3 * sigma
