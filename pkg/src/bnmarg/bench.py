"""Accuracy-versus-time benchmark over random networks.

For every generated instance the harness computes an exact reference value
(full junction tree, falling back to direct summation), then runs each
requested method at each sample budget for a fixed number of repetitions.
One result row aggregates the repetitions of one (instance, method, budget)
cell: the error column is the root mean squared deviation of the repeated
estimates from the reference, normalized by the reference, and the time
column is the mean wall-clock milliseconds per repetition.

Budgets are sample counts, not wall-time limits; measured time is recorded
next to them so accuracy-versus-time curves can still be plotted.  Every
repetition owns a seed derived from (instance seed, method, budget,
repetition index), so results do not depend on execution order.  Instances
whose reference value cannot be computed, and (instance, method) cells that
exceed capacity, are reported in the rejected list instead of producing rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import METHODS, SgsConfig, canonical_method, marginal
from .errors import CapacityError, DataFormatError
from .junction import DEFAULT_TABLE_CAP, log_full_junction_marginal
from .network import log_enumerate_marginal
from .randnet import GenSpec, gen_network, nrmse, pick_evidence
from .sampling import SamplerConfig

CSV_HEADER = ("family", "n", "C", "f", "S", "method", "budget", "wall_time_ms", "nrmse", "rep")

DEFAULT_METHODS = ("sgs", "lbp-is", "gs")
DEFAULT_BUDGETS = (1000,)
DEFAULT_REPETITIONS = 10


@dataclass(frozen=True)
class BenchRow:
    """One (instance, method, budget) cell, aggregated over repetitions."""

    family: str
    n: int
    categories: int
    evidence_fraction: float
    mb_size: float
    method: str
    budget: int
    wall_time_ms: float
    nrmse: float
    repetitions: int


@dataclass(frozen=True)
class BenchRejection:
    spec: GenSpec
    method: Optional[str]  # None when the reference itself was infeasible
    reason: str


@dataclass(frozen=True)
class BenchResult:
    rows: tuple
    rejected: tuple


def _reference_log(bn, evidence, table_cap: int) -> float:
    try:
        return log_full_junction_marginal(bn, evidence, table_cap)
    except CapacityError:
        return log_enumerate_marginal(bn, evidence)


def _rep_seed(spec_seed: int, method_index: int, budget: int, rep: int) -> int:
    ss = np.random.SeedSequence(spec_seed, spawn_key=(3, method_index, budget, rep))
    return int(ss.generate_state(1, np.uint64)[0])


def run_benchmark(
    specs: Sequence[GenSpec],
    methods: Sequence[str] = DEFAULT_METHODS,
    budgets: Sequence[int] = DEFAULT_BUDGETS,
    repetitions: int = DEFAULT_REPETITIONS,
    n_max: int = 15,
    table_cap: int = DEFAULT_TABLE_CAP,
) -> BenchResult:
    if repetitions < 1:
        raise DataFormatError("repetitions must be at least 1")
    if not budgets or any(int(b) < 1 for b in budgets):
        raise DataFormatError("budgets must be positive sample counts")
    names = [canonical_method(m) for m in methods]
    if not names:
        raise DataFormatError("no methods requested")

    rows = []
    rejected = []
    for spec in specs:
        bn = gen_network(spec)
        ev_seed = int(
            np.random.SeedSequence(spec.seed, spawn_key=(2,)).generate_state(1, np.uint64)[0]
        )
        evidence = pick_evidence(bn, spec.evidence_fraction, ev_seed)
        try:
            truth = math.exp(_reference_log(bn, evidence, table_cap))
        except CapacityError as exc:
            rejected.append(BenchRejection(spec, None, f"reference infeasible: {exc}"))
            continue
        if truth <= 0.0:
            rejected.append(
                BenchRejection(spec, None, "reference value underflowed to zero")
            )
            continue

        for method in names:
            mi = METHODS.index(method)
            for budget in budgets:
                budget = int(budget)
                estimates = []
                elapsed_ms = []
                try:
                    for rep in range(repetitions):
                        cfg = SgsConfig(
                            n_max=n_max,
                            sampler=SamplerConfig(
                                sample_count=budget,
                                seed=_rep_seed(spec.seed, mi, budget, rep),
                            ),
                            table_cap=table_cap,
                        )
                        t0 = time.perf_counter()
                        est = marginal(bn, evidence, method=method, cfg=cfg)
                        elapsed_ms.append((time.perf_counter() - t0) * 1000.0)
                        estimates.append(est.value)
                except CapacityError as exc:
                    rejected.append(BenchRejection(spec, method, str(exc)))
                    continue
                rows.append(
                    BenchRow(
                        family=spec.family,
                        n=spec.n,
                        categories=spec.categories,
                        evidence_fraction=spec.evidence_fraction,
                        mb_size=spec.mb_size,
                        method=method,
                        budget=budget,
                        wall_time_ms=float(np.mean(elapsed_ms)),
                        nrmse=nrmse(truth, estimates),
                        repetitions=repetitions,
                    )
                )
    return BenchResult(rows=tuple(rows), rejected=tuple(rejected))


def rows_to_csv(rows: Iterable[BenchRow]) -> str:
    """Serialize rows; floats keep full precision so parsing them back is exact."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(
            [
                r.family,
                r.n,
                r.categories,
                repr(float(r.evidence_fraction)),
                repr(float(r.mb_size)),
                r.method,
                r.budget,
                repr(float(r.wall_time_ms)),
                repr(float(r.nrmse)),
                r.repetitions,
            ]
        )
    return out.getvalue()


def rows_from_csv(text: str):
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty benchmark table") from None
    if tuple(header) != CSV_HEADER:
        raise DataFormatError(
            f"unexpected benchmark header {header!r}, expected {list(CSV_HEADER)}"
        )
    rows = []
    for ln, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(CSV_HEADER):
            raise DataFormatError(f"line {ln}: expected {len(CSV_HEADER)} fields, got {len(rec)}")
        try:
            rows.append(
                BenchRow(
                    family=rec[0],
                    n=int(rec[1]),
                    categories=int(rec[2]),
                    evidence_fraction=float(rec[3]),
                    mb_size=float(rec[4]),
                    method=rec[5],
                    budget=int(rec[6]),
                    wall_time_ms=float(rec[7]),
                    nrmse=float(rec[8]),
                    repetitions=int(rec[9]),
                )
            )
        except ValueError as exc:
            raise DataFormatError(f"line {ln}: {exc}") from None
    return tuple(rows)


def rows_to_gnuplot(rows: Iterable[BenchRow]) -> str:
    """Tab-separated variant with a commented header line."""
    lines = ["# " + "\t".join(CSV_HEADER)]
    for r in rows:
        lines.append(
            "\t".join(
                [
                    r.family,
                    str(r.n),
                    str(r.categories),
                    repr(float(r.evidence_fraction)),
                    repr(float(r.mb_size)),
                    r.method,
                    str(r.budget),
                    repr(float(r.wall_time_ms)),
                    repr(float(r.nrmse)),
                    str(r.repetitions),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def load_bench_file(text: str):
    """Parse a benchmark description (JSON).

    Shape: {"specs": [{...generator fields...}, ...],
            "methods": [...], "budgets": [...], "repetitions": int}
    with methods/budgets/repetitions optional.  Generator fields are the
    GenSpec constructor arguments; family/n/mb_size are required.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"benchmark file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or "specs" not in doc:
        raise DataFormatError('benchmark file needs a top-level "specs" list')
    unknown_top = set(doc) - {"specs", "methods", "budgets", "repetitions"}
    if unknown_top:
        raise DataFormatError(f"benchmark file has unknown fields {sorted(unknown_top)}")
    raw_specs = doc["specs"]
    if not isinstance(raw_specs, list) or not raw_specs:
        raise DataFormatError('"specs" must be a non-empty list')
    specs = []
    for i, entry in enumerate(raw_specs):
        if not isinstance(entry, dict):
            raise DataFormatError(f"specs[{i}] must be an object")
        allowed = {
            "family",
            "n",
            "mb_size",
            "categories",
            "evidence_fraction",
            "seed",
            "islands",
            "rewire_prob",
        }
        unknown = set(entry) - allowed
        if unknown:
            raise DataFormatError(f"specs[{i}] has unknown fields {sorted(unknown)}")
        missing = {"family", "n", "mb_size"} - set(entry)
        if missing:
            raise DataFormatError(f"specs[{i}] is missing fields {sorted(missing)}")
        specs.append(GenSpec(**entry))
    methods = tuple(doc.get("methods", DEFAULT_METHODS))
    budgets = tuple(int(b) for b in doc.get("budgets", DEFAULT_BUDGETS))
    repetitions = int(doc.get("repetitions", DEFAULT_REPETITIONS))
    return specs, methods, budgets, repetitions
