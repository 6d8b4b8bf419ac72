"""Samplers for the three theory variants.

``run_sequential``
    the causal variant: draw, kick, apply gates, read out, never reject.
``run_rejection``
    the finite-tolerance retro-causal variant: trials are post-selected on
    every wire landing in a measurement window.
``exact_limit_distribution``
    the vanishing-parameter limit, available for the three paired example
    circuits, where it equals the quantum distribution.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import circuits
from .conditional import ConditionalSampler
from .distribution import OutcomeDistribution
from .hvmodel import HVModel, affine_form, bits_to_index, propagate, readout
from .metrics import additive_error, additive_error_radius
from .qsim import outcome_distribution
from .rng import PILOT_STREAM, split_evenly, stream

SCHEMA_VERSION = 1
DEFAULT_TRIALS_PER_ACCEPT = 10**7
BATCH = 1 << 15


class StarvationError(RuntimeError):
    """No trial was accepted before the trial budget ran out."""

    def __init__(self, report: "RunReport"):
        super().__init__(
            f"no accepted samples after {report.rejected} trials (seed {report.seed})"
        )
        self.report = report


@dataclass
class RunReport:
    accepted: int
    rejected: int
    distribution: OutcomeDistribution | None
    seed: int
    workers: int = 1
    method: str = "sequential"
    proposals: int = 0
    bound: float | None = None
    restarts: int = 0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return self.accepted + self.rejected

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.trials if self.trials else 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "accepted": self.accepted,
            "rejected": self.rejected,
            "acceptance_rate": self.acceptance_rate,
            "seed": self.seed,
            "workers": self.workers,
            "method": self.method,
            "proposals": self.proposals,
            "bound": self.bound,
            "restarts": self.restarts,
            "distribution": self.distribution.to_dict() if self.distribution else None,
        }
        d.update(self.extra)
        if include_timing:
            d["wall_time"] = self.wall_time
        return d

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"


def _parallel(fn: Callable[[int], object], workers: int) -> list:
    if workers == 1:
        return [fn(0)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(workers)))


# ---------------------------------------------------------------- causal variant


def run_sequential(model: HVModel, rng_seed: int, n_samples: int, workers: int = 1) -> RunReport:
    """Sample the model with its measurement constraint removed."""
    if model.measurement.constrained:
        raise ValueError("run_sequential needs an unconstrained measurement (causal variant)")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    t0 = time.perf_counter()

    def work(w: int) -> np.ndarray:
        counts = np.zeros(2**model.n_wires, dtype=np.int64)
        n_w = split_evenly(n_samples, workers)[w]
        for b, start in enumerate(range(0, n_w, BATCH)):
            rng = stream(rng_seed, w, b)
            angles = propagate(model, rng, min(BATCH, n_w - start))
            bits, _ = readout(angles, model.measurement)
            counts += np.bincount(bits_to_index(bits), minlength=counts.size)
        return counts

    counts = sum(_parallel(work, workers))
    dist = OutcomeDistribution.from_counts(counts, model.n_wires)
    return RunReport(n_samples, 0, dist, rng_seed, workers, "sequential",
                     wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------- retro-causal variant


@dataclass
class _WorkerResult:
    counts: np.ndarray
    accepted: int
    trials: int
    proposals: int
    violated: bool = False
    peak: float = 0.0


def _budget_cut(gaps: np.ndarray, acc: np.ndarray, need: int, budget: int):
    """Consume proposals in order; returns (n_used, accepted, trials_used)."""
    cum = np.cumsum(gaps)
    within = cum <= budget
    acc_within = acc & within
    cum_acc = np.cumsum(acc_within)
    if need > 0 and cum_acc.size and cum_acc[-1] >= need:
        last = int(np.searchsorted(cum_acc, need))
        return last + 1, need, int(cum[last])
    if within.all():
        return gaps.size, int(acc_within.sum()), int(cum[-1]) if cum.size else 0
    # budget runs out inside the gap before the first proposal past it
    return int(within.sum()), int(acc_within.sum()), budget


def _brute_worker(model, seed, w, restart, target, budget) -> _WorkerResult:
    counts = np.zeros(2**model.n_wires, dtype=np.int64)
    accepted = trials = 0
    b = 0
    while accepted < target and trials < budget:
        rng = stream(seed, w, restart, b)
        n = int(min(BATCH, budget - trials))
        bits, ok = readout(propagate(model, rng, n), model.measurement)
        gaps = np.ones(n, dtype=np.int64)
        used, acc, t = _budget_cut(gaps, ok, target - accepted, budget - trials)
        idx = bits_to_index(bits[:used][ok[:used]])
        counts += np.bincount(idx, minlength=counts.size)
        accepted += acc
        trials += t
        b += 1
    return _WorkerResult(counts, accepted, trials, trials)


def _conditional_worker(sampler: ConditionalSampler, seed, w, restart, target, budget, bound) -> _WorkerResult:
    counts = np.zeros(2**sampler.n_wires, dtype=np.int64)
    accepted = trials = proposals = 0
    b = 0
    while accepted < target and trials < budget:
        rng = stream(seed, w, restart, b)
        batch = sampler.propose(rng, BATCH)
        peak = float(batch.ratio.max())
        if peak > bound:
            return _WorkerResult(counts, accepted, trials, proposals, violated=True, peak=peak)
        acc = rng.uniform(size=BATCH) * bound < batch.ratio
        gaps = rng.geometric(bound, size=BATCH)
        used, n_acc, t = _budget_cut(gaps, acc, target - accepted, budget - trials)
        counts += np.bincount(batch.outcomes[:used][acc[:used]], minlength=counts.size)
        accepted += n_acc
        trials += t
        proposals += used
        b += 1
    return _WorkerResult(counts, accepted, trials, proposals)


def estimate_bound(sampler: ConditionalSampler, seed: int, n_batches: int = 4, safety: float = 4.0) -> float:
    """Pilot estimate of the largest target/proposal ratio, times a safety factor."""
    peak = 0.0
    for b in range(n_batches):
        peak = max(peak, float(sampler.propose(stream(seed, PILOT_STREAM, b), BATCH).ratio.max()))
    if peak == 0.0:
        return 1.0
    return min(1.0, safety * peak)


def run_rejection(
    model: HVModel,
    rng_seed: int,
    n_accepted_target: int,
    max_trials: int | None = None,
    *,
    workers: int = 1,
    method: str = "auto",
    max_restarts: int = 8,
) -> RunReport:
    """Post-selected sampling until ``n_accepted_target`` trials are accepted.

    ``method="brute"`` simulates every trial.  ``method="conditional"``
    draws the accepted trials directly (see :mod:`hvlab.conditional`) and
    reproduces the same joint law of outcomes and accepted/rejected counts;
    ``"auto"`` picks it whenever the model compiles to an affine form.

    ``max_trials`` defaults to ``1e7`` trials per requested sample.  Running
    out of budget with some acceptances returns a short report; with none
    it raises :class:`StarvationError`.
    """
    m = model.measurement
    if not m.constrained or m.tolerance <= 0:
        raise ValueError("run_rejection needs a constrained measurement with tolerance > 0")
    if n_accepted_target < 1:
        raise ValueError("n_accepted_target must be >= 1")
    if max_trials is None:
        max_trials = DEFAULT_TRIALS_PER_ACCEPT * n_accepted_target
    form = affine_form(model) if method in ("auto", "conditional") else None
    if method == "conditional" and form is None:
        raise ValueError("model has a non-linear gate; use method='brute'")
    if method not in ("auto", "brute", "conditional"):
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    targets = split_evenly(n_accepted_target, workers)
    budgets = split_evenly(max_trials, workers)

    bound = None
    restarts = 0
    if form is not None:
        sampler = ConditionalSampler(form, m)
        bound = estimate_bound(sampler, rng_seed)
        while True:
            results = _parallel(
                lambda w: _conditional_worker(sampler, rng_seed, w, restarts, targets[w], budgets[w], bound),
                workers,
            )
            if not any(r.violated for r in results):
                break
            if bound >= 1.0 or restarts >= max_restarts:
                # cannot represent a proposal as at most one trial; simulate instead
                form = None
                break
            restarts += 1
            bound = min(1.0, 4 * max(bound, max(r.peak for r in results)))
    if form is None:
        bound = None
        results = _parallel(
            lambda w: _brute_worker(model, rng_seed, w, restarts, targets[w], budgets[w]), workers
        )
        used = "brute"
    else:
        used = "conditional"

    counts = sum(r.counts for r in results)
    accepted = sum(r.accepted for r in results)
    trials = sum(r.trials for r in results)
    report = RunReport(
        accepted, trials - accepted, None, rng_seed, workers, used,
        proposals=sum(r.proposals for r in results), bound=bound, restarts=restarts,
        wall_time=time.perf_counter() - t0,
    )
    if accepted == 0:
        raise StarvationError(report)
    report.distribution = OutcomeDistribution.from_counts(counts, model.n_wires)
    return report


# ---------------------------------------------------------------- limits and sweeps


def exact_limit_distribution(circuit_id: str, **angles: float) -> OutcomeDistribution:
    """Vanishing-parameter limit of a supported paired circuit.

    The limit is pinned to the paired quantum circuit's distribution; no
    general evaluator is attempted.
    """
    if circuit_id not in circuits.BUILDERS:
        raise ValueError(f"no exact limit for circuit {circuit_id!r}; supported: {sorted(circuits.BUILDERS)}")
    pair = circuits.build(circuit_id, deltas=(1e-3, 1e-3, 1e-3), **angles)
    return outcome_distribution(pair.quantum, pair.input_bits)


Deltas = tuple[float, float, float]


@dataclass
class SweepRow:
    deltas: Deltas
    accepted: int
    rejected: int
    additive_error: float
    additive_error_ci95: float
    status: str = "ok"

    @property
    def acceptance_rate(self) -> float:
        total = self.accepted + self.rejected
        return self.accepted / total if total else 0.0


SWEEP_COLUMNS = [
    "delta_phi_L", "delta_phi_M", "delta_alpha", "accepted", "rejected",
    "acceptance_rate", "additive_error", "additive_error_ci95", "status", "schema_version",
]


def _check_schedule(schedule: Sequence[Deltas]) -> None:
    if not schedule:
        raise ValueError("delta schedule is empty")
    for prev, cur in zip(schedule, schedule[1:]):
        if not all(c < p for c, p in zip(cur, prev)):
            raise ValueError(f"schedule must decrease strictly in every component: {prev} -> {cur}")
    for d in schedule:
        if len(d) != 3 or not all(x > 0 for x in d):
            raise ValueError(f"each schedule point needs three positive deltas, got {d}")


def convergence_sweep(
    model_family: Callable[[Deltas], "circuits.CircuitPair"],
    delta_schedule: Sequence[Deltas],
    rng_seed: int,
    n_accepted: int,
    *,
    max_trials: int | None = None,
    workers: int = 1,
    method: str = "auto",
) -> list[SweepRow]:
    """Rejection runs along a shrinking delta schedule, scored against the exact limit."""
    schedule = [tuple(float(x) for x in d) for d in delta_schedule]
    _check_schedule(schedule)
    rows = []
    for i, deltas in enumerate(schedule):
        pair = model_family(deltas)
        exact = outcome_distribution(pair.quantum, pair.input_bits)
        try:
            rep = run_rejection(pair.hv, rng_seed + i, n_accepted, max_trials, workers=workers, method=method)
        except StarvationError as exc:
            rows.append(SweepRow(deltas, 0, exc.report.rejected, math.nan, math.nan, "starved"))
            continue
        err = additive_error(rep.distribution, exact)
        status = "ok" if rep.accepted >= n_accepted else "short"
        rows.append(SweepRow(deltas, rep.accepted, rep.rejected, err,
                             additive_error_radius(rep.distribution), status))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow([
            repr(r.deltas[0]), repr(r.deltas[1]), repr(r.deltas[2]), r.accepted, r.rejected,
            repr(r.acceptance_rate), repr(r.additive_error), repr(r.additive_error_ci95),
            r.status, SCHEMA_VERSION,
        ])
    return buf.getvalue()


def write_sweep_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    Path(path).write_text(sweep_csv(rows))


def acceptance_slope(rows: Sequence[SweepRow], last: int = 3) -> float:
    """Log-log slope of acceptance rate against the measurement tolerance."""
    pts = [r for r in rows if r.accepted > 0][-last:]
    x = np.log([r.deltas[1] for r in pts])
    y = np.log([r.acceptance_rate for r in pts])
    return float(np.polyfit(x, y, 1)[0])


SCAN_COLUMNS = ["theta1", "theta2", "theta3", "theta4", "accepted", "rejected", "acceptance_rate",
                "additive_error", "additive_error_ci95", "status", "schema_version"]


def divergence_scan(
    angle_grid: Sequence[Sequence[float]],
    deltas,
    rng_seed: int,
    n_accepted: int,
    *,
    max_trials: int | None = None,
    workers: int = 1,
) -> str:
    """Per-setting agreement of the CNOT-trick model with its quantum pair, as CSV.

    Purely informational: no threshold is applied to any row.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for i, thetas in enumerate(angle_grid):
        pair = circuits.build_double_bell_cnot(thetas, deltas)
        exact = outcome_distribution(pair.quantum, pair.input_bits)
        try:
            rep = run_rejection(pair.hv, rng_seed + i, n_accepted, max_trials, workers=workers)
        except StarvationError as exc:
            writer.writerow([*map(repr, thetas), 0, exc.report.rejected, 0.0, "nan", "nan", "starved", SCHEMA_VERSION])
            continue
        writer.writerow([
            *map(repr, pair.params["thetas"]), rep.accepted, rep.rejected, repr(rep.acceptance_rate),
            repr(additive_error(rep.distribution, exact)), repr(additive_error_radius(rep.distribution, exact)),
            "ok" if rep.accepted >= n_accepted else "short", SCHEMA_VERSION,
        ])
    return buf.getvalue()
