"""Monte Carlo simulation of one job under delayed replicated or coded redundancy.

Draw layout: replication ``r`` reads the uniform stream ``(seed, r)``.
Counter positions ``0..k-1`` hold the original tasks. Redundant tasks follow
at ``k + i*c + j`` (replica ``j`` of task ``i``) or ``k + p`` (parity ``p``).
These slots are reserved whether or not the redundancy launches, so
replication ``r`` sees the same task times for every delta and redundancy
level (common random numbers across a sweep).

``run_once`` walks the events of a single replication and keeps full task
records. ``estimate`` evaluates the same model in closed vectorized form over
blocks of replications. The two are cross-checked in the test suite.
"""

from __future__ import annotations

import csv
import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .dists import RngState, counter_uniforms
from .model import Replicated, SystemConfig

CHUNK_SIZE = 8192
TRACE_COLUMNS = ("replication", "kind", "parent", "start", "own_finish", "end", "cancelled")


@dataclass
class TaskRecord:
    kind: str  # "original" | "replica" | "parity"
    parent: Optional[int]
    start: float
    own_finish: float
    end: Optional[float] = None
    cancelled: bool = False


@dataclass
class JobTrace:
    records: list
    job_completion: float
    cost_cancel: float
    cost_nocancel: float


@dataclass(frozen=True)
class SimEstimate:
    mean_latency: float
    mean_cost_cancel: float
    mean_cost_nocancel: float
    se_latency: float
    se_cost_cancel: float
    se_cost_nocancel: float
    replications: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def draw_slots(config: SystemConfig) -> int:
    """Number of uniforms one replication consumes."""
    if isinstance(config.scheme, Replicated):
        return config.k * (1 + config.scheme.c)
    return config.scheme.n


def _run_events(records: list, groups: Sequence[Optional[int]], needed: int) -> float:
    """Process completions in time order; return the job completion time.

    ``groups[i]`` is the logical task of record ``i`` (None for parities,
    each of which is its own task). The job finishes after ``needed`` distinct
    task completions. Copies of a finished task are cancelled at once.
    """
    siblings: dict = {}
    for idx, g in enumerate(groups):
        if g is not None:
            siblings.setdefault(g, []).append(idx)
    events = [(rec.own_finish, idx) for idx, rec in enumerate(records)]
    heapq.heapify(events)
    done = 0
    completion = math.nan
    while events:
        t, idx = heapq.heappop(events)
        rec = records[idx]
        if rec.end is not None:
            continue
        rec.end = t
        g = groups[idx]
        for sib in siblings.get(g, ()) if g is not None else ():
            if records[sib].end is None:
                records[sib].end = t
        done += 1
        if done == needed:
            completion = t
            break
    for rec in records:
        if rec.end is None:
            rec.end = completion
    for rec in records:
        rec.cancelled = rec.end < rec.own_finish
    return completion


def trace_from_samples(
    config: SystemConfig, originals: Sequence[float], redundant: Sequence[float] = ()
) -> JobTrace:
    """Simulate one job from given task times.

    ``redundant`` lists execution times of potential replicas (task-major,
    ``c`` per task) or parities (``n - k`` of them); entries for tasks that
    never launch are ignored.
    """
    k, delta = config.k, config.delta
    originals = [float(x) for x in originals]
    redundant = [float(y) for y in redundant]
    if len(originals) != k:
        raise ValueError(f"expected {k} original task times, got {len(originals)}")
    records = [TaskRecord("original", i, 0.0, x) for i, x in enumerate(originals)]
    groups: list = list(range(k))

    if isinstance(config.scheme, Replicated):
        c = config.scheme.c
        if len(redundant) != k * c:
            raise ValueError(f"expected {k * c} replica times, got {len(redundant)}")
        # a task finishing exactly at delta counts as done before launch
        for i, x in enumerate(originals):
            if x > delta:
                for j in range(c):
                    records.append(TaskRecord("replica", i, delta, delta + redundant[i * c + j]))
                    groups.append(i)
    else:
        n_par = config.scheme.n - k
        if len(redundant) != n_par:
            raise ValueError(f"expected {n_par} parity times, got {len(redundant)}")
        if max(originals) > delta:
            for y in redundant:
                records.append(TaskRecord("parity", None, delta, delta + y))
                groups.append(None)

    completion = _run_events(records, groups, k)
    return JobTrace(
        records=records,
        job_completion=completion,
        cost_cancel=sum(r.end - r.start for r in records),
        cost_nocancel=sum(r.own_finish - r.start for r in records),
    )


def run_once(config: SystemConfig, rng: RngState) -> JobTrace:
    """Simulate one job, drawing all task times from ``rng``."""
    draws = config.dist.sample(rng, draw_slots(config))
    return trace_from_samples(config, draws[: config.k], draws[config.k :])


def _block(config: SystemConfig, seed: int, start: int, stop: int) -> np.ndarray:
    """Per-replication (latency, cost_cancel, cost_nocancel) for a range of streams."""
    k, delta = config.k, config.delta
    streams = np.arange(start, stop, dtype=np.uint64)[:, None]
    slots = np.arange(draw_slots(config), dtype=np.uint64)[None, :]
    times = config.dist.from_uniform(counter_uniforms(seed, streams, slots))
    x = times[:, :k]
    y = times[:, k:]
    out = np.empty((stop - start, 3))

    if isinstance(config.scheme, Replicated):
        c = config.scheme.c
        launched = x > delta
        if c > 0:
            y = y.reshape(-1, k, c)
            finish = np.where(launched, np.minimum(x, delta + y.min(axis=2)), x)
            replica_life = np.where(launched, finish - delta, 0.0)
            out[:, 2] = x.sum(axis=1) + np.where(launched[..., None], y, 0.0).sum(axis=(1, 2))
        else:
            finish = x
            replica_life = np.zeros_like(x)
            out[:, 2] = x.sum(axis=1)
        out[:, 0] = finish.max(axis=1)
        out[:, 1] = finish.sum(axis=1) + c * replica_life.sum(axis=1)
    else:
        x_max = x.max(axis=1)
        early = x_max <= delta
        if y.shape[1]:
            parity = delta + y
            all_times = np.concatenate([x, parity], axis=1)
            kth = np.partition(all_times, k - 1, axis=1)[:, k - 1]
            t = np.where(early, x_max, kth)
            tc = t[:, None]
            cancel = np.minimum(x, tc).sum(axis=1) + (np.minimum(parity, tc) - delta).sum(axis=1)
            out[:, 0] = t
            out[:, 1] = np.where(early, x.sum(axis=1), cancel)
            out[:, 2] = x.sum(axis=1) + np.where(early, 0.0, y.sum(axis=1))
        else:
            out[:, 0] = x_max
            out[:, 1] = x.sum(axis=1)
            out[:, 2] = out[:, 1]
    return out


def _block_args(args):
    return _block(*args)


def simulate_arrays(
    config: SystemConfig,
    replications: int,
    seed: int,
    parallel: int = 1,
    chunk_size: int = CHUNK_SIZE,
) -> np.ndarray:
    """Array of shape (replications, 3): latency, cost_cancel, cost_nocancel."""
    bounds = [(s, min(s + chunk_size, replications)) for s in range(0, replications, chunk_size)]
    jobs = [(config, seed, a, b) for a, b in bounds]
    if parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            parts = list(pool.map(_block_args, jobs))
    else:
        parts = [_block_args(j) for j in jobs]
    return np.concatenate(parts, axis=0)


def estimate(
    config: SystemConfig, replications: int, seed: int, parallel: int = 1
) -> SimEstimate:
    """Means and standard errors over ``replications`` independent jobs.

    Replication ``r`` uses stream ``(seed, r)``, so the result is identical
    for every ``parallel`` setting.
    """
    if replications < 2:
        raise ValueError("at least 2 replications are needed for standard errors")
    data = simulate_arrays(config, replications, seed, parallel=parallel)
    means = data.mean(axis=0)
    ses = data.std(axis=0, ddof=1) / math.sqrt(replications)
    return SimEstimate(
        mean_latency=float(means[0]),
        mean_cost_cancel=float(means[1]),
        mean_cost_nocancel=float(means[2]),
        se_latency=float(ses[0]),
        se_cost_cancel=float(ses[1]),
        se_cost_nocancel=float(ses[2]),
        replications=replications,
        seed=seed,
    )


def iter_traces(config: SystemConfig, seed: int, replications: int) -> Iterable[tuple]:
    for r in range(replications):
        yield r, run_once(config, RngState(seed, r))


def write_trace_csv(traces: Iterable[tuple], fh: IO[str]) -> None:
    """One CSV row per task record; ``traces`` yields (replication, JobTrace)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rep, trace in traces:
        for rec in trace.records:
            parent = "" if rec.parent is None else rec.parent
            writer.writerow(
                [rep, rec.kind, parent, repr(rec.start), repr(rec.own_finish), repr(rec.end), int(rec.cancelled)]
            )
