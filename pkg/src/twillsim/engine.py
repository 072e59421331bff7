"""Discrete-event core: the control protocol, task accounting, and traces.

The simulation advances through decide cycles.  Each cycle is triggered
by controller-visible events at one timestamp (request arrivals, or
clusters freed by completions).  The policy returns mapping decisions
(MAP / MIGRATE / FREEZE / UNFREEZE); the engine applies them, samples
platform power before and after, and then gives the policy's frequency
governor one chance to adjust GPU clocks (SET_FREQ) at the same
timestamp.

Control actions are not free: every (re)mapping holds the task for a
control overhead before execution resumes, migrations pay an extra
transfer charge and restart the task from its last completed segment
boundary, and a frozen task pays the freeze cost on both ends when it
is thawed.  Power follows occupancy instantly, including during those
actuation holds.
"""

from __future__ import annotations

import csv
import dataclasses
import heapq
import io
import json
from dataclasses import dataclass, field
from enum import Enum

from .hardware import (
    ClusterKind,
    ClusterState,
    PlatformSpec,
    initial_states,
    power_draw,
    set_frequency,
)
from .models import (
    AppProfile,
    CompatibilityMatrix,
    SignatureMap,
    layer_affinity,
    parse_model,
    segment_fractions,
)
from .workload import WorkloadScenario

CTRL_OVERHEAD_MS = 15.0
MIGRATION_OVERHEAD_MS = 30.0
FREEZE_OVERHEAD_MS = 10.0
# Slowdown applied to DLA-infeasible work when a whole model is pinned
# to the DLA and its unsupported layers fall back layer-by-layer.
DLA_FALLBACK_PENALTY = 8.0

_WORK_EPS = 1e-6


class EngineError(RuntimeError):
    """A protocol violation or an unrecoverable simulation state."""


class DecisionKind(Enum):
    MAP = "MAP"
    MIGRATE = "MIGRATE"
    FREEZE = "FREEZE"
    UNFREEZE = "UNFREEZE"
    SET_FREQ = "SET_FREQ"


class EventKind(Enum):
    ARRIVAL = "ARRIVAL"
    CLUSTER_FREED = "CLUSTER_FREED"


@dataclass(frozen=True)
class ControllerEvent:
    kind: EventKind
    request_id: str | None = None
    cluster_id: str | None = None


@dataclass(frozen=True)
class Decision:
    """One scheduling action.

    part/work_gflops/native support policies that split a request into
    separately-placed pieces: a MAP with a part label creates a task for
    just that slice of the request's work, and native marks a piece that
    runs on the DLA without any fallback penalty.
    """

    kind: DecisionKind
    request_id: str | None = None
    cluster_id: str | None = None
    level: int | None = None
    part: str | None = None
    work_gflops: float | None = None
    native: bool = False


class TaskState(Enum):
    PENDING = "pending"
    RUNNING = "running"
    FROZEN = "frozen"
    DONE = "done"


@dataclass(frozen=True)
class TaskView:
    """Read-only snapshot of one task, as shown to policies."""

    key: str
    request_id: str
    part: str | None
    model: str
    priority: int
    state: TaskState
    cluster_id: str | None
    started: bool
    work_gflops: float
    done_gflops: float
    arrival_ms: float
    preferred_kinds: tuple[str, ...]
    dla_fraction: float
    native: bool

    @property
    def remaining_gflops(self) -> float:
        return max(0.0, self.work_gflops - self.done_gflops)


@dataclass(frozen=True)
class ControllerView:
    """Snapshot handed to a policy at each decide cycle."""

    now: float
    platform: PlatformSpec
    states: dict[str, ClusterState]
    tasks: dict[str, TaskView]
    dla_fallback_penalty: float

    def cluster_kind(self, cluster_id: str) -> ClusterKind:
        return self.platform.cluster(cluster_id).kind

    def free_clusters(self) -> list[str]:
        return [cid for cid, st in self.states.items() if st.occupant is None]

    def occupant(self, cluster_id: str) -> TaskView | None:
        key = self.states[cluster_id].occupant
        return self.tasks[key] if key is not None else None

    def exec_rate(self, task_key: str, cluster_id: str) -> float:
        """Effective GFLOP/s for the task on that cluster at its current
        frequency level (fallback penalty included for whole models on
        the DLA)."""
        task = self.tasks[task_key]
        state = self.states[cluster_id]
        return effective_rate(state, task.dla_fraction, task.native,
                              self.dla_fallback_penalty)


def effective_rate(state: ClusterState, dla_fraction: float, native: bool,
                   penalty: float) -> float:
    """GFLOP/s the cluster delivers for a task at the current level."""
    thr = state.throughput
    if state.spec.kind is ClusterKind.GPU:
        return thr
    if native:
        return thr
    # whole model on the DLA: infeasible layers fall back with a penalty
    return thr / (dla_fraction + (1.0 - dla_fraction) * penalty)


class Policy:
    """Scheduling policy interface.

    decide() maps work in response to arrivals and freed clusters;
    dvfs_update() is the frequency governor, called once per cycle after
    mapping decisions are applied, with power samples from before and
    after.  Mapping decisions are only valid from decide(), SET_FREQ
    only from dvfs_update().
    """

    name = "policy"

    def decide(self, view: ControllerView,
               events: list[ControllerEvent]) -> list[Decision]:
        return []

    def dvfs_update(self, view: ControllerView, p_before_mw: float,
                    p_after_mw: float, handled_events: int) -> list[Decision]:
        return []


# ---------------------------------------------------------------------------
# trace records


@dataclass(frozen=True)
class DecisionRecord:
    time_ms: float
    kind: str
    request_id: str | None
    part: str | None
    cluster_id: str | None
    level: int | None
    freq_mhz: float | None


@dataclass(frozen=True)
class RequestRecord:
    request_id: str
    model: str
    priority: int
    arrival_ms: float
    first_map_ms: float | None
    completed_ms: float | None
    waiting_ms: float | None
    latency_ms: float | None
    work_gflops: float


@dataclass(frozen=True)
class PowerRecord:
    time_ms: float
    power_mw: float
    freqs_mhz: tuple[float, ...]
    utils: tuple[float, ...]


@dataclass
class Trace:
    scenario: str
    policy: str
    platform: str
    tdp_mw: float
    cluster_ids: tuple[str, ...]
    decisions: list[DecisionRecord] = field(default_factory=list)
    requests: list[RequestRecord] = field(default_factory=list)
    power: list[PowerRecord] = field(default_factory=list)

    @property
    def makespan_ms(self) -> float:
        done = [r.completed_ms for r in self.requests if r.completed_ms is not None]
        return max(done) if done else 0.0

    def _power_spans(self):
        """(duration_ms, power_mw) pieces clipped to [0, makespan]."""
        end = self.makespan_ms
        for rec, nxt in zip(self.power, self.power[1:] + [None]):
            t1 = nxt.time_ms if nxt is not None else end
            lo, hi = rec.time_ms, min(t1, end)
            if hi > lo:
                yield hi - lo, rec.power_mw

    @property
    def energy_mj(self) -> float:
        return sum(dt * p for dt, p in self._power_spans()) / 1000.0

    def time_over_budget_ms(self, eps: float = 1e-9) -> float:
        return sum(dt for dt, p in self._power_spans() if p > self.tdp_mw + eps)

    @property
    def violation_fraction(self) -> float:
        span = self.makespan_ms
        return self.time_over_budget_ms() / span if span > 0 else 0.0

    def decisions_at(self, time_ms: float, tol: float = 1e-6) -> list[DecisionRecord]:
        return [d for d in self.decisions if abs(d.time_ms - time_ms) <= tol]

    def power_samples(self, period_ms: float = 5.0) -> list[tuple[float, float]]:
        """Sample the piecewise-constant power profile at a fixed cadence
        over [0, makespan]."""
        if not self.power:
            return []
        end = self.makespan_ms
        samples = []
        idx = 0
        t = 0.0
        while t <= end:
            while idx + 1 < len(self.power) and self.power[idx + 1].time_ms <= t:
                idx += 1
            samples.append((t, self.power[idx].power_mw))
            t += period_ms
        return samples

    def waiting_by_priority(self) -> dict[int, dict[str, float]]:
        out: dict[int, dict[str, float]] = {}
        for prio in sorted({r.priority for r in self.requests}):
            waits = [r.waiting_ms for r in self.requests
                     if r.priority == prio and r.waiting_ms is not None]
            if waits:
                out[prio] = {
                    "avg_ms": sum(waits) / len(waits),
                    "max_ms": max(waits),
                    "count": len(waits),
                }
        return out

    def summary(self) -> dict:
        waits = [r.waiting_ms for r in self.requests if r.waiting_ms is not None]
        lats = [r.latency_ms for r in self.requests if r.latency_ms is not None]
        kinds: dict[str, int] = {}
        for d in self.decisions:
            kinds[d.kind] = kinds.get(d.kind, 0) + 1
        return {
            "scenario": self.scenario,
            "policy": self.policy,
            "platform": self.platform,
            "tdp_mw": self.tdp_mw,
            "makespan_ms": _r6(self.makespan_ms),
            "energy_mj": _r6(self.energy_mj),
            "time_over_budget_ms": _r6(self.time_over_budget_ms()),
            "violation_fraction": _r6(self.violation_fraction),
            "total_waiting_ms": _r6(sum(waits)) if waits else 0.0,
            "avg_waiting_ms": _r6(sum(waits) / len(waits)) if waits else 0.0,
            "max_waiting_ms": _r6(max(waits)) if waits else 0.0,
            "avg_latency_ms": _r6(sum(lats) / len(lats)) if lats else 0.0,
            "decision_counts": {k: kinds[k] for k in sorted(kinds)},
            "waiting_by_priority": {
                str(p): {k: _r6(v) for k, v in stats.items()}
                for p, stats in self.waiting_by_priority().items()
            },
            "requests": [
                {
                    "request_id": r.request_id,
                    "model": r.model,
                    "priority": r.priority,
                    "arrival_ms": _r6(r.arrival_ms),
                    "first_map_ms": _r6(r.first_map_ms),
                    "completed_ms": _r6(r.completed_ms),
                    "waiting_ms": _r6(r.waiting_ms),
                    "latency_ms": _r6(r.latency_ms),
                    "work_gflops": _r6(r.work_gflops),
                }
                for r in self.requests
            ],
        }


def _r6(x):
    return round(x, 6) if isinstance(x, float) else x


# ---------------------------------------------------------------------------
# internal task bookkeeping


@dataclass
class _Task:
    key: str
    request_id: str
    part: str | None
    profile: AppProfile
    signature: SignatureMap
    work: float
    arrival_ms: float = 0.0
    native: bool = False
    done: float = 0.0
    rolled_back: float = 0.0
    cluster_id: str | None = None
    frozen: bool = False
    frozen_on: str | None = None
    started: bool = False
    completed: bool = False
    resume_at: float = 0.0
    last_sync: float = 0.0
    epoch: int = 0
    first_map_ms: float | None = None
    completed_ms: float | None = None
    completion_residual: float = 0.0

    @property
    def state(self) -> TaskState:
        if self.completed:
            return TaskState.DONE
        if self.frozen:
            return TaskState.FROZEN
        if self.cluster_id is not None:
            return TaskState.RUNNING
        return TaskState.PENDING

    def view(self) -> TaskView:
        return TaskView(
            key=self.key,
            request_id=self.request_id,
            part=self.part,
            model=self.profile.name,
            priority=self.profile.priority,
            state=self.state,
            cluster_id=self.cluster_id,
            started=self.started,
            work_gflops=self.work,
            done_gflops=self.done,
            arrival_ms=self.arrival_ms,
            preferred_kinds=self.signature.preferred_clusters,
            dla_fraction=self.signature.dla_flops_fraction,
            native=self.native,
        )


_RANK_COMPLETION = 0
_RANK_ARRIVAL = 1


class Simulation:
    """One scenario run under one policy on one platform."""

    def __init__(self, platform: PlatformSpec, scenario: WorkloadScenario,
                 policy: Policy, descriptors: dict[str, str],
                 matrix: CompatibilityMatrix, *,
                 ctrl_overhead_ms: float = CTRL_OVERHEAD_MS,
                 migration_overhead_ms: float = MIGRATION_OVERHEAD_MS,
                 freeze_overhead_ms: float = FREEZE_OVERHEAD_MS,
                 dla_fallback_penalty: float = DLA_FALLBACK_PENALTY,
                 affinity_threshold: float | None = None,
                 max_time_ms: float = 1e7):
        self.platform = _apply_overrides(platform, scenario.platform_overrides)
        self.scenario = scenario
        self.policy = policy
        self.matrix = matrix
        self.ctrl_overhead_ms = ctrl_overhead_ms
        self.migration_overhead_ms = migration_overhead_ms
        self.freeze_overhead_ms = freeze_overhead_ms
        self.dla_fallback_penalty = dla_fallback_penalty
        self.max_time_ms = max_time_ms

        self.states = initial_states(self.platform)
        self.tasks: dict[str, _Task] = {}
        self._profiles: dict[str, AppProfile] = {}
        self._signatures: dict[str, SignatureMap] = {}
        for r in scenario.requests:
            if r.model not in descriptors:
                raise EngineError(f"no descriptor for model {r.model!r}")
            profile = parse_model(descriptors[r.model], priority=r.priority,
                                  task_kind=r.task_kind,
                                  workload_size=r.workload_size)
            self._profiles[r.request_id] = profile
            if affinity_threshold is None:
                self._signatures[r.request_id] = layer_affinity(profile, matrix)
            else:
                self._signatures[r.request_id] = layer_affinity(
                    profile, matrix, threshold=affinity_threshold)

        self._heap: list[tuple] = []
        self._seq = 0
        self._ran = False
        self._completed_requests: set[str] = set()
        self._scheduled: set[str] = set()
        self._arrivals = {r.request_id: r.arrival_ms for r in scenario.requests}
        self.trace = Trace(
            scenario=scenario.name,
            policy=policy.name,
            platform=self.platform.name,
            tdp_mw=self.platform.tdp_mw,
            cluster_ids=tuple(c.cluster_id for c in self.platform.clusters),
        )

    # -- event plumbing ----------------------------------------------------

    def _push(self, time_ms: float, rank: int, kind: str, *payload):
        heapq.heappush(self._heap, (time_ms, rank, self._seq, kind, payload))
        self._seq += 1

    def _schedule_initial_arrivals(self):
        for r in self.scenario.requests:
            if not r.depends_on:
                self._push(r.arrival_ms, _RANK_ARRIVAL, "arrival", r.request_id)
                self._scheduled.add(r.request_id)

    def _release_dependents(self, now: float):
        for r in self.scenario.requests:
            if r.request_id in self._scheduled:
                continue
            if all(d in self._completed_requests for d in r.depends_on):
                self._push(max(now, r.arrival_ms), _RANK_ARRIVAL,
                           "arrival", r.request_id)
                self._scheduled.add(r.request_id)

    # -- power -------------------------------------------------------------

    def _utilization(self) -> dict[str, float]:
        # an occupied cluster draws active power even during actuation
        # holds; frozen tasks have vacated their cluster entirely
        return {cid: 0.0 if st.occupant is None else 1.0
                for cid, st in self.states.items()}

    def _power(self) -> float:
        return power_draw(self.platform, self.states, self._utilization())

    def _record_power(self, now: float):
        p = self._power()
        if self.trace.power and self.trace.power[-1].power_mw == p:
            return
        self.trace.power.append(PowerRecord(
            time_ms=now,
            power_mw=p,
            freqs_mhz=tuple(self.states[c].freq_mhz for c in self.trace.cluster_ids),
            utils=tuple(self._utilization()[c] for c in self.trace.cluster_ids),
        ))

    # -- task mechanics ----------------------------------------------------

    def _rate(self, task: _Task) -> float:
        """GFLOP/ms on the task's current cluster."""
        state = self.states[task.cluster_id]
        return effective_rate(state, task.signature.dla_flops_fraction,
                              task.native, self.dla_fallback_penalty) / 1000.0

    def _sync(self, task: _Task, now: float):
        if task.cluster_id is not None and not task.frozen and now > task.last_sync:
            task.done += self._rate(task) * (now - task.last_sync)
        task.last_sync = max(task.last_sync, now)

    def _sync_all(self, now: float):
        for task in self.tasks.values():
            if not task.completed:
                self._sync(task, now)

    def _reschedule(self, task: _Task, now: float):
        task.epoch += 1
        if task.completed or task.frozen or task.cluster_id is None:
            return
        start = max(now, task.resume_at)
        remaining = max(0.0, task.work - task.done)
        t_done = start + remaining / self._rate(task)
        self._push(t_done, _RANK_COMPLETION, "completion", task.key, task.epoch)

    def _rollback_to_boundary(self, task: _Task):
        """Drop progress to the last completed segment boundary."""
        if task.work <= 0 or task.done <= 0:
            return
        frac = task.done / task.work
        best = 0.0
        for b in segment_fractions(task.profile):
            if b <= frac + 1e-12:
                best = b
            else:
                break
        new_done = best * task.work
        task.rolled_back += task.done - new_done
        task.done = new_done

    def _spawn_task(self, request_id: str, part: str | None,
                    work: float | None, native: bool, now: float) -> _Task:
        key = request_id if part is None else f"{request_id}#{part}"
        if key in self.tasks:
            raise EngineError(f"task {key!r} already exists")
        profile = self._profiles[request_id]
        if part is not None:
            whole = self.tasks.get(request_id)
            if whole is not None:
                if whole.started or whole.frozen:
                    raise EngineError(
                        f"{request_id}: cannot split a request that already ran")
                del self.tasks[request_id]
            if work is None:
                raise EngineError(f"{key}: part decisions must carry work_gflops")
        total = profile.work_gflops
        task = _Task(
            key=key,
            request_id=request_id,
            part=part,
            profile=profile,
            signature=self._signatures[request_id],
            work=total if work is None else work,
            native=native,
            arrival_ms=self._arrivals.get(request_id, now),
        )
        mapped = sum(t.work for t in self.tasks.values()
                     if t.request_id == request_id)
        if task.work < 0 or mapped + task.work > total + _WORK_EPS:
            raise EngineError(
                f"{key}: parts exceed the request's total work "
                f"({mapped + task.work:.6f} > {total:.6f} GFLOPs)")
        self.tasks[key] = task
        return task

    # -- decision application ----------------------------------------------

    def _task_for(self, decision: Decision) -> _Task:
        key = (decision.request_id if decision.part is None
               else f"{decision.request_id}#{decision.part}")
        task = self.tasks.get(key)
        if task is None:
            raise EngineError(f"decision names unknown task {key!r}")
        return task

    def _require_free(self, cluster_id: str | None) -> str:
        if cluster_id is None:
            raise EngineError("mapping decision without a target cluster")
        state = self.states.get(cluster_id)
        if state is None:
            raise EngineError(f"unknown cluster {cluster_id!r}")
        if state.occupant is not None:
            raise EngineError(f"cluster {cluster_id} is occupied by {state.occupant}")
        return cluster_id

    def _occupy(self, task: _Task, cluster_id: str):
        self.states[cluster_id] = dataclasses.replace(
            self.states[cluster_id], occupant=task.key)
        task.cluster_id = cluster_id

    def _vacate(self, task: _Task):
        if task.cluster_id is not None:
            self.states[task.cluster_id] = dataclasses.replace(
                self.states[task.cluster_id], occupant=None)
            task.cluster_id = None

    def _apply_decision(self, d: Decision, now: float, acted: set[str]):
        if d.kind is DecisionKind.SET_FREQ:
            raise EngineError("SET_FREQ is only valid from dvfs_update()")

        if d.kind is DecisionKind.MAP:
            key = (d.request_id if d.part is None
                   else f"{d.request_id}#{d.part}")
            task = self.tasks.get(key)
            if task is None:
                task = self._spawn_task(d.request_id, d.part, d.work_gflops,
                                        d.native, now)
            if task.key in acted:
                raise EngineError(f"{task.key}: two decisions in one cycle")
            if task.started or task.frozen or task.cluster_id is not None:
                raise EngineError(f"{task.key}: MAP on a task that already ran")
            self._require_free(d.cluster_id)
            self._occupy(task, d.cluster_id)
            task.started = True
            task.resume_at = now + self.ctrl_overhead_ms
            task.last_sync = task.resume_at
            if task.first_map_ms is None:
                task.first_map_ms = now
            self._reschedule(task, now)

        elif d.kind is DecisionKind.MIGRATE:
            task = self._task_for(d)
            if task.key in acted:
                raise EngineError(f"{task.key}: two decisions in one cycle")
            if task.state is not TaskState.RUNNING:
                raise EngineError(f"{task.key}: MIGRATE on a task that is not running")
            if d.cluster_id == task.cluster_id:
                raise EngineError(f"{task.key}: MIGRATE onto its own cluster")
            self._require_free(d.cluster_id)
            self._sync(task, now)
            self._vacate(task)
            self._rollback_to_boundary(task)
            self._occupy(task, d.cluster_id)
            task.resume_at = now + self.ctrl_overhead_ms + self.migration_overhead_ms
            task.last_sync = task.resume_at
            self._reschedule(task, now)

        elif d.kind is DecisionKind.FREEZE:
            task = self._task_for(d)
            if task.key in acted:
                raise EngineError(f"{task.key}: two decisions in one cycle")
            if task.frozen or task.completed:
                raise EngineError(f"{task.key}: FREEZE on a {task.state.value} task")
            if task.started:
                self._sync(task, now)
                task.frozen_on = task.cluster_id
                self._vacate(task)
                # log the vacated cluster, whatever the policy filled in
                d = dataclasses.replace(d, cluster_id=task.frozen_on)
            # a never-started task may be frozen too: that is deferred
            # admission straight into the thaw queue, with no charge
            task.frozen = True
            task.epoch += 1

        elif d.kind is DecisionKind.UNFREEZE:
            task = self._task_for(d)
            if task.key in acted:
                raise EngineError(f"{task.key}: two decisions in one cycle")
            if not task.frozen:
                raise EngineError(f"{task.key}: UNFREEZE on a task that is not frozen")
            self._require_free(d.cluster_id)
            task.frozen = False
            self._occupy(task, d.cluster_id)
            if not task.started:
                # deferred admission: charged like, and counted as, a MAP
                task.started = True
                task.resume_at = now + self.ctrl_overhead_ms
                if task.first_map_ms is None:
                    task.first_map_ms = now
            else:
                # the freeze charge was deferred to the thaw: pay both
                # ends now, on top of the control overhead
                task.resume_at = (now + self.ctrl_overhead_ms
                                  + 2.0 * self.freeze_overhead_ms)
                if d.cluster_id != task.frozen_on:
                    self._rollback_to_boundary(task)
            task.frozen_on = None
            task.last_sync = task.resume_at
            self._reschedule(task, now)

        else:  # pragma: no cover - enum is exhaustive
            raise EngineError(f"unknown decision kind {d.kind}")

        acted.add(self.tasks[d.request_id if d.part is None
                             else f"{d.request_id}#{d.part}"].key)
        self._log_decision(d, now)

    def _apply_set_freq(self, d: Decision, now: float):
        if d.kind is not DecisionKind.SET_FREQ:
            raise EngineError("dvfs_update() may only emit SET_FREQ decisions")
        if d.cluster_id is None or d.level is None:
            raise EngineError("SET_FREQ needs cluster_id and level")
        state = self.states.get(d.cluster_id)
        if state is None:
            raise EngineError(f"unknown cluster {d.cluster_id!r}")
        if d.level == state.current_level:
            return
        occupant = self.tasks.get(state.occupant) if state.occupant else None
        if occupant is not None:
            self._sync(occupant, now)
        self.states[d.cluster_id] = set_frequency(state, d.level)
        if occupant is not None:
            self._reschedule(occupant, now)
        self._log_decision(d, now)

    def _log_decision(self, d: Decision, now: float):
        freq = None
        if d.kind is DecisionKind.SET_FREQ:
            freq = self.states[d.cluster_id].freq_mhz
        self.trace.decisions.append(DecisionRecord(
            time_ms=now,
            kind=d.kind.value,
            request_id=d.request_id,
            part=d.part,
            cluster_id=d.cluster_id,
            level=d.level,
            freq_mhz=freq,
        ))

    # -- completion handling -------------------------------------------------

    def _finish_task(self, task: _Task, now: float) -> str | None:
        self._sync(task, now)
        # the completion event time is computed analytically; the done
        # counter is integrated incrementally across every rate change.
        # Their agreement is the work-conservation invariant.
        task.completion_residual = task.done - task.work
        if abs(task.completion_residual) > _WORK_EPS * max(1.0, task.work):
            raise EngineError(
                f"{task.key}: completion fired with {task.done:.9f} of "
                f"{task.work:.9f} GFLOPs done")
        task.done = task.work
        task.completed = True
        task.completed_ms = now
        freed = task.cluster_id
        self._vacate(task)
        return freed

    def _request_complete(self, request_id: str) -> bool:
        parts = [t for t in self.tasks.values() if t.request_id == request_id]
        if not parts or not all(t.completed for t in parts):
            return False
        total = self._profiles[request_id].work_gflops
        return sum(t.work for t in parts) >= total - _WORK_EPS * max(1.0, total)

    # -- main loop -----------------------------------------------------------

    def run(self) -> Trace:
        if self._ran:
            raise EngineError("a Simulation can only run once; build a new one")
        self._ran = True
        self._schedule_initial_arrivals()
        self._record_power(0.0)

        while self._heap:
            now, rank = self._heap[0][0], self._heap[0][1]
            if now > self.max_time_ms:
                raise EngineError(
                    f"simulation ran past {self.max_time_ms} ms; "
                    "likely a stuck policy")
            batch = []
            while self._heap and self._heap[0][0] == now and self._heap[0][1] == rank:
                batch.append(heapq.heappop(self._heap))

            events: list[ControllerEvent] = []
            for _, _, _, kind, payload in batch:
                if kind == "completion":
                    key, epoch = payload
                    task = self.tasks[key]
                    if task.epoch != epoch or task.completed:
                        continue  # superseded by a later decision
                    freed = self._finish_task(task, now)
                    if self._request_complete(task.request_id):
                        self._completed_requests.add(task.request_id)
                        self._release_dependents(now)
                    if freed is not None:
                        events.append(ControllerEvent(
                            EventKind.CLUSTER_FREED, cluster_id=freed))
                elif kind == "arrival":
                    (request_id,) = payload
                    if request_id not in self.tasks:
                        self._spawn_task(request_id, None, None, False, now)
                    events.append(ControllerEvent(
                        EventKind.ARRIVAL, request_id=request_id))

            if not events:
                continue
            self._sync_all(now)
            p_before = self._power()
            decisions = self.policy.decide(self._view(now), events)
            acted: set[str] = set()
            for d in decisions:
                self._apply_decision(d, now, acted)
            p_after = self._power()
            freq_decisions = self.policy.dvfs_update(
                self._view(now), p_before, p_after, len(events))
            for d in freq_decisions:
                self._apply_set_freq(d, now)
            self._record_power(now)

        self._check_drained()
        self._finalize_trace()
        return self.trace

    def _view(self, now: float) -> ControllerView:
        return ControllerView(
            now=now,
            platform=self.platform,
            states=dict(self.states),
            tasks={k: t.view() for k, t in self.tasks.items()},
            dla_fallback_penalty=self.dla_fallback_penalty,
        )

    def _check_drained(self):
        stuck = []
        for r in self.scenario.requests:
            if r.request_id in self._completed_requests:
                continue
            parts = [t for t in self.tasks.values()
                     if t.request_id == r.request_id]
            if not parts:
                state = ("never released (waiting on "
                         f"{[d for d in r.depends_on if d not in self._completed_requests]})")
            else:
                state = ", ".join(f"{t.key}:{t.state.value}" for t in parts)
            stuck.append(f"{r.request_id} [{state}]")
        if stuck:
            raise EngineError(
                "event queue drained with unfinished requests: "
                + "; ".join(stuck))

    def _finalize_trace(self):
        for r in self.scenario.requests:
            parts = [t for t in self.tasks.values()
                     if t.request_id == r.request_id]
            profile = self._profiles[r.request_id]
            first_map = min((t.first_map_ms for t in parts
                             if t.first_map_ms is not None), default=None)
            completed = max((t.completed_ms for t in parts), default=None) \
                if all(t.completed for t in parts) and parts else None
            arrival = self._arrivals[r.request_id]
            self.trace.requests.append(RequestRecord(
                request_id=r.request_id,
                model=r.model,
                priority=r.priority,
                arrival_ms=arrival,
                first_map_ms=first_map,
                completed_ms=completed,
                waiting_ms=None if first_map is None else first_map - arrival,
                latency_ms=None if completed is None else completed - arrival,
                work_gflops=profile.work_gflops,
            ))

    # -- invariant helpers (used by tests) -----------------------------------

    def conservation_error(self) -> float:
        """Worst relative disagreement between incrementally integrated
        progress and the analytically computed completion times."""
        return max((abs(t.completion_residual) / max(1.0, t.work)
                    for t in self.tasks.values() if t.completed), default=0.0)

    def rolled_back_gflops(self) -> float:
        """Total work discarded by segment-boundary rollbacks."""
        return sum(t.rolled_back for t in self.tasks.values())


def _apply_overrides(platform: PlatformSpec, overrides: dict) -> PlatformSpec:
    if not overrides:
        return platform
    allowed = {"tdp_mw", "base_power_mw"}
    unknown = set(overrides) - allowed
    if unknown:
        raise EngineError(f"unsupported platform overrides: {sorted(unknown)}")
    return dataclasses.replace(
        platform, **{k: float(v) for k, v in overrides.items()})


# ---------------------------------------------------------------------------
# trace serialization

_DECISION_FIELDS = ["time_ms", "kind", "request_id", "part", "cluster_id",
                    "level", "freq_mhz"]
_REQUEST_FIELDS = ["request_id", "model", "priority", "arrival_ms",
                   "first_map_ms", "completed_ms", "waiting_ms",
                   "latency_ms", "work_gflops"]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def decisions_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_DECISION_FIELDS)
    for d in trace.decisions:
        w.writerow([_fmt(getattr(d, f)) for f in _DECISION_FIELDS])
    return buf.getvalue()


def requests_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_REQUEST_FIELDS)
    for r in trace.requests:
        w.writerow([_fmt(getattr(r, f)) for f in _REQUEST_FIELDS])
    return buf.getvalue()


def power_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["time_ms", "power_mw"]
    for cid in trace.cluster_ids:
        header += [f"{cid}_freq_mhz", f"{cid}_util"]
    w.writerow(header)
    for p in trace.power:
        row = [_fmt(p.time_ms), _fmt(p.power_mw)]
        for f, u in zip(p.freqs_mhz, p.utils):
            row += [_fmt(f), _fmt(u)]
        w.writerow(row)
    return buf.getvalue()


def summary_json(trace: Trace) -> str:
    return json.dumps(trace.summary(), indent=2, sort_keys=True) + "\n"


def write_trace(trace: Trace, out_dir) -> None:
    """Write decisions.csv, requests.csv, power.csv and summary.json."""
    from pathlib import Path

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "decisions.csv").write_text(decisions_csv(trace))
    (out / "requests.csv").write_text(requests_csv(trace))
    (out / "power.csv").write_text(power_csv(trace))
    (out / "summary.json").write_text(summary_json(trace))
