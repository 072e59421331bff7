"""Workload scenarios: timed inference requests with optional dependencies.

A scenario is a list of requests, each naming a model from the library,
a priority, an arrival time, and a workload size (images for batch DNNs,
tokens for transformer work).  Requests may depend on other requests;
a dependent request is released only once all of its producers have
completed, never before its own arrival time.
"""

from __future__ import annotations

import graphlib
import json
import random
from dataclasses import dataclass, field

from .models import TaskKind


class WorkloadError(ValueError):
    """Raised for malformed or inconsistent scenario files."""


@dataclass(frozen=True)
class InferenceRequest:
    request_id: str
    model: str
    priority: int
    arrival_ms: float
    workload_size: int
    task_kind: TaskKind | None = None  # None -> model default
    depends_on: tuple[str, ...] = ()

    def __post_init__(self):
        if self.priority < 1:
            raise WorkloadError(f"{self.request_id}: priority must be >= 1")
        if self.arrival_ms < 0:
            raise WorkloadError(f"{self.request_id}: negative arrival time")
        if self.workload_size <= 0:
            raise WorkloadError(f"{self.request_id}: workload_size must be positive")


@dataclass(frozen=True)
class WorkloadScenario:
    name: str
    requests: tuple[InferenceRequest, ...]
    platform_overrides: dict = field(default_factory=dict, compare=False)

    def request(self, request_id: str) -> InferenceRequest:
        for r in self.requests:
            if r.request_id == request_id:
                return r
        raise WorkloadError(f"no request {request_id!r} in scenario {self.name!r}")


def _check_dag(requests: tuple[InferenceRequest, ...]) -> None:
    ids = {r.request_id for r in requests}
    graph = {}
    for r in requests:
        for dep in r.depends_on:
            if dep not in ids:
                raise WorkloadError(
                    f"{r.request_id}: depends on unknown request {dep!r}")
            if dep == r.request_id:
                raise WorkloadError(f"{r.request_id}: depends on itself")
        graph[r.request_id] = set(r.depends_on)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as e:
        raise WorkloadError(f"dependency cycle: {e.args[1]}") from None


def load_mix(text: str, known_models=None) -> WorkloadScenario:
    """Parse a scenario/mix JSON document.

    known_models, when given, is the set of loadable model names; any
    request naming a model outside it is an error at load time rather
    than at simulation time.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise WorkloadError(f"scenario is not valid JSON: {e}") from None
    if "requests" not in doc:
        raise WorkloadError("scenario missing field 'requests'")
    requests = []
    counters: dict[str, int] = {}
    for entry in doc["requests"]:
        try:
            model = entry["model"]
            n = counters.get(model, 0)
            counters[model] = n + 1
            kind = TaskKind(entry["task_kind"]) if "task_kind" in entry else None
            requests.append(InferenceRequest(
                request_id=entry.get("id", f"{model}-{n}"),
                model=model,
                priority=int(entry["priority"]),
                arrival_ms=float(entry["arrival_ms"]),
                workload_size=int(entry["workload_size"]),
                task_kind=kind,
                depends_on=tuple(entry.get("depends_on", ())),
            ))
        except KeyError as e:
            raise WorkloadError(f"request entry missing field {e.args[0]!r}") from None
    ids = [r.request_id for r in requests]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise WorkloadError(f"duplicate request ids: {dup}")
    if known_models is not None:
        unknown = sorted({r.model for r in requests} - set(known_models))
        if unknown:
            raise WorkloadError(f"unknown models: {unknown}")
    scenario = WorkloadScenario(
        name=doc.get("name", "unnamed"),
        requests=tuple(requests),
        platform_overrides=dict(doc.get("platform_overrides", {})),
    )
    _check_dag(scenario.requests)
    return scenario


def serialize_mix(scenario: WorkloadScenario) -> str:
    doc = {
        "name": scenario.name,
        "requests": [
            {
                "id": r.request_id,
                "model": r.model,
                "priority": r.priority,
                "arrival_ms": r.arrival_ms,
                "workload_size": r.workload_size,
                **({"task_kind": r.task_kind.value} if r.task_kind else {}),
                **({"depends_on": list(r.depends_on)} if r.depends_on else {}),
            }
            for r in scenario.requests
        ],
    }
    if scenario.platform_overrides:
        doc["platform_overrides"] = scenario.platform_overrides
    return json.dumps(doc, indent=2)


def released_requests(scenario: WorkloadScenario, completed: set[str],
                      now: float) -> list[InferenceRequest]:
    """Requests whose arrival time has passed and whose producers are done."""
    out = []
    for r in scenario.requests:
        if r.request_id in completed:
            continue
        if r.arrival_ms <= now and all(d in completed for d in r.depends_on):
            out.append(r)
    return out


def random_mix(seed: int, model_names, n_requests: int, horizon_ms: float = 500.0,
               size_range: tuple[int, int] = (1, 6), max_priority: int = 3,
               dependency_p: float = 0.15) -> WorkloadScenario:
    """Generate a small reproducible scenario for property testing."""
    rng = random.Random(seed)
    names = sorted(model_names)
    requests = []
    for i in range(n_requests):
        deps = ()
        if requests and rng.random() < dependency_p:
            deps = (rng.choice(requests).request_id,)
        model = rng.choice(names)
        requests.append(InferenceRequest(
            request_id=f"r{i}-{model}",
            model=model,
            priority=rng.randint(1, max_priority),
            arrival_ms=round(rng.uniform(0.0, horizon_ms), 1),
            workload_size=rng.randint(*size_range),
            depends_on=deps,
        ))
    return WorkloadScenario(name=f"random-{seed}", requests=tuple(requests))
