"""Baseline schedulers: a GPU-only FIFO, a static arrival-time mapper
with uncapped DVFS, and a static subgraph splitter.

All three share two properties that separate them from the adaptive
scheduler: placement is decided once (no migration, no freezing), and
none of them track the power budget.
"""

from __future__ import annotations

from .engine import (
    ControllerEvent,
    ControllerView,
    Decision,
    DecisionKind,
    EventKind,
    Policy,
)
from .hardware import ClusterKind
from .models import AFFINITY_THRESHOLD
from .twill import TwillPolicy

# a static splitter does not bother offloading sub-5% crumbs of a model
MIN_OFFLOAD_FRACTION = 0.05


def _clusters_of_kind(view: ControllerView, kind: ClusterKind) -> list[str]:
    return sorted(c.cluster_id for c in view.platform.clusters if c.kind is kind)


def _free(view: ControllerView, planned: dict, cluster_id: str) -> bool:
    return planned[cluster_id] is None


class GpuQueuePolicy(Policy):
    """Strict FIFO onto the GPU; the DLA is never used.

    The governor simply pins a busy GPU at its top frequency, trusting
    the binned clocks to be safe for GPU-only operation.
    """

    name = "gpu_queue"

    def __init__(self):
        self._fifo: list[str] = []

    def decide(self, view, events):
        for e in events:
            if e.kind is EventKind.ARRIVAL:
                self._fifo.append(e.request_id)
        decisions = []
        planned = {cid: st.occupant for cid, st in view.states.items()}
        for gpu in _clusters_of_kind(view, ClusterKind.GPU):
            if self._fifo and _free(view, planned, gpu):
                rid = self._fifo.pop(0)
                planned[gpu] = rid
                decisions.append(Decision(DecisionKind.MAP, request_id=rid,
                                          cluster_id=gpu))
        return decisions

    def dvfs_update(self, view, p_before_mw, p_after_mw, handled_events):
        decisions = []
        for gpu in _clusters_of_kind(view, ClusterKind.GPU):
            state = view.states[gpu]
            top = state.spec.num_levels - 1
            if state.occupant is not None and state.current_level != top:
                decisions.append(Decision(DecisionKind.SET_FREQ,
                                          cluster_id=gpu, level=top))
        return decisions


class StaticDvfsPolicy(Policy):
    """Map once at arrival, then race-to-idle at the top frequency.

    An arrival takes the GPU when free; a DLA-suited model (nearly all
    of its work supported there) takes a free DLA instead; everything
    else waits in one FIFO and is placed on the first cluster that frees
    up and suits it.  The governor clocks a busy GPU to the top level
    without consulting the power budget, which is exactly how this
    scheme overshoots a shared cap when both clusters are loaded.
    """

    name = "static_dvfs"

    def __init__(self, dla_threshold: float = AFFINITY_THRESHOLD):
        self._fifo: list[str] = []
        self.dla_threshold = dla_threshold

    def _suits(self, view, rid: str, kind: ClusterKind) -> bool:
        if kind is ClusterKind.GPU:
            return True
        return view.tasks[rid].dla_fraction >= self.dla_threshold

    def decide(self, view, events):
        decisions = []
        planned = {cid: st.occupant for cid, st in view.states.items()}

        def place(rid: str, cid: str):
            planned[cid] = rid
            decisions.append(Decision(DecisionKind.MAP, request_id=rid,
                                      cluster_id=cid))

        for e in events:
            if e.kind is EventKind.CLUSTER_FREED:
                kind = view.cluster_kind(e.cluster_id)
                for rid in self._fifo:
                    if _free(view, planned, e.cluster_id) and self._suits(view, rid, kind):
                        self._fifo.remove(rid)
                        place(rid, e.cluster_id)
                        break
            else:
                rid = e.request_id
                gpus = [c for c in _clusters_of_kind(view, ClusterKind.GPU)
                        if _free(view, planned, c)]
                dlas = [c for c in _clusters_of_kind(view, ClusterKind.DLA)
                        if _free(view, planned, c)]
                if gpus:
                    place(rid, gpus[0])
                elif dlas and self._suits(view, rid, ClusterKind.DLA):
                    place(rid, dlas[0])
                else:
                    self._fifo.append(rid)
        return decisions

    def dvfs_update(self, view, p_before_mw, p_after_mw, handled_events):
        decisions = []
        for gpu in _clusters_of_kind(view, ClusterKind.GPU):
            state = view.states[gpu]
            top = state.spec.num_levels - 1
            if state.occupant is not None and state.current_level != top:
                decisions.append(Decision(DecisionKind.SET_FREQ,
                                          cluster_id=gpu, level=top))
        return decisions


class StaticSubgraphPolicy(Policy):
    """Split each model once, at arrival, along its compatibility cuts.

    The supported subgraphs (as one consolidated slice of the work) go
    to the DLA when it is free at that moment and the slice is worth
    offloading; the remainder joins a GPU FIFO.  The plan never changes
    afterwards: no migration, no freezing, and no DVFS control at all --
    clocks stay wherever they boot.
    """

    name = "static_subgraph"

    def __init__(self, min_offload: float = MIN_OFFLOAD_FRACTION):
        self._gpu_fifo: list[tuple[str, str | None, float | None]] = []
        self.min_offload = min_offload

    def decide(self, view, events):
        decisions = []
        planned = {cid: st.occupant for cid, st in view.states.items()}

        def place(rid, part, work, native, cid):
            planned[cid] = rid if part is None else f"{rid}#{part}"
            decisions.append(Decision(
                DecisionKind.MAP, request_id=rid, cluster_id=cid,
                part=part, work_gflops=work, native=native))

        for e in events:
            if e.kind is EventKind.CLUSTER_FREED:
                if view.cluster_kind(e.cluster_id) is not ClusterKind.GPU:
                    continue
                if self._gpu_fifo and _free(view, planned, e.cluster_id):
                    rid, part, work = self._gpu_fifo.pop(0)
                    place(rid, part, work, False, e.cluster_id)
                continue

            rid = e.request_id
            task = view.tasks[rid]
            dlas = [c for c in _clusters_of_kind(view, ClusterKind.DLA)
                    if _free(view, planned, c)]
            gpus = [c for c in _clusters_of_kind(view, ClusterKind.GPU)
                    if _free(view, planned, c)]
            frac = task.dla_fraction
            split = frac >= self.min_offload and dlas
            if split:
                dla_work = frac * task.work_gflops
                gpu_work = task.work_gflops - dla_work
                place(rid, "dla", dla_work, True, dlas[0])
                if gpu_work > 0.0:
                    if gpus:
                        place(rid, "gpu", gpu_work, False, gpus[0])
                    else:
                        self._gpu_fifo.append((rid, "gpu", gpu_work))
            else:
                # nothing (worth) offloading, or the DLA is taken: the
                # whole request runs on the GPU
                if gpus:
                    place(rid, None, None, False, gpus[0])
                else:
                    self._gpu_fifo.append((rid, None, None))
        return decisions


POLICIES = {
    "twill": TwillPolicy,
    "gpu_queue": GpuQueuePolicy,
    "static_dvfs": StaticDvfsPolicy,
    "static_subgraph": StaticSubgraphPolicy,
}


def make_policy(name: str) -> Policy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(
            f"unknown policy {name!r}; expected one of {sorted(POLICIES)}"
        ) from None
