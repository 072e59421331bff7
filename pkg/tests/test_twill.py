"""The adaptive policy: mapping ladder, thaw queue, and the governor.

The toy-platform tests pin the full decision tape of small scenarios
whose schedules can be worked out by hand; the governor tests drive
dvfs_update directly with fabricated power samples.
"""

import dataclasses

import pytest

from twillsim import (
    Decision,
    DecisionKind,
    Simulation,
    TwillPolicy,
    build_simulation,
    initial_states,
    load_matrix,
    load_platform,
    presets,
)
from twillsim.engine import ControllerView
from twillsim.hardware import set_frequency
from toys import TOY_DESCRIPTORS, request, scenario, tiny_platform

MATRIX = load_matrix(presets.matrix_text())


def run_twill(scn, **kwargs):
    sim = Simulation(tiny_platform(), scn, TwillPolicy(),
                     TOY_DESCRIPTORS, MATRIX, **kwargs)
    return sim, sim.run()


def tape(trace):
    return [(round(d.time_ms, 6), d.kind, d.request_id, d.cluster_id)
            for d in trace.decisions]


# -- mapping ladder on the toy platform ---------------------------------------


def test_arrival_takes_fastest_free_preferred_cluster():
    # conv may use either cluster and the GPU is faster; the big task
    # keeps the GPU, the small one finishes on the DLA, and migrating
    # the remaining GPU task to a slower cluster is never proposed
    scn = scenario(request("a", "toy-conv", size=4),
                   request("b", "toy-conv"))
    sim, trace = run_twill(scn)

    assert tape(trace) == [
        (0.0, "MAP", "a", "gpu0"),
        (0.0, "MAP", "b", "dla0"),
        (0.0, "SET_FREQ", None, "gpu0"),
    ]
    by_id = {r.request_id: r for r in trace.requests}
    assert by_id["b"].completed_ms == pytest.approx(315.0)
    assert by_id["a"].completed_ms == pytest.approx(15.0 + 1200.0 / 2.5)
    assert trace.makespan_ms == pytest.approx(495.0)


def test_overflow_arrival_is_deferred_then_thawed():
    # c cannot run anywhere (GPU-only model, GPU taken by an equal
    # priority task): it parks in the queue and is thawed when the GPU
    # frees; the leftover DLA task later migrates to the faster GPU
    scn = scenario(request("a", "toy-conv"),
                   request("b", "toy-conv"),
                   request("c", "toy-matmul"))
    sim, trace = run_twill(scn)

    assert tape(trace) == [
        (0.0, "MAP", "a", "gpu0"),
        (0.0, "MAP", "b", "dla0"),
        (0.0, "FREEZE", "c", None),       # deferred admission
        (0.0, "SET_FREQ", None, "gpu0"),
        (135.0, "UNFREEZE", "c", "gpu0"),
        (290.0, "MIGRATE", "b", "gpu0"),
    ]
    by_id = {r.request_id: r for r in trace.requests}
    assert by_id["c"].first_map_ms == pytest.approx(135.0)
    assert by_id["c"].waiting_ms == pytest.approx(135.0)
    # migration caught b at 275 of 300 GF and restarted it from the
    # 0.9 layer boundary, discarding the 5 GF in flight
    assert sim.rolled_back_gflops() == pytest.approx(5.0)
    assert by_id["b"].completed_ms == pytest.approx(347.0)
    assert trace.makespan_ms == pytest.approx(347.0)


def test_arrival_displaces_occupant_with_room_of_its_own():
    # the GPU-only arrival evicts the flexible conv to the free DLA
    # rather than waiting; both decisions land in one cycle
    scn = scenario(request("a", "toy-conv"),
                   request("b", "toy-matmul", arrival_ms=10.0))
    sim, trace = run_twill(scn)

    assert tape(trace) == [
        (0.0, "MAP", "a", "gpu0"),
        (0.0, "SET_FREQ", None, "gpu0"),
        (10.0, "MIGRATE", "a", "dla0"),
        (10.0, "MAP", "b", "gpu0"),
        (165.0, "MIGRATE", "a", "gpu0"),
    ]
    by_id = {r.request_id: r for r in trace.requests}
    assert by_id["b"].completed_ms == pytest.approx(165.0)
    assert by_id["a"].completed_ms == pytest.approx(294.0)
    assert by_id["b"].waiting_ms == 0.0


def test_higher_priority_freezes_lower_and_thaws_by_priority():
    scn = scenario(request("a", "toy-matmul", priority=1),
                   request("b", "toy-matmul", priority=2, arrival_ms=10.0),
                   request("c", "toy-matmul", priority=3, arrival_ms=20.0))
    sim, trace = run_twill(scn)

    assert tape(trace) == [
        (0.0, "MAP", "a", "gpu0"),
        (0.0, "SET_FREQ", None, "gpu0"),
        (10.0, "FREEZE", "a", "gpu0"),    # records the vacated cluster
        (10.0, "MAP", "b", "gpu0"),
        (20.0, "FREEZE", "b", "gpu0"),
        (20.0, "MAP", "c", "gpu0"),
        (175.0, "UNFREEZE", "b", "gpu0"),  # priority before seniority
        (350.0, "UNFREEZE", "a", "gpu0"),
    ]
    by_id = {r.request_id: r for r in trace.requests}
    # every request was placed the moment it arrived
    assert all(r.waiting_ms == 0.0 for r in trace.requests)
    assert by_id["c"].completed_ms == pytest.approx(175.0)
    assert trace.makespan_ms == pytest.approx(525.0)


def test_equal_priority_never_preempts_and_thaws_fifo():
    scn = scenario(request("a", "toy-matmul"),
                   request("b", "toy-matmul", arrival_ms=10.0),
                   request("c", "toy-matmul", arrival_ms=20.0))
    sim, trace = run_twill(scn)

    assert tape(trace) == [
        (0.0, "MAP", "a", "gpu0"),
        (0.0, "SET_FREQ", None, "gpu0"),
        (10.0, "FREEZE", "b", None),
        (20.0, "FREEZE", "c", None),
        (155.0, "UNFREEZE", "b", "gpu0"),
        (310.0, "UNFREEZE", "c", "gpu0"),
    ]
    by_id = {r.request_id: r for r in trace.requests}
    assert by_id["b"].waiting_ms == pytest.approx(145.0)
    assert by_id["c"].waiting_ms == pytest.approx(290.0)
    assert trace.makespan_ms == pytest.approx(465.0)


# -- golden traces on the production platform ---------------------------------


def test_handover_scenario_migrates_at_the_second_arrival():
    sim = build_simulation("two_app_handover", policy="twill")
    trace = sim.run()

    assert tape(trace) == [
        (0.0, "MAP", "resnet-152-0", "gpu0"),
        (0.0, "SET_FREQ", None, "gpu0"),
        (400.0, "MIGRATE", "resnet-152-0", "dla0"),
        (400.0, "MAP", "bert-base-0", "gpu0"),
        (1309.995036, "MIGRATE", "resnet-152-0", "gpu0"),
    ]
    first_freq = next(d for d in trace.decisions if d.kind == "SET_FREQ")
    assert (first_freq.level, first_freq.freq_mhz) == (7, 1173.0)

    handover = trace.decisions_at(400.0)
    assert [d.kind for d in handover] == ["MIGRATE", "MAP"]

    assert all(r.waiting_ms == 0.0 for r in trace.requests)
    assert trace.makespan_ms == pytest.approx(1789.7687362, abs=1e-6)
    assert trace.violation_fraction == 0.0
    assert sim.conservation_error() <= 1e-9


def test_priority_scenario_freezes_then_restores_clock():
    sim = build_simulation("priority_freeze", policy="twill")
    trace = sim.run()

    assert tape(trace) == [
        (0.0, "MAP", "resnet-152-0", "gpu0"),
        (0.0, "SET_FREQ", None, "gpu0"),
        (1.0, "MAP", "vgg-19-0", "dla0"),
        (1.0, "SET_FREQ", None, "gpu0"),     # both busy: back off to fit
        (400.0, "FREEZE", "resnet-152-0", "gpu0"),
        (400.0, "MAP", "bert-base-0", "gpu0"),
        (1351.422361, "UNFREEZE", "resnet-152-0", "gpu0"),
        (1901.686273, "SET_FREQ", None, "gpu0"),  # DLA drained: clock up
    ]
    freqs = [d for d in trace.decisions if d.kind == "SET_FREQ"]
    assert [(d.level, d.freq_mhz) for d in freqs] == [
        (7, 1173.0), (6, 918.0), (7, 1173.0)]

    preempt = trace.decisions_at(400.0)
    assert [d.kind for d in preempt] == ["FREEZE", "MAP"]

    assert all(r.waiting_ms == 0.0 for r in trace.requests)
    assert trace.makespan_ms == pytest.approx(2200.6465703, abs=1e-6)
    assert trace.violation_fraction == 0.0


# -- frequency governor --------------------------------------------------------


ORIN = load_platform(presets.platform_text())


def gpu_view(level=0, busy=True, dla_busy=False):
    states = initial_states(ORIN)
    states["gpu0"] = set_frequency(states["gpu0"], level)
    if busy:
        states["gpu0"] = dataclasses.replace(states["gpu0"], occupant="t1")
    if dla_busy:
        states["dla0"] = dataclasses.replace(states["dla0"], occupant="t2")
    return ControllerView(now=0.0, platform=ORIN, states=states, tasks={},
                          dla_fallback_penalty=8.0)


def set_freqs(decisions):
    return [(d.cluster_id, d.level) for d in decisions
            if d.kind is DecisionKind.SET_FREQ]


def test_governor_climbs_to_the_budget():
    pol = TwillPolicy()
    # GPU busy alone at the boot level: the whole range fits
    out = pol.dvfs_update(gpu_view(level=0), 5177.0, 5177.0, 1)
    assert set_freqs(out) == [("gpu0", 7)]


def test_governor_holds_when_the_next_level_would_not_fit():
    pol = TwillPolicy()
    # both engines busy at 918 MHz draws 9931 mW; 1173 MHz would not fit
    out = pol.dvfs_update(gpu_view(level=6, dla_busy=True), 9931.0, 9931.0, 1)
    assert out == []


def test_governor_estimates_slope_from_matching_samples():
    pol = TwillPolicy()
    pol.dvfs_update(gpu_view(level=0), 5177.0, 5177.0, 1)
    # same busy set, new frequency: the pair gives (13000-5177)/867
    # ~ 9.0 mW/MHz, steeper than the configured 4.5, so the governor
    # backs off to 816 MHz rather than the configured pick of 408
    out = pol.dvfs_update(gpu_view(level=7), 13000.0, 13000.0, 1)
    assert set_freqs(out) == [("gpu0", 5)]


def test_governor_distrusts_samples_across_occupancy_changes():
    pol = TwillPolicy()
    pol.dvfs_update(gpu_view(level=0), 5177.0, 5177.0, 1)
    # the DLA lit up between samples: the apparent slope is polluted,
    # so the configured slope decides instead
    out = pol.dvfs_update(gpu_view(level=7, dla_busy=True), 13000.0, 13000.0, 1)
    assert set_freqs(out) == [("gpu0", 1)]


def test_governor_spends_half_the_headroom_after_batched_changes():
    pol = TwillPolicy()
    # three placements at once: trust half of the 2000 mW headroom
    out = pol.dvfs_update(gpu_view(level=0), 8000.0, 8000.0, 3)
    assert set_freqs(out) == [("gpu0", 2)]

    pol = TwillPolicy()
    out = pol.dvfs_update(gpu_view(level=0), 8000.0, 8000.0, 1)
    assert set_freqs(out) == [("gpu0", 4)]


def test_governor_leaves_an_idle_gpu_alone():
    pol = TwillPolicy()
    pol.dvfs_update(gpu_view(level=0), 5177.0, 5177.0, 1)
    assert "gpu0" in pol._samples
    out = pol.dvfs_update(gpu_view(level=0, busy=False), 3800.0, 3800.0, 1)
    assert out == []
    # idle readings never feed the slope estimate
    assert "gpu0" not in pol._samples
