"""Replay the two canned contention scenarios and narrate the decisions.

`two_app_handover`: a CNN has the GPU to itself until a transformer
arrives; the scheduler hands the GPU over by migrating the CNN to the
DLA, then migrates it back the moment the transformer finishes.

`priority_freeze`: the DLA is already taken, so a higher-priority
arrival can only be served by freezing the running CNN; it thaws on the
same cluster once the urgent request completes, and the governor gives
back the frequency it took away while both clusters were busy.
"""

from twillsim import simulate


def narrate(name):
    trace = simulate(name, policy="twill")
    print(f"=== {name} ===")
    for d in trace.decisions:
        if d.kind == "SET_FREQ":
            print(f"  t={d.time_ms:9.3f}  {d.cluster_id} clock -> {d.freq_mhz:.0f} MHz")
        else:
            where = d.cluster_id if d.cluster_id is not None else "admission queue"
            print(f"  t={d.time_ms:9.3f}  {d.kind:<8} {d.request_id:<14} ({where})")
    print(f"  makespan {trace.makespan_ms:.3f} ms, "
          f"energy {trace.energy_mj:.1f} mJ, "
          f"time over budget {trace.time_over_budget_ms():.3f} ms")
    for r in trace.requests:
        print(f"    {r.request_id:<14} waited {r.waiting_ms:7.3f} ms, "
              f"latency {r.latency_ms:9.3f} ms")
    print()


if __name__ == "__main__":
    narrate("two_app_handover")
    narrate("priority_freeze")
