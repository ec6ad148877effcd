"""
Live mode: real datagrams, modeled time
=======================================

The protocol also runs over actual UDP sockets. A supervisor thread
broadcasts encoded sync frames; four sensor-agent threads decode them,
stamp modeled wave arrivals on their drifting counters, and send back
encoded report datagrams. Timestamps stay on the modeled timeline (real
network latency never touches them), so a live run and a simulated run
of the same scenario agree to the last bit while exercising the real
wire format end to end.

The same agents and supervisor are available as separate processes via
`cablewatch agent` and `cablewatch supervise`.
"""

from cablewatch import (
    CableGeometry,
    LiveConfig,
    RuptureEvent,
    Scenario,
    run,
    run_live,
)

PERIODS = 5
scenario = Scenario(
    geometry=CableGeometry((1, 2, 3, 4), (0.0, 10.0, 20.0, 30.0)),
    drift_ppm={1: +37.0, 2: -12.0, 3: +50.0, 4: -50.0},
    ruptures=(RuptureEvent(14.0, 1_500_000.0),),
    seed=20,
    run_duration_us=float((PERIODS - 1) * 1_000_000),
)

# Port 0 everywhere: the OS assigns free loopback ports, so this demo
# cannot collide with anything (deployments use 47801/47802).
live = run_live(LiveConfig(
    scenario=scenario,
    periods=PERIODS,
    report_port=0,
    sync_ports={sid: 0 for sid in scenario.geometry.sensor_ids},
))
print(f"live run: {live.reports_received} report datagrams, "
      f"{len(live.completed_periods)} periods closed, "
      f"{live.decode_errors} decode errors")
for est in live.estimates:
    print(f"  live estimate:      x = {est.estimate.x_est_m:.6f} m")

sim = run(scenario)
for est in sim.estimates:
    print(f"  simulated estimate: x = {est.estimate.x_est_m:.6f} m")

match = live.retimed == sim.retimed
print(f"retimed event lists identical: {match}")
