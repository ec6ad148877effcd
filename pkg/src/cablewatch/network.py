"""Deterministic message transport for simulation.

Sync broadcasts and report unicasts take propagation delay (distance over RF
speed) plus a per-receiver processing latency with bounded jitter. All jitter
and loss draws are keyed by (seed, message kind, period index, sensor id), so
a run is a pure function of its scenario and seed; two runs never disagree
because of dict ordering or shared RNG state.

The event loop dispatches strictly in delivery-time order. Simultaneous
events are ordered by kind (detections, then syncs, then reports, then
timers), then by node, then by insertion; syncs sort before reports as the
protocol requires, the rest is pinned for determinism.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

DEFAULT_RF_SPEED_M_S = 180e6
DEFAULT_LATENCY_MEAN_US = 20.0
DEFAULT_LATENCY_JITTER_US = 1.0

SUPERVISOR_NODE = "supervisor"

Node = Union[int, str]

KIND_DETECTION = "detection"
KIND_SYNC = "sync"
KIND_REPORT = "report"
KIND_TIMER = "timer"
_KIND_RANK = {KIND_DETECTION: 0, KIND_SYNC: 1, KIND_REPORT: 2, KIND_TIMER: 3}


@dataclass(frozen=True)
class ScheduledDelivery:
    """One message en route: when and where it lands."""

    deliver_at_ref_us: float
    kind: str
    source: Node
    destination: Node
    payload: bytes


@dataclass(frozen=True)
class NetworkModel:
    """Radio geometry plus latency/loss behavior, all seed-deterministic."""

    sensor_positions_m: Mapping[int, float]
    supervisor_position_m: float = 0.0
    rf_speed_m_s: float = DEFAULT_RF_SPEED_M_S
    latency_mean_us: float = DEFAULT_LATENCY_MEAN_US
    latency_jitter_us: float = DEFAULT_LATENCY_JITTER_US
    drop_probability: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensor_positions_m", dict(self.sensor_positions_m))
        if not self.rf_speed_m_s > 0:
            raise ValueError(f"rf speed must be > 0, got {self.rf_speed_m_s!r}")
        if self.latency_jitter_us < 0:
            raise ValueError("latency jitter must be >= 0")
        if self.latency_mean_us < self.latency_jitter_us:
            # otherwise a message could finish processing before it arrived
            raise ValueError("latency mean must be >= jitter half-width")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop probability must be within [0, 1]")

    def node_position(self, node: Node) -> float:
        if node == SUPERVISOR_NODE:
            return self.supervisor_position_m
        try:
            return self.sensor_positions_m[node]
        except KeyError:
            raise ValueError(f"unknown node {node!r}") from None

    def propagation_delay_us(self, node_a: Node, node_b: Node) -> float:
        """Line-of-sight RF travel time between two nodes, microseconds."""
        d = abs(self.node_position(node_a) - self.node_position(node_b))
        return d / self.rf_speed_m_s * 1e6

    def _draws(self, kind: str, period_index: int, sensor_id: int) -> tuple[bool, float]:
        """(dropped, latency_us) for one receiver, fully keyed by inputs."""
        rng = random.Random(f"{self.seed}|{kind}|{period_index}|{sensor_id}")
        dropped = rng.uniform(0.0, 1.0) < self.drop_probability
        latency = self.latency_mean_us + rng.uniform(
            -self.latency_jitter_us, self.latency_jitter_us
        )
        return dropped, latency

    def sync_receipt_at(self, now_ref_us: float, period_index: int, sensor_id: int) -> Optional[float]:
        """Delivery instant of one sync broadcast at one sensor, None if lost."""
        dropped, latency = self._draws(KIND_SYNC, period_index, sensor_id)
        if dropped:
            return None
        return now_ref_us + self.propagation_delay_us(SUPERVISOR_NODE, sensor_id) + latency

    def broadcast_sync(
        self, payload: bytes, now_ref_us: float, period_index: int
    ) -> list[ScheduledDelivery]:
        """Fan one sync frame out to every sensor, minus losses."""
        deliveries = []
        for sid in sorted(self.sensor_positions_m):
            at = self.sync_receipt_at(now_ref_us, period_index, sid)
            if at is None:
                continue
            deliveries.append(
                ScheduledDelivery(
                    deliver_at_ref_us=at,
                    kind=KIND_SYNC,
                    source=SUPERVISOR_NODE,
                    destination=sid,
                    payload=payload,
                )
            )
        return deliveries

    def report_delivery(
        self, payload: bytes, now_ref_us: float, sensor_id: int, period_index: int
    ) -> Optional[ScheduledDelivery]:
        """Unicast one report to the supervisor, None if lost."""
        dropped, latency = self._draws(KIND_REPORT, period_index, sensor_id)
        if dropped:
            return None
        at = now_ref_us + self.propagation_delay_us(sensor_id, SUPERVISOR_NODE) + latency
        return ScheduledDelivery(
            deliver_at_ref_us=at,
            kind=KIND_REPORT,
            source=sensor_id,
            destination=SUPERVISOR_NODE,
            payload=payload,
        )


class EventLoop:
    """Single-threaded dispatch of scheduled actions in reference-time order."""

    def __init__(self, start_ref_us: float = 0.0):
        self.now_ref_us = start_ref_us
        self._heap: list[tuple[float, int, int, int, Callable[[float], None]]] = []
        self._seq = 0
        self.dispatched = 0

    @staticmethod
    def _node_rank(node: Node) -> int:
        return -1 if node == SUPERVISOR_NODE else int(node)

    def schedule(
        self, at_ref_us: float, kind: str, node: Node, action: Callable[[float], None]
    ) -> None:
        """Queue an action; scheduling into the past breaks causality."""
        if at_ref_us < self.now_ref_us:
            raise ValueError(
                f"cannot schedule at {at_ref_us} before now={self.now_ref_us}"
            )
        if kind not in _KIND_RANK:
            raise ValueError(f"unknown event kind {kind!r}")
        heapq.heappush(
            self._heap,
            (at_ref_us, _KIND_RANK[kind], self._node_rank(node), self._seq, action),
        )
        self._seq += 1

    def schedule_delivery(
        self, delivery: ScheduledDelivery, action: Callable[[float], None]
    ) -> None:
        self.schedule(delivery.deliver_at_ref_us, delivery.kind, delivery.destination, action)

    def run(self, max_events: Optional[int] = None) -> int:
        """Dispatch until the queue drains (or max_events); returns the count."""
        n = 0
        while self._heap and (max_events is None or n < max_events):
            at, _, _, _, action = heapq.heappop(self._heap)
            self.now_ref_us = at
            action(at)
            n += 1
        self.dispatched += n
        return n
