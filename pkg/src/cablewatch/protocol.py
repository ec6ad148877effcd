"""Sensor and supervisor state machines for the save/reset sync protocol.

The supervisor broadcasts a sync frame once per period. On receipt, a sensor
atomically saves and resets its local counter, then reports the saved value
together with every event it timestamped during the period just closed. The
first sync a sensor ever sees only starts its first period; there is nothing
meaningful to report before it.

Both machines are single-owner and event-driven: callers deliver one message
at a time and nothing here touches sockets or wall clocks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .clock import ClockState
from .wire import ReportEvent, SensorReport, SyncFrame

log = logging.getLogger(__name__)


@dataclass
class _PendingDetection:
    timestamp_ticks: int
    amplitude_milli_g: int
    # Stamped against the power-on counter (before any sync) or against a
    # period that was abandoned in a resync; either way not retimeable.
    pre_sync: bool


@dataclass(frozen=True)
class SensorSyncResult:
    """What one sync receipt did at the sensor.

    action is one of "first_sync", "report", "duplicate", "regression".
    pre_sync_flags aligns with report.events and marks entries whose
    timestamps predate the sensor's first (or re-based) sync; the wire
    format does not carry this flag, so it only exists at the sensor.
    """

    action: str
    report: Optional[SensorReport] = None
    pre_sync_flags: tuple[bool, ...] = ()
    clamped_events: int = 0
    dropped_frames: int = 0


class SensorProtocol:
    """Sensor-side state: a drifting clock plus the pending event queue."""

    def __init__(self, sensor_id: int, clock: ClockState):
        self.sensor_id = sensor_id
        self.clock = clock
        self.pending: list[_PendingDetection] = []
        self.last_seen_period_index: Optional[int] = None
        # diagnostics
        self.duplicate_syncs = 0
        self.regressions = 0
        self.dropped_frames = 0
        self.pre_sync_detections = 0

    @property
    def synced(self) -> bool:
        return self.last_seen_period_index is not None

    def on_detection(self, local_timestamp_ticks: int, amplitude_g: float) -> None:
        """Queue one detection, already quantized to the sampling grid."""
        if local_timestamp_ticks < 0:
            raise ValueError(f"timestamp must be >= 0, got {local_timestamp_ticks!r}")
        if amplitude_g < 0:
            raise ValueError(f"amplitude must be >= 0, got {amplitude_g!r}")
        pre_sync = not self.synced
        if pre_sync:
            self.pre_sync_detections += 1
        self.pending.append(
            _PendingDetection(
                timestamp_ticks=int(local_timestamp_ticks),
                amplitude_milli_g=round(amplitude_g * 1000),
                pre_sync=pre_sync,
            )
        )

    def on_sync(self, frame: SyncFrame) -> SensorSyncResult:
        """Handle one sync receipt; returns the report to send, if any."""
        if self.synced and frame.period_index == self.last_seen_period_index:
            # the same period announced twice: a replayed datagram. Resetting
            # again would zero the counter mid-period, so ignore it.
            self.duplicate_syncs += 1
            log.debug("sensor %d: duplicate sync for period %d", self.sensor_id, frame.period_index)
            return SensorSyncResult(action="duplicate")

        if self.synced and frame.period_index < self.last_seen_period_index:
            # the broadcast sequence went backwards (supervisor restart).
            # Abandon the open period and start over from the new index.
            self.regressions += 1
            log.warning(
                "sensor %d: sync period regressed %d -> %d, resynchronizing",
                self.sensor_id, self.last_seen_period_index, frame.period_index,
            )
            self.clock.save_and_reset()
            for p in self.pending:
                p.pre_sync = True
            self.last_seen_period_index = frame.period_index
            return SensorSyncResult(action="regression")

        first = not self.synced
        dropped = 0
        if not first and frame.period_index > self.last_seen_period_index + 1:
            dropped = frame.period_index - self.last_seen_period_index - 1
            self.dropped_frames += dropped
            log.warning(
                "sensor %d: %d sync frame(s) missed before period %d",
                self.sensor_id, dropped, frame.period_index,
            )

        saved = self.clock.save_and_reset()
        if first:
            # nothing to report: the counter never had a defined start
            self.last_seen_period_index = frame.period_index
            return SensorSyncResult(action="first_sync")

        closing_index = self.last_seen_period_index
        saved_wire = round(saved)
        events = []
        flags = []
        clamped = 0
        for p in self.pending:
            ts = p.timestamp_ticks
            if not p.pre_sync and ts > saved_wire:
                # ceiling quantization can push a detection sampled just
                # before the sync past the period end; keep it in its period
                ts = saved_wire
                clamped += 1
            events.append(ReportEvent(timestamp_ticks=ts, amplitude_milli_g=p.amplitude_milli_g))
            flags.append(p.pre_sync)
        self.pending.clear()
        self.last_seen_period_index = frame.period_index
        report = SensorReport(
            sensor_id=self.sensor_id,
            period_index=closing_index,
            saved_counter_ticks=saved_wire,
            events=tuple(events),
        )
        return SensorSyncResult(
            action="report",
            report=report,
            pre_sync_flags=tuple(flags),
            clamped_events=clamped,
            dropped_frames=dropped,
        )


@dataclass(frozen=True)
class CompletedPeriod:
    """A period released for retiming: every roster report, or a timeout cut."""

    period_index: int
    reports: tuple[SensorReport, ...]
    complete: bool
    missing: tuple[int, ...]


class SupervisorProtocol:
    """Supervisor-side state: broadcast schedule and per-period report filing."""

    def __init__(self, roster, period_t_us: int, start_ref_us: float = 0.0):
        if not period_t_us > 0:
            raise ValueError(f"period must be > 0, got {period_t_us!r}")
        self.roster = frozenset(roster)
        if not self.roster:
            raise ValueError("roster must not be empty")
        self.period_t_us = int(period_t_us)
        self.start_ref_us = start_ref_us
        self.next_period_index = 0
        self._open: dict[int, dict[int, SensorReport]] = {}
        self._released: set[int] = set()
        # diagnostics
        self.duplicate_reports = 0
        self.unknown_reports = 0
        self.late_reports = 0
        self.frames_sent = 0

    def tick(self, now_ref_us: float) -> Optional[SyncFrame]:
        """Emit the next sync frame if its broadcast instant has been reached.

        At most one frame per call; the caller drives ticks at (or after)
        each schedule point start + k * T.
        """
        due = self.start_ref_us + self.next_period_index * self.period_t_us
        if now_ref_us < due:
            return None
        frame = SyncFrame(period_index=self.next_period_index, period_T_us=self.period_t_us)
        self.next_period_index += 1
        self.frames_sent += 1
        return frame

    def on_report(self, report: SensorReport) -> Optional[CompletedPeriod]:
        """File one report; returns the period when the roster completes it."""
        if report.sensor_id not in self.roster:
            self.unknown_reports += 1
            log.warning("report from unknown sensor %d rejected", report.sensor_id)
            return None
        if report.period_index in self._released:
            self.late_reports += 1
            log.warning(
                "late report from sensor %d for closed period %d discarded",
                report.sensor_id, report.period_index,
            )
            return None
        bucket = self._open.setdefault(report.period_index, {})
        if report.sensor_id in bucket:
            self.duplicate_reports += 1
            log.warning(
                "duplicate report from sensor %d for period %d ignored (kept first)",
                report.sensor_id, report.period_index,
            )
            return None
        bucket[report.sensor_id] = report
        if self.roster <= bucket.keys():
            return self._release(report.period_index, complete=True)
        return None

    def expire(self, period_index: int) -> Optional[CompletedPeriod]:
        """Timeout path: release whatever the period has collected so far."""
        if period_index in self._released:
            return None
        self._open.setdefault(period_index, {})
        return self._release(period_index, complete=False)

    def _release(self, period_index: int, complete: bool) -> CompletedPeriod:
        bucket = self._open.pop(period_index)
        self._released.add(period_index)
        return CompletedPeriod(
            period_index=period_index,
            reports=tuple(sorted(bucket.values(), key=lambda r: r.sensor_id)),
            complete=complete,
            missing=tuple(sorted(self.roster - bucket.keys())),
        )
