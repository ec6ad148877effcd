"""Binary datagram formats for sync broadcasts and sensor reports.

Both messages use fixed little-endian layouts sized to fit a single UDP
datagram:

sync frame (12 bytes):
    magic "CASC" (4s) | period_index (u32) | period_T_us (u32)

sensor report (16 + 12 * event_count bytes):
    sensor_id (u16) | period_index (u32) | saved_counter (u64) |
    event_count (u16) | event_count x [timestamp_ticks (u64),
    amplitude_milli_g (u32)]

A report carries at most MAX_EVENTS_PER_REPORT events; anything larger must
be refused at the sender rather than fragmented.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

SYNC_MAGIC = b"CASC"
_SYNC = struct.Struct("<4sII")
_REPORT_HEADER = struct.Struct("<HIQH")
_REPORT_EVENT = struct.Struct("<QI")

SYNC_FRAME_BYTES = _SYNC.size            # 12
REPORT_HEADER_BYTES = _REPORT_HEADER.size  # 16
REPORT_EVENT_BYTES = _REPORT_EVENT.size    # 12
MAX_EVENTS_PER_REPORT = 1000


class WireFormatError(ValueError):
    """A datagram (or message about to become one) violates the wire layout."""


def _check_uint(name: str, value: int, bits: int) -> None:
    if not isinstance(value, int) or isinstance(value, bool):
        raise WireFormatError(f"{name} must be an int, got {value!r}")
    if not 0 <= value < (1 << bits):
        raise WireFormatError(f"{name}={value} does not fit in u{bits}")


@dataclass(frozen=True)
class SyncFrame:
    """One synchronization broadcast: which period starts, and how long it is."""

    period_index: int
    period_T_us: int


@dataclass(frozen=True)
class ReportEvent:
    """One detection inside a report: local ticks since period start, milli-g."""

    timestamp_ticks: int
    amplitude_milli_g: int


@dataclass(frozen=True)
class SensorReport:
    """Per-period sensor summary: the saved counter plus detected events."""

    sensor_id: int
    period_index: int
    saved_counter_ticks: int
    events: tuple[ReportEvent, ...] = ()


def encode_sync_frame(frame: SyncFrame) -> bytes:
    _check_uint("period_index", frame.period_index, 32)
    _check_uint("period_T_us", frame.period_T_us, 32)
    return _SYNC.pack(SYNC_MAGIC, frame.period_index, frame.period_T_us)


def decode_sync_frame(buf: bytes) -> SyncFrame:
    if len(buf) < SYNC_FRAME_BYTES:
        raise WireFormatError(
            f"sync frame truncated: {len(buf)} bytes, need {SYNC_FRAME_BYTES}"
        )
    if len(buf) > SYNC_FRAME_BYTES:
        raise WireFormatError(
            f"sync frame has {len(buf) - SYNC_FRAME_BYTES} trailing bytes"
        )
    magic, period_index, period_t_us = _SYNC.unpack(buf)
    if magic != SYNC_MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    return SyncFrame(period_index=period_index, period_T_us=period_t_us)


def encode_sensor_report(report: SensorReport) -> bytes:
    _check_uint("sensor_id", report.sensor_id, 16)
    _check_uint("period_index", report.period_index, 32)
    _check_uint("saved_counter_ticks", report.saved_counter_ticks, 64)
    if len(report.events) > MAX_EVENTS_PER_REPORT:
        raise WireFormatError(
            f"{len(report.events)} events exceed the {MAX_EVENTS_PER_REPORT}-event "
            "datagram limit"
        )
    parts = [
        _REPORT_HEADER.pack(
            report.sensor_id,
            report.period_index,
            report.saved_counter_ticks,
            len(report.events),
        )
    ]
    for ev in report.events:
        _check_uint("timestamp_ticks", ev.timestamp_ticks, 64)
        _check_uint("amplitude_milli_g", ev.amplitude_milli_g, 32)
        parts.append(_REPORT_EVENT.pack(ev.timestamp_ticks, ev.amplitude_milli_g))
    return b"".join(parts)


def decode_sensor_report(buf: bytes) -> SensorReport:
    if len(buf) < REPORT_HEADER_BYTES:
        raise WireFormatError(
            f"report truncated: {len(buf)} bytes, header needs {REPORT_HEADER_BYTES}"
        )
    sensor_id, period_index, saved, count = _REPORT_HEADER.unpack_from(buf, 0)
    if count > MAX_EVENTS_PER_REPORT:
        raise WireFormatError(
            f"event_count {count} exceeds the {MAX_EVENTS_PER_REPORT}-event limit"
        )
    expected = REPORT_HEADER_BYTES + count * REPORT_EVENT_BYTES
    if len(buf) != expected:
        raise WireFormatError(
            f"report length {len(buf)} does not match event_count {count} "
            f"(expected {expected})"
        )
    events = tuple(
        ReportEvent(*_REPORT_EVENT.unpack_from(buf, REPORT_HEADER_BYTES + i * REPORT_EVENT_BYTES))
        for i in range(count)
    )
    return SensorReport(
        sensor_id=sensor_id,
        period_index=period_index,
        saved_counter_ticks=saved,
        events=events,
    )
