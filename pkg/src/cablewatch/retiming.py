"""Ratiometric mapping of local event timestamps onto the reference timescale.

A sensor reports an event at T_evi ticks of its own drifting clock, plus the
total T_i ticks its clock counted over the sync period. Because a constant
drift scales both numbers identically, the ratio T_evi / T_i is drift-free;
multiplying by the nominal period length T recovers the event's offset from
the period start in reference microseconds:

    retimed = T_evi * T / T_i

No sensor ever learns the reference clock; the division cancels its rate
error instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .wire import SensorReport

DEFAULT_COINCIDENCE_WINDOW_US = 100_000.0

# flag values attached to events that could not be retimed
FLAG_ZERO_COUNTER = "zero_counter"
FLAG_OUT_OF_PERIOD = "out_of_period"
FLAG_PRE_SYNC = "pre_sync"


class RetimeError(ValueError):
    """An event timestamp cannot be mapped onto the reference timescale."""


@dataclass(frozen=True)
class RetimedEvent:
    """One detection after retiming.

    retimed_us is the event's offset from the period start on the reference
    timescale, NaN when flag is set. raw_ticks preserves the local timestamp
    as reported.
    """

    sensor_id: int
    period_index: int
    retimed_us: float
    raw_ticks: int
    amplitude_g: float
    flag: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.flag is None


def retime(t_evi_ticks: float, t_i_ticks: float, period_t_us: float) -> float:
    """Map one local timestamp onto the reference timescale.

    Args:
        t_evi_ticks: event timestamp, local ticks since the period started.
        t_i_ticks: the sensor's counter over the whole period (saved at sync).
        period_t_us: nominal period length announced in the sync frame.

    Returns:
        Event offset from period start, reference microseconds, in [0, T].

    Raises:
        RetimeError: T_i of zero means a malformed report (a period cannot be
            empty of time); an event stamped after T_i is out of its period.
    """
    if not period_t_us > 0:
        raise RetimeError(f"period T must be > 0, got {period_t_us!r}")
    if t_i_ticks <= 0:
        raise RetimeError(f"period counter must be > 0, got {t_i_ticks!r}")
    if t_evi_ticks < 0:
        raise RetimeError(f"event timestamp must be >= 0, got {t_evi_ticks!r}")
    if t_evi_ticks > t_i_ticks:
        raise RetimeError(
            f"event at {t_evi_ticks} ticks is outside its period (T_i={t_i_ticks})"
        )
    return t_evi_ticks * period_t_us / t_i_ticks


def align_period(
    reports: Iterable[SensorReport],
    period_t_us: float,
    pre_sync_raw: Optional[dict[int, frozenset[int]]] = None,
) -> list[RetimedEvent]:
    """Retime every event of one period's reports onto a shared timescale.

    Events that cannot be retimed come back flagged rather than failing the
    whole period. pre_sync_raw optionally maps sensor_id to raw timestamps
    known (sensor-side) to predate the sensor's first sync; the wire format
    cannot carry that flag, so it arrives out of band when available.

    Returns:
        Valid events sorted by (retimed_us, sensor_id), then flagged events
        sorted by (sensor_id, raw_ticks).
    """
    reports = list(reports)
    indices = {r.period_index for r in reports}
    if len(indices) > 1:
        raise ValueError(f"reports span several periods: {sorted(indices)}")
    out: list[RetimedEvent] = []
    for r in reports:
        stale = (pre_sync_raw or {}).get(r.sensor_id, frozenset())
        for ev in r.events:
            base = RetimedEvent(
                sensor_id=r.sensor_id,
                period_index=r.period_index,
                retimed_us=math.nan,
                raw_ticks=ev.timestamp_ticks,
                amplitude_g=ev.amplitude_milli_g / 1000.0,
            )
            if ev.timestamp_ticks in stale:
                out.append(replace(base, flag=FLAG_PRE_SYNC))
                continue
            try:
                mapped = retime(ev.timestamp_ticks, r.saved_counter_ticks, period_t_us)
            except RetimeError:
                flag = (
                    FLAG_ZERO_COUNTER
                    if r.saved_counter_ticks <= 0
                    else FLAG_OUT_OF_PERIOD
                )
                out.append(replace(base, flag=flag))
                continue
            out.append(replace(base, retimed_us=mapped))
    valid = sorted(
        (e for e in out if e.valid), key=lambda e: (e.retimed_us, e.sensor_id)
    )
    flagged = sorted(
        (e for e in out if not e.valid), key=lambda e: (e.sensor_id, e.raw_ticks)
    )
    return valid + flagged


def pairwise_dt(
    events: Iterable[RetimedEvent], sensor_i: int, sensor_j: int
) -> float:
    """Retimed arrival-time difference t_i - t_j between two sensors.

    Uses each sensor's earliest valid event. Raises ValueError when either
    sensor has none.
    """
    earliest: dict[int, float] = {}
    for e in events:
        if e.valid and (e.sensor_id not in earliest or e.retimed_us < earliest[e.sensor_id]):
            earliest[e.sensor_id] = e.retimed_us
    for sid in (sensor_i, sensor_j):
        if sid not in earliest:
            raise ValueError(f"no valid retimed event for sensor {sid}")
    return earliest[sensor_i] - earliest[sensor_j]


def cluster_events(
    events: Iterable[RetimedEvent],
    window_us: float = DEFAULT_COINCIDENCE_WINDOW_US,
) -> list[list[RetimedEvent]]:
    """Group valid retimed events into coincidence clusters.

    Greedy in retimed-time order: an event joins the open cluster while it
    falls within window_us of the cluster's first event, otherwise it starts
    a new one. Flagged events never cluster.
    """
    if not window_us > 0:
        raise ValueError(f"coincidence window must be > 0, got {window_us!r}")
    valid = sorted(
        (e for e in events if e.valid), key=lambda e: (e.retimed_us, e.sensor_id)
    )
    clusters: list[list[RetimedEvent]] = []
    for e in valid:
        if clusters and e.retimed_us - clusters[-1][0].retimed_us <= window_us:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return clusters
