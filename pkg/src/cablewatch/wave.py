"""Acoustic wave arrivals along a cable and threshold detection.

A wire rupture releases an elastic wave that travels both ways along the
cable at a few km/s. Each sensor sees the wavefront after a distance/speed
delay; a detection fires when the amplitude at the sensor reaches the trigger
threshold. Amplitude is modeled as flat (the max over the measurement window
equals the peak) with an optional exponential decay per meter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

DEFAULT_WAVE_SPEED_M_S = 5000.0
DEFAULT_THRESHOLD_G = 0.8
DEFAULT_WINDOW_US = 3000.0
DEFAULT_SAMPLING_PERIOD_TICKS = 4


@dataclass(frozen=True)
class CableGeometry:
    """Sensor ids and their positions along the cable axis.

    Positions are meters from the cable origin and must be strictly
    increasing; ids must be unique. At least two sensors make a geometry;
    localization needs at least three.
    """

    sensor_ids: tuple[int, ...]
    positions_m: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sensor_ids", tuple(self.sensor_ids))
        object.__setattr__(self, "positions_m", tuple(float(p) for p in self.positions_m))
        if len(self.sensor_ids) != len(self.positions_m):
            raise ValueError(
                f"{len(self.sensor_ids)} sensor ids but {len(self.positions_m)} positions"
            )
        if len(self.sensor_ids) < 2:
            raise ValueError("geometry needs at least two sensors")
        if len(set(self.sensor_ids)) != len(self.sensor_ids):
            raise ValueError("sensor ids must be unique")
        for a, b in zip(self.positions_m, self.positions_m[1:]):
            if not b > a:
                raise ValueError(
                    f"positions must be strictly increasing, got {a} then {b}"
                )

    def index_of(self, sensor_id: int) -> int:
        try:
            return self.sensor_ids.index(sensor_id)
        except ValueError:
            raise ValueError(f"unknown sensor id {sensor_id}") from None

    def position_of(self, sensor_id: int) -> float:
        return self.positions_m[self.index_of(sensor_id)]

    def spacing(self, sensor_a: int, sensor_b: int) -> float:
        """Cable distance between two sensors, meters."""
        return abs(self.position_of(sensor_a) - self.position_of(sensor_b))

    def neighbor(self, sensor_id: int, step: int) -> Optional[int]:
        """Sensor id `step` places away in position order, or None off the end."""
        i = self.index_of(sensor_id) + step
        if 0 <= i < len(self.sensor_ids):
            return self.sensor_ids[i]
        return None

    @property
    def extent_m(self) -> tuple[float, float]:
        return self.positions_m[0], self.positions_m[-1]

    @property
    def span_m(self) -> float:
        return self.positions_m[-1] - self.positions_m[0]


@dataclass(frozen=True)
class RuptureEvent:
    """A wire break: where, when, and how hard it rings.

    Attributes:
        position_m: break position along the cable axis.
        time_ref_us: reference time of the break.
        peak_amplitude_g: wave amplitude at the source, in g.
    """

    position_m: float
    time_ref_us: float
    peak_amplitude_g: float = 1.0

    def __post_init__(self) -> None:
        if not self.peak_amplitude_g > 0:
            raise ValueError(f"peak amplitude must be > 0, got {self.peak_amplitude_g!r}")


@dataclass(frozen=True)
class WaveArrival:
    """Wavefront as one sensor sees it: arrival instant and window max amplitude."""

    sensor_id: int
    arrival_ref_us: float
    max_amplitude_g: float


def arrival_time(
    geometry: CableGeometry,
    rupture: RuptureEvent,
    sensor_id: int,
    wave_speed_m_s: float = DEFAULT_WAVE_SPEED_M_S,
) -> float:
    """Reference time at which the wavefront reaches a sensor.

    arrival = rupture time + distance / speed, in microseconds.
    """
    if not wave_speed_m_s > 0:
        raise ValueError(f"wave speed must be > 0, got {wave_speed_m_s!r}")
    d = abs(geometry.position_of(sensor_id) - rupture.position_m)
    return rupture.time_ref_us + d / wave_speed_m_s * 1e6


def amplitude_at(
    rupture: RuptureEvent, distance_m: float, attenuation_per_m: float = 0.0
) -> float:
    """Wave amplitude after traveling distance_m; flat unless decay is enabled."""
    if attenuation_per_m < 0:
        raise ValueError("attenuation coefficient must be >= 0")
    return rupture.peak_amplitude_g * math.exp(-attenuation_per_m * distance_m)


def detect(
    sensor_id: int,
    arrival_ref_us: float,
    amplitude_g: float,
    threshold_g: float = DEFAULT_THRESHOLD_G,
    window_us: float = DEFAULT_WINDOW_US,
) -> Optional[WaveArrival]:
    """Threshold trigger for one sensor's view of a wave.

    Fires when amplitude >= threshold (inclusive). The amplitude model is
    flat over the measurement window, so the window max equals the incoming
    amplitude; the window length is validated but does not change the outcome.
    """
    if not window_us > 0:
        raise ValueError(f"measurement window must be > 0, got {window_us!r}")
    if amplitude_g < threshold_g:
        return None
    return WaveArrival(
        sensor_id=sensor_id, arrival_ref_us=arrival_ref_us, max_amplitude_g=amplitude_g
    )


def quantize_to_sampling(
    value_ticks: float, sampling_period_ticks: int = DEFAULT_SAMPLING_PERIOD_TICKS
) -> int:
    """Round a tick value up to the sampling grid.

    The digitizer only sees the wavefront at the first sample at or after it,
    so quantization is a ceiling: the smallest multiple of the sampling period
    that is >= the input.
    """
    if sampling_period_ticks < 1 or int(sampling_period_ticks) != sampling_period_ticks:
        raise ValueError(
            f"sampling period must be a positive integer tick count, got {sampling_period_ticks!r}"
        )
    if value_ticks < 0:
        raise ValueError(f"tick value must be >= 0, got {value_ticks!r}")
    period = int(sampling_period_ticks)
    q = math.ceil(value_ticks / period) * period
    # float division can round down across a grid boundary (e.g. subnormal
    # inputs); the correction below is exact integer arithmetic
    while q < value_ticks:
        q += period
    return q


def simulate_rupture(
    geometry: CableGeometry,
    rupture: RuptureEvent,
    wave_speed_m_s: float = DEFAULT_WAVE_SPEED_M_S,
    threshold_g: float = DEFAULT_THRESHOLD_G,
    window_us: float = DEFAULT_WINDOW_US,
    attenuation_per_m: float = 0.0,
) -> list[WaveArrival]:
    """Per-sensor arrivals for one rupture, in geometry order.

    Only sensors whose received amplitude reaches the threshold appear.

    Raises:
        ValueError: if the rupture lies outside the sensed cable extent.
    """
    lo, hi = geometry.extent_m
    if not lo <= rupture.position_m <= hi:
        raise ValueError(
            f"rupture at {rupture.position_m} m is outside the sensed extent "
            f"[{lo}, {hi}] m"
        )
    arrivals = []
    for sid in geometry.sensor_ids:
        d = abs(geometry.position_of(sid) - rupture.position_m)
        amp = amplitude_at(rupture, d, attenuation_per_m)
        hit = detect(
            sid,
            arrival_time(geometry, rupture, sid, wave_speed_m_s),
            amp,
            threshold_g,
            window_us,
        )
        if hit is not None:
            arrivals.append(hit)
    return arrivals
