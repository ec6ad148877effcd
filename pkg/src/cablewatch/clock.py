"""Linear-drift tick counters for sensor nodes.

Each sensor timestamps acoustic events with a free-running counter driven by
its local oscillator. The oscillator rate differs from nominal by a constant
error expressed in parts per million; one tick equals one nominal microsecond,
so a perfect clock counts 1,000,000 ticks per reference second and a +50 ppm
clock counts 1,000,050.
"""

from __future__ import annotations

from dataclasses import dataclass

# Plausible oscillator error bound for the crystal parts considered here.
# Anything beyond this is treated as a configuration mistake, not physics.
MAX_DRIFT_PPM = 1000.0


@dataclass
class ClockState:
    """A free-running local counter with constant-rate drift.

    Attributes:
        drift_ppm: constant oscillator error in parts per million; +50 means
            the counter gains 50 ticks per million reference microseconds.
        counter_ticks: current counter value in ticks. Fractional ticks are
            carried between advances, never truncated.
        last_reset_ref_us: reference time of the most recent counter reset.
        ref_now_us: reference time the clock has been advanced to.
    """

    drift_ppm: float
    counter_ticks: float = 0.0
    last_reset_ref_us: float = 0.0
    ref_now_us: float = 0.0

    def __post_init__(self) -> None:
        # `not <=` rather than `>` so NaN is rejected too.
        if not abs(self.drift_ppm) <= MAX_DRIFT_PPM:
            raise ValueError(
                f"drift_ppm {self.drift_ppm!r} outside +/-{MAX_DRIFT_PPM:g} ppm"
            )

    @property
    def rate_ticks_per_us(self) -> float:
        """Ticks accumulated per reference microsecond."""
        return 1.0 + self.drift_ppm * 1e-6

    def advance(self, ref_dt_us: float) -> None:
        """Advance the clock by an elapsed reference duration.

        Args:
            ref_dt_us: elapsed reference microseconds, must be >= 0.

        Raises:
            ValueError: if ref_dt_us is negative (reference time is monotonic).
        """
        if ref_dt_us < 0:
            raise ValueError(f"cannot advance by negative duration {ref_dt_us!r}")
        self.counter_ticks += ref_dt_us * self.rate_ticks_per_us
        self.ref_now_us += ref_dt_us

    def advance_to(self, ref_us: float) -> None:
        """Advance the clock to an absolute reference time (>= current)."""
        self.advance(ref_us - self.ref_now_us)

    def read_counter(self) -> float:
        """Current counter value in ticks; does not mutate the clock."""
        return self.counter_ticks

    def save_and_reset(self) -> float:
        """Atomically capture the counter and restart it from zero.

        The save and the reset are one step: no ticks are lost between them.
        After the call the counter reads 0 and the reset time is the clock's
        current reference time.

        Returns:
            The counter value immediately before the reset.
        """
        saved = self.counter_ticks
        self.counter_ticks = 0.0
        self.last_reset_ref_us = self.ref_now_us
        return saved
