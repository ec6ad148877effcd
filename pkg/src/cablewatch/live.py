"""Live datagram mode: the same protocol over real UDP sockets.

The supervisor and each sensor agent are separate endpoints exchanging the
same wire bytes as the simulator. Time, however, stays modeled: every agent
derives its receipt instants from (scenario, seed, period, sensor) exactly
like the simulated transport, so the values flowing through real sockets are
reproducible and a live run can be compared against its simulated twin. Wall
pacing only spaces the datagrams out; it never enters a timestamp.

Sensor agents report only events stamped after their first sync. The wire
format has no pre-sync flag, so a live supervisor could not tell such
events apart; a freshly powered sensor simply has nothing to say about the
time before its first period started.
"""

from __future__ import annotations

import logging
import socket
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

import yaml

from .clock import ClockState
from .protocol import CompletedPeriod, SensorProtocol, SupervisorProtocol
from .retiming import RetimedEvent
from .scenario import Scenario, ScenarioError, load_scenario, scenario_from_dict
from .simulate import EstimateRow, postprocess_periods
from .wave import WaveArrival, detect, quantize_to_sampling, simulate_rupture
from .wire import (
    SensorReport,
    WireFormatError,
    decode_sensor_report,
    decode_sync_frame,
    encode_sensor_report,
    encode_sync_frame,
)

log = logging.getLogger(__name__)

DEFAULT_SYNC_PORT = 47801
DEFAULT_REPORT_PORT = 47802
_RECV_BYTES = 65536
_POLL_S = 0.05


def default_sync_ports(sensor_ids, base: int = DEFAULT_SYNC_PORT,
                       report_port: int = DEFAULT_REPORT_PORT) -> dict[int, int]:
    """One listening port per sensor: base upwards, skipping the report port."""
    ports = {}
    port = base
    for sid in sorted(sensor_ids):
        while port == report_port:
            port += 1
        ports[sid] = port
        port += 1
    return ports


@dataclass(frozen=True)
class LiveConfig:
    """Endpoint wiring for one live run.

    sync_ports maps sensor id to its listening port; a port of 0 binds an
    OS-assigned one (in-process runs resolve it automatically; separate
    processes need fixed ports). broadcast_address switches the supervisor
    to a single broadcast datagram per frame, with every agent sharing
    sync_port_base.
    """

    scenario: Scenario
    periods: int
    host: str = "127.0.0.1"
    report_port: int = DEFAULT_REPORT_PORT
    sync_ports: Optional[Mapping[int, int]] = None
    sync_port_base: int = DEFAULT_SYNC_PORT
    broadcast_address: Optional[str] = None
    pace_s: float = 0.0
    timeout_s: float = 5.0

    def __post_init__(self) -> None:
        if self.periods < 2:
            raise ValueError(
                f"need at least 2 sync periods to close one, got {self.periods!r}"
            )
        if self.scenario.network.drop_probability != 0.0:
            raise ValueError(
                "live mode sends real datagrams; modeled drop_probability must be 0"
            )
        if self.pace_s < 0 or self.timeout_s <= 0:
            raise ValueError("pace_s must be >= 0 and timeout_s > 0")
        if self.sync_ports is not None:
            missing = set(self.scenario.geometry.sensor_ids) - set(self.sync_ports)
            if missing:
                raise ValueError(f"sync_ports missing sensors {sorted(missing)}")
            object.__setattr__(self, "sync_ports", dict(self.sync_ports))

    def resolved_sync_ports(self) -> dict[int, int]:
        if self.sync_ports is not None:
            return dict(self.sync_ports)
        if self.broadcast_address is not None:
            return {sid: self.sync_port_base for sid in self.scenario.geometry.sensor_ids}
        return default_sync_ports(
            self.scenario.geometry.sensor_ids, self.sync_port_base, self.report_port
        )


@dataclass
class LiveRunResult:
    """What a live supervisor collected, post-processed like a simulated run."""

    completed_periods: list[CompletedPeriod]
    retimed: list[RetimedEvent]
    estimates: list[EstimateRow]
    reports_received: int
    decode_errors: int


def _sensor_arrivals(scenario: Scenario, sensor_id: int) -> list[WaveArrival]:
    """This sensor's detection schedule, identical to the simulator's."""
    rows: list[WaveArrival] = []
    for r in scenario.ruptures:
        for arr in simulate_rupture(
            scenario.geometry,
            r,
            wave_speed_m_s=scenario.wave_speed_m_s,
            threshold_g=scenario.threshold_g,
            window_us=scenario.window_us,
            attenuation_per_m=scenario.attenuation_per_m,
        ):
            if arr.sensor_id == sensor_id:
                rows.append(arr)
    for sp in scenario.spurious_events:
        if sp.sensor_id != sensor_id:
            continue
        hit = detect(
            sp.sensor_id, sp.time_ref_us, sp.amplitude_g,
            scenario.threshold_g, scenario.window_us,
        )
        if hit is not None:
            rows.append(hit)
    rows.sort(key=lambda a: a.arrival_ref_us)
    return rows


class SensorAgent:
    """One sensor endpoint: listens for sync frames, sends reports.

    Binds its socket at construction so callers can start the supervisor
    afterwards without losing frames; run() blocks until the last expected
    frame or the wall deadline.
    """

    def __init__(
        self,
        config: LiveConfig,
        sensor_id: int,
        sync_port: Optional[int] = None,
        report_port: Optional[int] = None,
    ):
        if sensor_id not in config.scenario.geometry.sensor_ids:
            raise ValueError(f"unknown sensor id {sensor_id}")
        self.config = config
        self.sensor_id = sensor_id
        self.report_port = report_port if report_port is not None else config.report_port
        scenario = config.scenario
        self.protocol = SensorProtocol(
            sensor_id=sensor_id,
            clock=ClockState(drift_ppm=scenario.drift_for(sensor_id)),
        )
        self.net = scenario.network_model()
        self.arrivals = _sensor_arrivals(scenario, sensor_id)
        self._next_arrival = 0
        self.frames_seen = 0
        self.reports_sent = 0
        port = sync_port if sync_port is not None else config.resolved_sync_ports()[sensor_id]
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        if config.broadcast_address is not None:
            self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEPORT, 1)
        self.sock.bind((config.host if config.broadcast_address is None else "", port))
        self.sock.settimeout(_POLL_S)
        self.port = self.sock.getsockname()[1]

    def _stamp_arrivals_until(self, ref_us: float) -> None:
        while self._next_arrival < len(self.arrivals):
            arr = self.arrivals[self._next_arrival]
            if arr.arrival_ref_us > ref_us:
                break
            self.protocol.clock.advance_to(arr.arrival_ref_us)
            ticks = quantize_to_sampling(
                self.protocol.clock.read_counter(), self.config.scenario.sampling_period_ticks
            )
            self.protocol.on_detection(ticks, arr.max_amplitude_g)
            self._next_arrival += 1

    def _wire_report(self, report: SensorReport, pre_sync_flags) -> Optional[SensorReport]:
        events = tuple(
            ev for ev, pre in zip(report.events, pre_sync_flags) if not pre
        )
        if len(events) != len(report.events):
            log.info(
                "sensor %d: omitting %d pre-sync event(s) from live report",
                self.sensor_id, len(report.events) - len(events),
            )
        return SensorReport(
            sensor_id=report.sensor_id,
            period_index=report.period_index,
            saved_counter_ticks=report.saved_counter_ticks,
            events=events,
        )

    def handle_sync(self, payload: bytes, out_sock: socket.socket) -> None:
        frame = decode_sync_frame(payload)
        t_us = self.config.scenario.sync_period_T_us
        modeled = self.net.sync_receipt_at(
            frame.period_index * t_us, frame.period_index, self.sensor_id
        )
        assert modeled is not None  # LiveConfig forbids modeled drops
        # a replayed or reordered frame models earlier than the clock has
        # advanced; the device's clock cannot run backwards
        receipt = max(modeled, self.protocol.clock.ref_now_us)
        self._stamp_arrivals_until(receipt)
        self.protocol.clock.advance_to(receipt)
        result = self.protocol.on_sync(frame)
        self.frames_seen += 1
        if result.report is None:
            return
        report = self._wire_report(result.report, result.pre_sync_flags)
        try:
            payload_out = encode_sensor_report(report)
        except WireFormatError as e:
            log.error("sensor %d: report refused at send: %s", self.sensor_id, e)
            return
        out_sock.sendto(payload_out, (self.config.host, self.report_port))
        self.reports_sent += 1

    def run(self) -> None:
        deadline = time.monotonic() + self.config.timeout_s
        out = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        try:
            while self.frames_seen < self.config.periods and time.monotonic() < deadline:
                try:
                    data, _ = self.sock.recvfrom(_RECV_BYTES)
                except socket.timeout:
                    continue
                try:
                    self.handle_sync(data, out)
                except WireFormatError as e:
                    log.warning("sensor %d: undecodable datagram: %s", self.sensor_id, e)
        finally:
            out.close()
            self.sock.close()


class LiveSupervisor:
    """The central endpoint: broadcasts sync frames, collects reports.

    Frame k is stamped with modeled time k*T regardless of wall pacing, so
    agents reproduce the simulator's receipt instants exactly.
    """

    def __init__(self, config: LiveConfig, sync_targets: Optional[Mapping[int, int]] = None):
        self.config = config
        scenario = config.scenario
        self.protocol = SupervisorProtocol(
            roster=scenario.geometry.sensor_ids,
            period_t_us=scenario.sync_period_T_us,
            start_ref_us=0.0,
        )
        self.targets = dict(sync_targets) if sync_targets is not None else config.resolved_sync_ports()
        self.completed: dict[int, CompletedPeriod] = {}
        self.reports_received = 0
        self.decode_errors = 0
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((config.host, config.report_port))
        self.sock.settimeout(_POLL_S)
        self.port = self.sock.getsockname()[1]

    def _drain_one(self) -> None:
        """Receive at most one report, waiting up to the socket poll timeout."""
        try:
            data, _ = self.sock.recvfrom(_RECV_BYTES)
        except socket.timeout:
            return
        try:
            report = decode_sensor_report(data)
        except WireFormatError as e:
            self.decode_errors += 1
            log.warning("supervisor: undecodable report datagram: %s", e)
            return
        self.reports_received += 1
        done = self.protocol.on_report(report)
        if done is not None:
            self.completed[done.period_index] = done

    def run(self) -> LiveRunResult:
        config = self.config
        t_us = config.scenario.sync_period_T_us
        out = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        if config.broadcast_address is not None:
            out.setsockopt(socket.SOL_SOCKET, socket.SO_BROADCAST, 1)
        try:
            for k in range(config.periods):
                frame = self.protocol.tick(k * t_us)
                assert frame is not None and frame.period_index == k
                payload = encode_sync_frame(frame)
                if config.broadcast_address is not None:
                    out.sendto(payload, (config.broadcast_address, config.sync_port_base))
                else:
                    for sid in sorted(self.targets):
                        out.sendto(payload, (config.host, self.targets[sid]))
                if config.pace_s:
                    end = time.monotonic() + config.pace_s
                    while time.monotonic() < end:
                        self._drain_one()

            expected = set(range(config.periods - 1))
            deadline = time.monotonic() + config.timeout_s
            while expected - set(self.completed) and time.monotonic() < deadline:
                self._drain_one()
            for k in sorted(expected - set(self.completed)):
                log.warning("supervisor: period %d timed out, releasing partial", k)
                done = self.protocol.expire(k)
                if done is not None:
                    self.completed[k] = done
        finally:
            out.close()
            self.sock.close()
        retimed, estimates = postprocess_periods(config.scenario, self.completed, {})
        return LiveRunResult(
            completed_periods=[self.completed[k] for k in sorted(self.completed)],
            retimed=retimed,
            estimates=estimates,
            reports_received=self.reports_received,
            decode_errors=self.decode_errors,
        )


def run_live(config: LiveConfig) -> LiveRunResult:
    """Run supervisor and every agent in one process over real sockets.

    Agents bind before the first frame is sent; OS-assigned ports (0) are
    resolved automatically, which keeps parallel test runs from colliding.
    """
    ports = config.resolved_sync_ports()
    supervisor = LiveSupervisor(config, sync_targets={})
    agents = [
        SensorAgent(config, sid, sync_port=ports[sid], report_port=supervisor.port)
        for sid in sorted(config.scenario.geometry.sensor_ids)
    ]
    supervisor.targets = {a.sensor_id: a.port for a in agents}
    threads = [
        threading.Thread(target=a.run, name=f"sensor-{a.sensor_id}", daemon=True)
        for a in agents
    ]
    for t in threads:
        t.start()
    try:
        result = supervisor.run()
    finally:
        for t in threads:
            t.join(timeout=config.timeout_s)
    return result


_LIVE_FIELDS = {
    "scenario", "periods", "host", "report_port", "sync_ports",
    "sync_port_base", "broadcast_address", "pace_s", "timeout_s",
}


def load_live_config(source: Union[str, Path]) -> LiveConfig:
    """Load a live-run config: scenario (inline mapping or file path) plus wiring."""
    path = Path(source)
    if not path.exists():
        raise ScenarioError([f"live config file not found: {path}"])
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ScenarioError([f"live config is not valid YAML: {e}"]) from None
    if not isinstance(raw, dict):
        raise ScenarioError(["live config must be a mapping"])
    problems = [f"unknown field '{k}'" for k in raw if k not in _LIVE_FIELDS]
    if "scenario" not in raw:
        problems.append("field 'scenario' is required")
    if "periods" not in raw:
        problems.append("field 'periods' is required")
    if problems:
        raise ScenarioError(problems)
    sc = raw["scenario"]
    if isinstance(sc, str):
        scenario = load_scenario(path.parent / sc if not Path(sc).is_absolute() else sc)
    elif isinstance(sc, dict):
        scenario = scenario_from_dict(sc)
    else:
        raise ScenarioError(["field 'scenario' must be a mapping or a file path"])
    sync_ports = raw.get("sync_ports")
    if sync_ports is not None:
        sync_ports = {int(k): int(v) for k, v in sync_ports.items()}
    try:
        return LiveConfig(
            scenario=scenario,
            periods=int(raw["periods"]),
            host=str(raw.get("host", "127.0.0.1")),
            report_port=int(raw.get("report_port", DEFAULT_REPORT_PORT)),
            sync_ports=sync_ports,
            sync_port_base=int(raw.get("sync_port_base", DEFAULT_SYNC_PORT)),
            broadcast_address=raw.get("broadcast_address"),
            pace_s=float(raw.get("pace_s", 0.0)),
            timeout_s=float(raw.get("timeout_s", 5.0)),
        )
    except ValueError as e:
        raise ScenarioError([str(e)]) from None
