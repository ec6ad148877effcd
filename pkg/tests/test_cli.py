"""Command-line interface."""

import re
import textwrap
import threading
import time

import pytest

from cablewatch.cli import main

SCENARIO_YAML = textwrap.dedent(
    """
    geometry:
      sensor_ids: [1, 2, 3, 4]
      positions_m: [0.0, 10.0, 20.0, 30.0]
    drift_ppm: {1: 37, 2: -12, 3: 50, 4: -50}
    ruptures:
      - {position_m: 14.0, time_ref_us: 1500000}
    seed: 3
    """
)

GEOMETRY_YAML = "geometry:\n  sensor_ids: [1, 2, 3, 4]\n  positions_m: [0.0, 10.0, 20.0, 30.0]\n"


@pytest.fixture
def scenario_file(tmp_path):
    p = tmp_path / "scene.yaml"
    p.write_text(SCENARIO_YAML)
    return p


class TestSimulate:
    def test_writes_four_csvs_and_exits_zero(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["simulate", str(scenario_file), "--out", str(out)])
        assert rc == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["detections.csv", "estimates.csv", "retimed.csv", "summary.csv"]
        stdout = capsys.readouterr().out
        assert "estimates_matched: 1" in stdout
        assert "wrote" in stdout

    def test_missing_scenario_exits_nonzero(self, tmp_path, capsys):
        rc = main(["simulate", str(tmp_path / "nope.yaml"), "--out", str(tmp_path)])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_invalid_scenario_reports_every_problem(self, tmp_path, capsys):
        p = tmp_path / "bad.yaml"
        p.write_text("geometry:\n  sensor_ids: [1, 2]\n  positions_m: [0.0, 5.0]\ncolour: red\n")
        rc = main(["simulate", str(p), "--out", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "colour" in err
        assert "at least 3 sensors" in err

    def test_seed_override_changes_output(self, scenario_file, tmp_path, capsys):
        main(["simulate", str(scenario_file), "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["simulate", str(scenario_file), "--out", str(tmp_path / "b"), "--seed", "2"])
        a = (tmp_path / "a" / "retimed.csv").read_bytes()
        b = (tmp_path / "b" / "retimed.csv").read_bytes()
        assert a != b


class TestLocalize:
    def test_localizes_exported_retimed_csv(self, scenario_file, tmp_path, capsys):
        out = tmp_path / "out"
        main(["simulate", str(scenario_file), "--out", str(out)])
        geom = tmp_path / "geom.yaml"
        geom.write_text(GEOMETRY_YAML)
        capsys.readouterr()
        rc = main(["localize", str(out / "retimed.csv"), "--geometry", str(geom)])
        assert rc == 0
        stdout = capsys.readouterr().out
        assert "x_est_m" in stdout
        # the 14 m rupture shows up in the offline pass too
        assert any(
            line.split()[3].startswith("14.0") or line.split()[3].startswith("13.9")
            for line in stdout.splitlines()[1:]
            if line.strip()
        )

    def test_empty_csv_is_fine(self, tmp_path, capsys):
        p = tmp_path / "retimed.csv"
        p.write_text("period_index,sensor_id,retimed_us,raw_ticks,amplitude_g,flag\n")
        geom = tmp_path / "geom.yaml"
        geom.write_text(GEOMETRY_YAML)
        rc = main(["localize", str(p), "--geometry", str(geom)])
        assert rc == 0
        assert "no retimed events" in capsys.readouterr().out


class TestSyncDemo:
    def test_prints_cancellation_table(self, capsys):
        rc = main(["sync-demo", "--periods", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "raw_spread_us" in out
        lines = [l for l in out.splitlines() if l and l[0].isspace() or l[:1].isdigit()]
        rows = [l for l in out.splitlines() if l.strip() and l.strip()[0].isdigit()]
        assert len(rows) == 3
        # raw spread is ~25000 us at +-50 ppm over 250 ms; retimed collapses
        last = rows[-1].split()
        assert float(last[-2]) > 1.0
        assert float(last[-1]) < 0.01

    def test_bad_offset_rejected(self, capsys):
        rc = main(["sync-demo", "--event-offset-us", "2000000"])
        assert rc == 1


class TestMonteCarlo:
    def test_prints_percentiles(self, capsys):
        rc = main(["montecarlo", "--trials", "20", "--jitter-us", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "p50 error:" in out
        assert "p99 error:" in out
        assert "max error:" in out

    def test_accepts_scenario_file(self, scenario_file, capsys):
        rc = main(["montecarlo", str(scenario_file), "--trials", "5"])
        assert rc == 0
        assert "trials:     5" in capsys.readouterr().out


class TestLiveCommands:
    def test_supervise_and_agents_complete_over_loopback(self, tmp_path, capsys):
        # fixed ports picked from the ephemeral range to avoid collisions
        cfg = tmp_path / "live.yaml"
        cfg.write_text(
            textwrap.dedent(
                """
                periods: 3
                report_port: 52611
                sync_ports: {1: 52612, 2: 52613, 3: 52614, 4: 52615}
                timeout_s: 10.0
                scenario:
                  geometry:
                    sensor_ids: [1, 2, 3, 4]
                    positions_m: [0.0, 10.0, 20.0, 30.0]
                  drift_ppm: {1: 37, 2: -12, 3: 50, 4: -50}
                  ruptures:
                    - {position_m: 14.0, time_ref_us: 1500000}
                """
            )
        )
        rcs = {}
        threads = [
            threading.Thread(
                target=lambda sid=sid: rcs.__setitem__(
                    sid, main(["agent", str(cfg), "--sensor-id", str(sid)])
                ),
                daemon=True,
            )
            for sid in (1, 2, 3, 4)
        ]
        for t in threads:
            t.start()
        # agents print their listening line only after binding; wait for all
        # four before the supervisor starts sending (agents start first in a
        # real deployment too)
        collected = []
        deadline = time.monotonic() + 5.0
        while (
            sum(s.count("listening on") for s in collected) < 4
            and time.monotonic() < deadline
        ):
            collected.append(capsys.readouterr().out)
            time.sleep(0.01)
        rc = main(["supervise", str(cfg)])
        for t in threads:
            t.join(timeout=10.0)
        assert rc == 0
        assert rcs == {1: 0, 2: 0, 3: 0, 4: 0}
        out = "".join(collected) + capsys.readouterr().out
        assert "period 0: 4 reports, complete" in out
        assert "period 1: 4 reports, complete" in out
        m = re.search(r"x_est = ([0-9.]+) m", out)
        assert m is not None
        assert abs(float(m.group(1)) - 14.0) <= 0.15

    def test_agent_unknown_sensor_errors(self, tmp_path, capsys):
        cfg = tmp_path / "live.yaml"
        cfg.write_text(
            "periods: 2\n"
            "scenario:\n"
            "  geometry:\n"
            "    sensor_ids: [1, 2, 3]\n"
            "    positions_m: [0.0, 1.0, 2.0]\n"
        )
        rc = main(["agent", str(cfg), "--sensor-id", "9"])
        assert rc == 1
        assert "unknown sensor id 9" in capsys.readouterr().err
