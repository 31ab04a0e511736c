import json
import socket
import sys
import threading
import time
from pathlib import Path

import numpy as np
import pytest

from reefloop.bridge import (
    BridgeEndpoint,
    BridgeError,
    BridgeTimeout,
    bridge_connect,
    parse_endpoint,
)
from reefloop.geometry import BBox
from reefloop.trackers import Frame

ADAPTER = Path(__file__).resolve().parents[1] / "adapters" / "echo_tracker.py"


def adapter_cmd(*extra):
    return " ".join([sys.executable, str(ADAPTER), *extra])


def make_frame(k=0):
    rng = np.random.default_rng(k)
    return Frame(pixels=rng.integers(0, 255, size=(60, 80, 3), dtype=np.uint8), timestamp=0.1 * k)


INIT_BOX = BBox(10, 20, 30, 25)


class TestStdioBridge:
    def test_echo_returns_init_box(self):
        with bridge_connect(adapter_cmd()) as tracker:
            assert tracker.name == "echo"
            out = tracker.init(make_frame(), INIT_BOX)
            assert out.box == INIT_BOX
            for k in range(5):
                out = tracker.track(make_frame(k))
                assert out.box == INIT_BOX
                assert out.confidence == pytest.approx(0.9)
                assert out.latency_ms > 0.0

    def test_inline_frames(self):
        with bridge_connect(adapter_cmd("--frames", "inline")) as tracker:
            tracker.init(make_frame(), INIT_BOX)
            out = tracker.track(make_frame(1))
            assert out.box == INIT_BOX

    def test_version_mismatch(self):
        with pytest.raises(BridgeError, match="version mismatch"):
            bridge_connect(adapter_cmd("--version", "2"))

    def test_timeout(self):
        endpoint = parse_endpoint(adapter_cmd("--delay-ms", "500"), timeout_ms=100.0)
        tracker = bridge_connect(endpoint)
        tracker.init(make_frame(), INIT_BOX)
        with pytest.raises(BridgeTimeout):
            tracker.track(make_frame(1))
        tracker.close()

    def test_connection_refused_command(self):
        with pytest.raises(BridgeError, match="cannot start"):
            bridge_connect("/definitely/not/a/binary")

    def test_latency_close_to_adapter_self_measurement(self, tmp_path):
        timing = tmp_path / "timing.json"
        with bridge_connect(adapter_cmd("--delay-ms", "40", "--timing-log", str(timing))) as tracker:
            tracker.init(make_frame(), INIT_BOX)
            latencies = [tracker.track(make_frame(k)).latency_ms for k in range(50)]
        for _ in range(100):  # adapter writes the log on bye
            if timing.exists():
                break
            time.sleep(0.02)
        self_measured = json.loads(timing.read_text())
        assert self_measured["n"] == 50
        client_mean = sum(latencies) / len(latencies)
        assert client_mean == pytest.approx(self_measured["mean_ms"], rel=0.05)

    def test_jitter_runs_differ(self):
        def one_run(seed):
            with bridge_connect(adapter_cmd("--jitter-std", "2.0", "--seed", str(seed))) as t:
                t.init(make_frame(), INIT_BOX)
                return [t.track(make_frame(k)).box for k in range(5)]

        assert one_run(1) != one_run(2)


class _ScriptServer:
    """Single-shot TCP peer with a scripted reply table."""

    def __init__(self, replies):
        self.replies = replies
        self.sock = socket.socket()
        self.sock.bind(("127.0.0.1", 0))
        self.sock.listen(1)
        self.port = self.sock.getsockname()[1]
        self.thread = threading.Thread(target=self._serve, daemon=True)
        self.thread.start()

    def _serve(self):
        conn, _ = self.sock.accept()
        fh = conn.makefile("rb")
        for raw in fh:
            msg = json.loads(raw)
            reply = self.replies.get(msg["type"])
            if reply is None:
                break
            conn.sendall((json.dumps(reply) + "\n").encode())
        conn.close()


class TestTcpBridge:
    def test_tcp_transport(self):
        server = _ScriptServer(
            {
                "hello": {"type": "hello", "version": 1, "name": "tcp-double", "frames": "inline"},
                "init": {"type": "ok"},
                "frame": {"type": "bbox", "x": 10, "y": 20, "w": 30, "h": 40, "score": 0.9},
            }
        )
        tracker = bridge_connect(f"tcp:127.0.0.1:{server.port}")
        assert tracker.name == "tcp-double"
        tracker.init(make_frame(), INIT_BOX)
        out = tracker.track(make_frame(1))
        assert out.box == BBox(10, 20, 30, 40)
        assert out.confidence == pytest.approx(0.9)
        tracker.close()

    def test_malformed_reply_missing_field(self):
        server = _ScriptServer(
            {
                "hello": {"type": "hello", "version": 1, "name": "bad", "frames": "inline"},
                "init": {"type": "ok"},
                "frame": {"type": "bbox", "x": 10, "y": 20, "h": 40, "score": 0.9},  # no w
            }
        )
        tracker = bridge_connect(f"tcp:127.0.0.1:{server.port}")
        tracker.init(make_frame(), INIT_BOX)
        with pytest.raises(BridgeError, match="malformed bbox"):
            tracker.track(make_frame(1))
        tracker.close()

    def test_disconnect_mid_stream(self):
        server = _ScriptServer(
            {
                "hello": {"type": "hello", "version": 1, "name": "flaky", "frames": "inline"},
                "init": {"type": "ok"},
                # no "frame" entry: server hangs up on the first frame
            }
        )
        tracker = bridge_connect(f"tcp:127.0.0.1:{server.port}")
        tracker.init(make_frame(), INIT_BOX)
        with pytest.raises(BridgeError, match="disconnected"):
            tracker.track(make_frame(1))
        tracker.close()

    def test_connection_refused(self):
        with pytest.raises(OSError):
            bridge_connect("tcp:127.0.0.1:1")


def test_parse_endpoint():
    e = parse_endpoint("tcp:10.0.0.5:7000")
    assert (e.transport, e.host, e.port) == ("tcp", "10.0.0.5", 7000)
    e2 = parse_endpoint("python3 adapter.py --flag x")
    assert e2.transport == "stdio"
    assert e2.command == ("python3", "adapter.py", "--flag", "x")
    with pytest.raises(ValueError):
        parse_endpoint("tcp:nope")
    with pytest.raises(ValueError):
        BridgeEndpoint(transport="carrier-pigeon")
