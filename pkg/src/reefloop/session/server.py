"""Operator channel: one duplex TCP socket, newline-delimited UTF-8 JSON.

server -> console:
    {"type":"frame","seq":n,"png_b64":...,"box":[x,y,w,h]|null,
     "mode":"...","confidence":c}            (throttled to console capacity)
    {"type":"telemetry","t":s,"depth":m,"altitude":m,"heading":rad,
     "mode":"..."}                           (every tick)

console -> server:
    {"type":"init_box","box":[x,y,w,h]}
    {"type":"override","surge":..,"sway":..,"heave":..,"yaw":..}
    {"type":"release"}
    {"type":"reinit"}

The control loop never blocks on console I/O: outbound messages go through
a sender thread; when the console cannot keep up, stale frames are replaced
(a drop counter increments) and telemetry falls back to dropping its oldest
entries. Exactly one console may be attached; a second connection is
refused with an explicit reason. A disconnect leaves the episode running.
"""

from __future__ import annotations

import base64
import json
import logging
import queue
import socket
import threading
from collections import deque

from reefloop.bridge import _encode_png

log = logging.getLogger(__name__)

TELEMETRY_QUEUE_MAX = 256


class OperatorServer:
    """Owns the listening socket and at most one console connection."""

    def __init__(self, bind: str = "127.0.0.1:7071"):
        host, _, port = bind.rpartition(":")
        self.address = (host or "127.0.0.1", int(port))
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind(self.address)
        self._listener.listen(2)
        self.port = self._listener.getsockname()[1]
        self._lock = threading.Lock()
        self._client: socket.socket | None = None
        self._commands: queue.Queue = queue.Queue()
        self._telemetry: deque = deque(maxlen=TELEMETRY_QUEUE_MAX)
        self._pending_frame: dict | None = None
        self._wake = threading.Condition(self._lock)
        self._closing = False
        self.frames_dropped = 0
        self.telemetry_dropped = 0
        self._frame_seq = 0
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    # -- connection management ----------------------------------------------

    def _accept_loop(self):
        while not self._closing:
            try:
                conn, addr = self._listener.accept()
            except OSError:
                return
            with self._lock:
                if self._client is not None:
                    try:
                        conn.sendall(
                            (json.dumps({"type": "err", "msg": "operator console already connected"}) + "\n").encode()
                        )
                        conn.close()
                    except OSError:
                        pass
                    continue
                self._client = conn
            log.info("operator console connected from %s", addr)
            threading.Thread(target=self._reader_loop, args=(conn,), daemon=True).start()
            threading.Thread(target=self._sender_loop, args=(conn,), daemon=True).start()

    def _drop_client(self, conn):
        with self._wake:
            if self._client is conn:
                self._client = None
                self._pending_frame = None
                self._telemetry.clear()  # a later console should not see stale state
                self._wake.notify_all()
        try:
            conn.close()
        except OSError:
            pass

    def _reader_loop(self, conn):
        try:
            fh = conn.makefile("rb")
            for raw in fh:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    continue
                if isinstance(msg, dict) and "type" in msg:
                    self._commands.put(msg)
        except OSError:
            pass
        finally:
            log.info("operator console disconnected")
            self._drop_client(conn)

    def _sender_loop(self, conn):
        try:
            while True:
                with self._wake:
                    while (
                        self._client is conn
                        and not self._telemetry
                        and self._pending_frame is None
                        and not self._closing
                    ):
                        self._wake.wait(timeout=0.5)
                    if self._client is not conn or self._closing:
                        return
                    batch = list(self._telemetry)
                    self._telemetry.clear()
                    frame = self._pending_frame
                    self._pending_frame = None
                for msg in batch:
                    conn.sendall((json.dumps(msg, separators=(",", ":")) + "\n").encode())
                if frame is not None:
                    conn.sendall((json.dumps(frame, separators=(",", ":")) + "\n").encode())
        except OSError:
            self._drop_client(conn)

    @property
    def connected(self) -> bool:
        with self._lock:
            return self._client is not None

    # -- the control-loop facing API (never blocks) ---------------------------

    def drain_commands(self) -> list[dict]:
        out = []
        while True:
            try:
                out.append(self._commands.get_nowait())
            except queue.Empty:
                return out

    def publish_telemetry(self, t, depth, altitude, heading, mode) -> None:
        with self._wake:
            if self._client is None:
                return
            if len(self._telemetry) == self._telemetry.maxlen:
                self.telemetry_dropped += 1
            self._telemetry.append(
                {
                    "type": "telemetry",
                    "t": t,
                    "depth": depth,
                    "altitude": altitude,
                    "heading": heading,
                    "mode": mode,
                }
            )
            self._wake.notify_all()

    def publish_frame(self, frame, box, mode, confidence) -> None:
        with self._wake:
            if self._client is None:
                return
            if self._pending_frame is not None:
                self.frames_dropped += 1  # console too slow: replace the stale frame
            self._frame_seq += 1
            png = base64.b64encode(_encode_png(frame)).decode("ascii")
            self._pending_frame = {
                "type": "frame",
                "seq": self._frame_seq,
                "png_b64": png,
                "box": None if box is None else [box.x, box.y, box.w, box.h],
                "mode": mode,
                "confidence": confidence,
            }
            self._wake.notify_all()

    def publish_tick(self, frame, tick, scenario) -> None:
        """Convenience for the episode loop: telemetry + throttled frame."""
        self.publish_telemetry(
            tick.t,
            tick.vehicle_position[2],
            tick.sensor_altitude,
            tick.vehicle_heading,
            tick.mode,
        )
        self.publish_frame(frame, tick.tracker_box, tick.mode, tick.tracker_confidence)

    def close(self) -> None:
        self._closing = True
        with self._wake:
            client = self._client
            self._client = None
            self._wake.notify_all()
        if client is not None:
            try:
                client.close()
            except OSError:
                pass
        try:
            self._listener.close()
        except OSError:
            pass
