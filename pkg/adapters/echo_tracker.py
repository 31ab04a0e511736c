#!/usr/bin/env python3
"""Reference adapter for the tracker wire protocol.

Speaks the newline-delimited JSON protocol on stdin/stdout and answers every
frame with the initialization box, optionally jittered and/or delayed. Useful
as a test double and as the template for wrapping a real tracker: replace
`predict()` with your model and keep the message loop.

    python3 adapters/echo_tracker.py [--jitter-std PX] [--seed N]
                                     [--delay-ms MS] [--timing-log PATH]
                                     [--version N] [--frames path|inline]
"""

import argparse
import json
import random
import sys
import time

PROTOCOL_VERSION = 1


def reply(obj):
    sys.stdout.write(json.dumps(obj, separators=(",", ":")) + "\n")
    sys.stdout.flush()


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jitter-std", type=float, default=0.0, help="gaussian px noise on the echoed box")
    ap.add_argument("--seed", type=int, default=None, help="jitter RNG seed (default: nondeterministic)")
    ap.add_argument("--delay-ms", type=float, default=0.0, help="simulated inference time per frame")
    ap.add_argument("--timing-log", default=None, help="write self-measured timing JSON here on bye")
    ap.add_argument("--version", type=int, default=PROTOCOL_VERSION, help="protocol version to claim")
    ap.add_argument("--frames", choices=("path", "inline"), default="path")
    ap.add_argument("--name", default="echo")
    ap.add_argument("--max-frames", type=int, default=0,
                    help="exit abruptly after N frames (crash-injection for tests)")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    box = None
    handled_ms = []

    for raw in sys.stdin:
        t0 = time.perf_counter()
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError:
            reply({"type": "err", "msg": "malformed request"})
            continue
        kind = msg.get("type")
        if kind == "hello":
            reply({"type": "hello", "version": args.version, "name": args.name, "frames": args.frames})
        elif kind == "init":
            try:
                x, y, w, h = msg["bbox"]
            except (KeyError, TypeError, ValueError):
                reply({"type": "err", "msg": "bad bbox"})
                continue
            box = [float(x), float(y), float(w), float(h)]
            reply({"type": "ok"})
        elif kind == "frame":
            if box is None:
                reply({"type": "err", "msg": "frame before init"})
                continue
            if args.max_frames and len(handled_ms) >= args.max_frames:
                sys.exit(1)  # simulated crash mid-stream
            if args.delay_ms > 0:
                time.sleep(args.delay_ms / 1000.0)
            x, y, w, h = box
            if args.jitter_std > 0:
                x += rng.gauss(0.0, args.jitter_std)
                y += rng.gauss(0.0, args.jitter_std)
            reply({"type": "bbox", "x": x, "y": y, "w": w, "h": h, "score": 0.9})
            handled_ms.append((time.perf_counter() - t0) * 1000.0)
        elif kind == "bye":
            break
        else:
            reply({"type": "err", "msg": f"unknown message type {kind!r}"})

    if args.timing_log and handled_ms:
        with open(args.timing_log, "w") as f:
            json.dump({"n": len(handled_ms), "mean_ms": sum(handled_ms) / len(handled_ms)}, f)


if __name__ == "__main__":
    main()
