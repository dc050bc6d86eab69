"""Line-delimited JSON bridge so agents in other processes can drive the env.

The environment is the server. Every message is one JSON object on one line
with a ``type`` field. Protocol version 1:

server -> agent, once after connecting::

    {"type": "hello", "protocol": "evgrid-bridge", "version": 1,
     "mode": "V2G", "chargers": [...], "buildings": [...],
     "observation_fields": ["state", "soc", "est_departure",
                            "req_soc_departure", "est_arrival", "est_soc_arrival"],
     "action_range": [-1.0, 1.0], "horizon": 8760, "timestep_hours": 1.0,
     "capabilities": ["reset", "observe", "act", "close"]}

agent -> server and the replies:

* ``{"type": "reset", "seed": 0}`` (seed optional) ->
  ``{"type": "observation", "t", "observations", "context"}``
* ``{"type": "observe"}`` -> the same observation message for the current step
* ``{"type": "act", "actions": [...]}`` (one per charger, in hello order) ->
  ``{"type": "step", "t", "observations", "net_electricity", "rewards",
  "flags", "done", "context"}``; after the last step the server also sends
  ``{"type": "done", "t"}``
* ``{"type": "close"}`` ends the session

Anything malformed is answered with ``{"type": "error", "message"}`` and the
session continues. Floats are written with shortest round-trip repr, so
values survive the trip exactly.
"""

from __future__ import annotations

import json
import socket
import sys
import time
from typing import Optional, Tuple

import numpy as np

from .controllers import no_control
from .env import OBS_FIELDS, ActionError, EvChargingEnv, InvariantViolation

PROTOCOL = "evgrid-bridge"
VERSION = 1
CONNECT_RETRIES = 20
RETRY_DELAY = 0.25


class BridgeError(RuntimeError):
    pass


def send(writer, msg: dict) -> None:
    writer.write(json.dumps(msg, separators=(",", ":")) + "\n")
    writer.flush()


def receive(reader) -> Optional[dict]:
    line = reader.readline()
    if not line:
        return None
    return json.loads(line)


def hello(env: EvChargingEnv) -> dict:
    return {
        "type": "hello",
        "protocol": PROTOCOL,
        "version": VERSION,
        "mode": env.mode.value,
        "chargers": list(env.charger_ids),
        "buildings": list(env.buildings),
        "observation_fields": list(OBS_FIELDS),
        "action_range": list(env.action_range),
        "horizon": env.horizon,
        "timestep_hours": env.dt,
        "capabilities": ["reset", "observe", "act", "close"],
    }


def _observation(env):
    return {"type": "observation", "t": env.t, "observations": env.observations.tolist(),
            "context": env.context()}


def serve_session(env: EvChargingEnv, reader, writer, seed: Optional[int] = None) -> EvChargingEnv:
    """Answer one agent until it closes, disconnects or the episode ends.

    ``seed`` is used for resets that carry no seed of their own.
    """
    send(writer, hello(env))
    started = False
    while True:
        try:
            msg = receive(reader)
        except json.JSONDecodeError as err:
            send(writer, {"type": "error", "message": f"invalid JSON: {err}"})
            continue
        if msg is None:
            break
        kind = msg.get("type") if isinstance(msg, dict) else None
        if kind == "reset":
            env.reset(msg.get("seed", seed))
            started = True
            send(writer, _observation(env))
        elif kind == "observe":
            if not started:
                send(writer, {"type": "error", "message": "reset first"})
                continue
            send(writer, _observation(env))
        elif kind == "act":
            if not started or env.done:
                send(writer, {"type": "error", "message": "no running episode; send reset"})
                continue
            try:
                res = env.step(msg.get("actions"))
            except (ActionError, TypeError, ValueError) as err:
                send(writer, {"type": "error", "message": str(err)})
                continue
            except InvariantViolation as err:
                send(writer, {"type": "error", "message": f"invariant violated: {err}"})
                raise
            send(writer, {
                "type": "step", "t": res.t, "observations": res.observations.tolist(),
                "net_electricity": res.net_electricity.tolist(), "rewards": res.rewards.tolist(),
                "flags": res.flags.tolist(), "done": res.done, "context": env.context(),
            })
            if res.done:
                send(writer, {"type": "done", "t": res.t})
                break
        elif kind == "close":
            break
        else:
            send(writer, {"type": "error", "message": f"unknown message type {kind!r}"})
    return env


def serve_stdio(env: EvChargingEnv, seed: Optional[int] = None) -> EvChargingEnv:
    return serve_session(env, sys.stdin, sys.stdout, seed)


def parse_address(addr: str) -> Tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"expected host:port, got {addr!r}")
    return host or "127.0.0.1", int(port)


def serve_tcp(env: EvChargingEnv, addr: str, seed: Optional[int] = None, timeout: float = 60.0,
              on_listen=None) -> EvChargingEnv:
    """Accept one agent on ``addr`` and serve it.

    Waits up to ``timeout`` seconds for the agent; there is no retry on the
    server side, so an agent that never connects ends the run with
    :class:`BridgeError`.
    """
    host, port = parse_address(addr)
    with socket.create_server((host, port)) as srv:
        srv.settimeout(timeout)
        if on_listen is not None:
            on_listen(srv.getsockname()[:2])
        try:
            conn, _ = srv.accept()
        except socket.timeout:
            raise BridgeError(f"no agent connected to {host}:{port} within {timeout:g} s "
                              f"(the server waits once and does not retry)") from None
        with conn:
            conn.settimeout(None)
            r = conn.makefile("r", encoding="utf-8", newline="\n")
            w = conn.makefile("w", encoding="utf-8", newline="\n")
            try:
                return serve_session(env, r, w, seed)
            finally:
                for f in (r, w):
                    try:
                        f.close()
                    except OSError:
                        pass


def connect(addr: str, retries: int = CONNECT_RETRIES, delay: float = RETRY_DELAY):
    """Agent side of TCP: retry ``retries`` times ``delay`` seconds apart."""
    host, port = parse_address(addr)
    last = None
    for _ in range(retries):
        try:
            sock = socket.create_connection((host, port))
            return sock, sock.makefile("r", encoding="utf-8"), sock.makefile("w", encoding="utf-8")
        except OSError as err:
            last = err
            time.sleep(delay)
    raise BridgeError(f"cannot reach {host}:{port} after {retries} attempts {delay:g} s apart: {last}")


def echo_agent(reader, writer, seed: Optional[int] = None, decide=no_control) -> int:
    """Minimal external agent: answers every observation with ``decide``.

    Returns the number of steps taken.
    """
    first = receive(reader)
    if not first or first.get("type") != "hello" or first.get("protocol") != PROTOCOL:
        raise BridgeError(f"unexpected greeting {first!r}")
    send(writer, {"type": "reset"} if seed is None else {"type": "reset", "seed": seed})
    msg = receive(reader)
    steps = 0
    while msg is not None:
        kind = msg.get("type")
        if kind == "error":
            raise BridgeError(msg.get("message", "bridge error"))
        if kind == "done":
            break
        if kind == "step" and msg["done"]:
            msg = receive(reader)
            continue
        obs = np.array(msg["observations"], dtype=float)
        send(writer, {"type": "act", "actions": [float(a) for a in decide(obs)]})
        steps += 1
        msg = receive(reader)
    try:
        send(writer, {"type": "close"})
    except (OSError, ValueError):
        pass
    return steps


def main(argv=None) -> int:
    """``python3 -m evgrid.bridge host:port``: run the echo agent over TCP."""
    import argparse

    ap = argparse.ArgumentParser(prog="evgrid-echo-agent")
    ap.add_argument("address")
    ap.add_argument("--seed", type=int)
    ns = ap.parse_args(argv)
    sock, r, w = connect(ns.address)
    with sock:
        n = echo_agent(r, w, ns.seed)
    print(f"echo agent finished after {n} steps", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
