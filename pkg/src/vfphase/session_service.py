"""Interactive stepping service for the guidance loop.

A single stepping thread owns all mutable session state and advances the
simulation in fixed control periods; connection handlers only exchange
messages with it through queues. State broadcasts are conflated per
connection (newest wins) so a slow consumer never stalls the loop, and
high-rate pose inputs are conflated the same way on the input side.

Wire protocol (both transports carry the same JSON documents):
  * TCP: each message is framed as the ASCII byte length, a newline, then the
    UTF-8 JSON payload.
  * WebSocket: each text frame is one JSON document.
See docs/protocol.md for the message schema.
"""

from __future__ import annotations

import asyncio
import json
import logging
import queue
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError, NumericalDivergenceError
from .path_model import ConstraintPath, eds_field
from .metrics import task_plane
from .plant import PlantState
from .scenarios import GuidanceLoop, ScenarioConfig, make_tracker

log = logging.getLogger("vfphase.service")

PROTOCOL_VERSION = 1
SIM_DT = 1e-3
BROADCAST_DECIMATION = 33       # ~30 Hz at a 1 kHz control period
HEARTBEAT_PERIOD = 1.0
MAX_CATCHUP_TICKS = 25          # cap per wake; re-anchor the clock beyond this
EDS_NEAR_FRACTION = 0.9


def _json_default(o):
    if isinstance(o, np.ndarray):
        return [float(v) for v in o]
    if isinstance(o, (np.floating, np.integer)):
        return float(o)
    raise TypeError(f"not serializable: {type(o)}")


def encode_message(doc: dict) -> bytes:
    payload = json.dumps(doc, default=_json_default).encode("utf-8")
    return str(len(payload)).encode("ascii") + b"\n" + payload


class SessionCore:
    """Message semantics and tick logic; owned by exactly one thread."""

    def __init__(self, path: ConstraintPath, dt: float = SIM_DT):
        self.dt = dt
        self.algorithm = "lqt"
        self.mode = "drag-ee"
        self.running = True
        self.cfg = ScenarioConfig(kind="target_following", algorithm="lqt", dt=dt,
                                  duration=1.0)
        self.path = path
        self.tick_count = 0
        self.latest_input: np.ndarray | None = None
        self.last_force = np.zeros(3)
        self._init_loop(s0=0.0, x0=None)

    # -- state management ------------------------------------------------------

    def _init_loop(self, s0: float, x0):
        start = self.path.eval_many([s0], 0)[0][0] if x0 is None \
            else np.asarray(x0, dtype=float)
        tracker = make_tracker(self.algorithm, self.path, s0, self.cfg)
        self.loop = GuidanceLoop(self.path, tracker, self.cfg.admittance,
                                 PlantState.at_rest(start), self.dt)
        self.latest_input = None
        self.last_force = np.zeros(3)
        self.last_row = None

    def snapshot(self) -> dict:
        loop = self.loop
        s = self.last_row["s"] if self.last_row else loop.tracker.phase
        cp = self.path.point(float(s))
        err = loop.plant.pos - cp.m
        offset = float(err @ cp.normal) if cp.normal is not None else 0.0
        near = bool(
            cp.normal is not None
            and offset >= EDS_NEAR_FRACTION * cp.osc_radius
        )
        center = cp.m + cp.osc_radius * cp.normal if cp.normal is not None else None
        return {
            "type": "state",
            "t": loop.t,
            "tick": self.tick_count,
            "algorithm": self.algorithm,
            "mode": self.mode,
            "running": self.running,
            "x": loop.plant.pos,
            "F": self.last_force,
            "s": float(s),
            "s_dot": self.last_row["s_dot"] if self.last_row else 0.0,
            "s_ddot": self.last_row["s_ddot"] if self.last_row else 0.0,
            "m": cp.m,
            "e": err,
            "is_eds_near": near,
            "osc_center": center,
            "osc_radius": cp.osc_radius if np.isfinite(cp.osc_radius) else None,
        }

    # -- message handling --------------------------------------------------------

    def handle(self, msg: dict) -> dict:
        """Apply one protocol message; returns the reply document."""
        kind = msg.get("type")
        rid = msg.get("id")
        try:
            reply = self._dispatch(kind, msg)
        except (InvalidParameterError, KeyError, TypeError, ValueError) as exc:
            reply = {"type": "error", "code": "bad-message", "message": str(exc)}
        if rid is not None:
            reply["id"] = rid
        return reply

    def _dispatch(self, kind, msg) -> dict:
        if kind == "ping":
            return {"type": "pong"}
        if kind == "get_state":
            return self.snapshot()
        if kind == "load_path":
            self.path = ConstraintPath.from_json(json.dumps(msg["path"]))
            self._init_loop(0.0, None)
            return {"type": "ack", "what": "load_path", "length": self.path.length}
        if kind == "select_algorithm":
            algo = msg["algorithm"]
            if algo not in ("gn", "lqt", "vm"):
                raise InvalidParameterError(f"unknown algorithm {algo!r}")
            if algo != self.algorithm:
                # keep the current phase and plant; only the update law changes
                s0 = float(self.loop.tracker.phase)
                self.algorithm = algo
                self.loop.tracker = make_tracker(algo, self.path, s0, self.cfg)
            return {"type": "ack", "what": "select_algorithm", "algorithm": algo}
        if kind == "set_params":
            doc = self.cfg.to_dict()
            for key in ("lqt", "vm", "admittance"):
                if key in msg:
                    doc[key].update(msg[key])
            doc["dt"] = self.dt
            self.cfg = ScenarioConfig.from_dict(doc)
            self.loop.admittance = self.cfg.admittance
            # rebuild the tracker so new weights take effect, keeping the phase
            s0 = float(self.loop.tracker.phase)
            self.loop.tracker = make_tracker(self.algorithm, self.path, s0, self.cfg)
            return {"type": "ack", "what": "set_params"}
        if kind == "set_mode":
            mode = msg["mode"]
            if mode not in ("drag-ee", "apply-force"):
                raise InvalidParameterError(f"unknown mode {mode!r}")
            self.mode = mode
            self.latest_input = None
            return {"type": "ack", "what": "set_mode", "mode": mode}
        if kind == "run":
            self.running = bool(msg.get("on", True))
            return {"type": "ack", "what": "run", "on": self.running}
        if kind == "reset":
            s0 = float(msg.get("s", 0.0))
            x0 = msg.get("x")
            self._init_loop(s0, x0)
            self.tick_count = 0
            return {"type": "ack", "what": "reset"}
        if kind == "input":
            return self._handle_input(msg)
        if kind == "step":
            self._handle_input(msg)
            self.tick()
            return self.snapshot()
        raise InvalidParameterError(f"unknown message type {kind!r}")

    def _handle_input(self, msg) -> dict:
        if "x" in msg and "F" in msg:
            raise InvalidParameterError("input carries either x or F, not both")
        if "x" in msg:
            vec = np.asarray(msg["x"], dtype=float).reshape(3)
            if not np.all(np.isfinite(vec)):
                return {"type": "error", "code": "rejected-input",
                        "message": "nonfinite position"}
            if self.mode != "drag-ee":
                return {"type": "error", "code": "rejected-input",
                        "message": "position input requires drag-ee mode"}
        elif "F" in msg:
            vec = np.asarray(msg["F"], dtype=float).reshape(3)
            if not np.all(np.isfinite(vec)):
                return {"type": "error", "code": "rejected-input",
                        "message": "nonfinite force"}
            if self.mode != "apply-force":
                return {"type": "error", "code": "rejected-input",
                        "message": "force input requires apply-force mode"}
        else:
            raise InvalidParameterError("input needs x or F")
        self.latest_input = vec
        return {"type": "ack", "what": "input"}

    # -- stepping -------------------------------------------------------------------

    def tick(self) -> bool:
        """Advance one control period. Returns False when idle (no input yet)."""
        if self.latest_input is None:
            return False
        try:
            if self.mode == "drag-ee":
                row = self.loop.step_drag(self.latest_input)
            else:
                row = self.loop.step_force(self.latest_input)
                self.last_force = self.latest_input.copy()
            self.last_row = row
            self.tick_count += 1
            return True
        except NumericalDivergenceError as exc:
            log.warning("divergence, resetting session: %s", exc)
            self._init_loop(0.0, None)
            self.tick_count = 0
            raise


@dataclass
class _Connection:
    writer_cb: object                       # callable(bytes or str) scheduled on the IO loop
    replies: list = field(default_factory=list)
    state: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def push_reply(self, doc: dict):
        with self.lock:
            self.replies.append(doc)

    def push_state(self, doc: dict):
        with self.lock:
            self.state = doc              # conflation: newest state wins

    def drain(self):
        with self.lock:
            replies, self.replies = self.replies, []
            state, self.state = self.state, None
        return replies, state


class SessionServer:
    """Hosts one session over TCP (length-prefixed JSON) and WebSocket."""

    def __init__(self, path: ConstraintPath, host="127.0.0.1", port=0,
                 ws_port=0, dt: float = SIM_DT):
        self.core = SessionCore(path, dt)
        self.host = host
        self.port = port
        self.ws_port = ws_port
        self.inbox: "queue.Queue[tuple]" = queue.Queue()
        self._wake = threading.Event()
        self.connections: dict[int, _Connection] = {}
        self._conn_lock = threading.Lock()
        self._conn_seq = 0
        self._stop = threading.Event()
        self._io_loop: asyncio.AbstractEventLoop | None = None
        self._io_thread: threading.Thread | None = None
        self._step_thread: threading.Thread | None = None
        self.ticks_done = 0
        self.broadcasts_done = 0

    # -- lifecycle ---------------------------------------------------------------

    def start(self):
        self._io_loop = asyncio.new_event_loop()
        started = threading.Event()
        bind_error: list[BaseException] = []

        def io_main():
            asyncio.set_event_loop(self._io_loop)
            try:
                self._io_loop.run_until_complete(self._bind_servers())
            except BaseException as exc:
                bind_error.append(exc)
                started.set()
                return
            started.set()
            self._io_loop.run_forever()
            self._io_loop.run_until_complete(self._close_servers())
            self._io_loop.close()

        self._io_thread = threading.Thread(target=io_main, name="vfphase-io",
                                           daemon=True)
        self._io_thread.start()
        started.wait()
        if bind_error:
            raise bind_error[0]
        self._step_thread = threading.Thread(target=self._step_main,
                                             name="vfphase-step", daemon=True)
        self._step_thread.start()

    async def _bind_servers(self):
        self._tcp_server = await asyncio.start_server(
            self._tcp_client, self.host, self.port
        )
        self.port = self._tcp_server.sockets[0].getsockname()[1]
        try:
            import websockets.asyncio.server as ws_server
        except ImportError:                                    # pragma: no cover
            ws_server = None
        if ws_server is not None:
            self._ws_server = await ws_server.serve(
                self._ws_client, self.host, self.ws_port
            )
            self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
        else:                                                  # pragma: no cover
            self._ws_server = None

    async def _close_servers(self):
        self._tcp_server.close()
        await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    def stop(self):
        self._stop.set()
        if self._step_thread is not None:
            self._step_thread.join(timeout=5)
        if self._io_loop is not None:
            self._io_loop.call_soon_threadsafe(self._io_loop.stop)
        if self._io_thread is not None:
            self._io_thread.join(timeout=5)

    def wait(self):
        while not self._stop.is_set():
            time.sleep(0.2)

    # -- connection plumbing ---------------------------------------------------------

    def _register(self, writer_cb) -> tuple[int, _Connection]:
        with self._conn_lock:
            self._conn_seq += 1
            conn = _Connection(writer_cb=writer_cb)
            self.connections[self._conn_seq] = conn
            return self._conn_seq, conn

    def _unregister(self, conn_id: int):
        with self._conn_lock:
            self.connections.pop(conn_id, None)

    def _flush(self, conn_id: int):
        conn = self.connections.get(conn_id)
        if conn is None:
            return
        replies, state = conn.drain()
        for doc in replies:
            conn.writer_cb(doc)
        if state is not None:
            conn.writer_cb(state)

    def _schedule_flush(self, conn_id: int):
        if self._io_loop is not None and not self._io_loop.is_closed():
            self._io_loop.call_soon_threadsafe(self._flush, conn_id)

    async def _tcp_client(self, reader: asyncio.StreamReader,
                          writer: asyncio.StreamWriter):
        def send(doc: dict):
            if not writer.is_closing():
                writer.write(encode_message(doc))

        conn_id, _ = self._register(send)
        send({"type": "hello", "protocol": PROTOCOL_VERSION, "session": "main",
              "transport": "tcp"})
        try:
            while True:
                header = await reader.readline()
                if not header:
                    break
                try:
                    length = int(header.strip())
                except ValueError:
                    send({"type": "error", "code": "bad-frame",
                          "message": "expected decimal length line"})
                    continue
                payload = await reader.readexactly(length)
                self._ingest(conn_id, payload.decode("utf-8"))
        except (asyncio.IncompleteReadError, ConnectionError):
            pass
        finally:
            self._unregister(conn_id)
            writer.close()

    async def _ws_client(self, socket):
        loop = asyncio.get_running_loop()

        def send(doc: dict):
            asyncio.ensure_future(
                socket.send(json.dumps(doc, default=_json_default)), loop=loop
            )

        conn_id, _ = self._register(send)
        send({"type": "hello", "protocol": PROTOCOL_VERSION, "session": "main",
              "transport": "ws"})
        try:
            async for text in socket:
                self._ingest(conn_id, text)
        except Exception:
            pass
        finally:
            self._unregister(conn_id)

    def _ingest(self, conn_id: int, text: str):
        conn = self.connections.get(conn_id)
        try:
            msg = json.loads(text)
            if not isinstance(msg, dict):
                raise ValueError("message must be a JSON object")
        except ValueError as exc:
            if conn is not None:
                conn.push_reply({"type": "error", "code": "bad-json",
                                 "message": str(exc)})
                self._schedule_flush(conn_id)
            return
        if msg.get("type") == "get_field":
            # heavy, read-only: answer from the IO side without stalling steps
            threading.Thread(
                target=self._answer_field, args=(conn_id, msg), daemon=True
            ).start()
            return
        self.inbox.put((conn_id, msg))
        self._wake.set()

    def _answer_field(self, conn_id: int, msg: dict):
        try:
            grid = int(msg.get("grid", 80))
            margin = float(msg.get("margin", 0.3))
            path = self.core.path
            s_dense = np.linspace(0.0, path.length, 300)
            pts = path.eval_many(s_dense, 0)[0]
            e1, e2 = task_plane(pts)
            center = pts.mean(axis=0)
            u = (pts - center) @ e1
            v = (pts - center) @ e2
            half_u = (u.max() - u.min()) / 2 * (1 + margin) + 1e-6
            half_v = (v.max() - v.min()) / 2 * (1 + margin) + 1e-6
            mid_u, mid_v = (u.max() + u.min()) / 2, (v.max() + v.min()) / 2
            gu = np.linspace(mid_u - half_u, mid_u + half_u, grid)
            gv = np.linspace(mid_v - half_v, mid_v + half_v, grid)
            uu, vv = np.meshgrid(gu, gv, indexing="ij")
            queries = center[None, :] + uu.reshape(-1, 1) * e1[None, :] \
                + vv.reshape(-1, 1) * e2[None, :]
            _, cost, _, flags = eds_field(path, queries)
            reply = {
                "type": "field",
                "grid": grid,
                "u": [float(x) for x in gu],
                "v": [float(x) for x in gv],
                "origin": center,
                "e1": e1,
                "e2": e2,
                "distance": [float(np.sqrt(c)) for c in cost],
                "is_eds": [int(b) for b in flags],
                "curve_u": [float(x) for x in u],
                "curve_v": [float(x) for x in v],
            }
            if "id" in msg:
                reply["id"] = msg["id"]
        except Exception as exc:                                 # pragma: no cover
            reply = {"type": "error", "code": "field-failed", "message": str(exc)}
            if "id" in msg:
                reply["id"] = msg["id"]
        conn = self.connections.get(conn_id)
        if conn is not None:
            conn.push_reply(reply)
            self._schedule_flush(conn_id)

    # -- stepping thread ----------------------------------------------------------------

    def _broadcast(self, doc: dict):
        with self._conn_lock:
            targets = list(self.connections.items())
        for conn_id, conn in targets:
            conn.push_state(doc)
            self._schedule_flush(conn_id)
        self.broadcasts_done += 1

    def _reply(self, conn_id: int, doc: dict):
        conn = self.connections.get(conn_id)
        if conn is not None:
            conn.push_reply(doc)
            self._schedule_flush(conn_id)

    def _step_main(self):
        core = self.core
        dt = core.dt
        next_heartbeat = time.monotonic() + HEARTBEAT_PERIOD
        next_broadcast = time.monotonic()
        anchor = time.monotonic()
        sim_ahead = 0.0         # sim time achieved beyond the anchor
        while not self._stop.is_set():
            now = time.monotonic()
            # handle everything already queued
            try:
                while True:
                    conn_id, msg = self.inbox.get_nowait()
                    is_input = msg.get("type") == "input"
                    reply = core.handle(msg)
                    if msg.get("type") == "step":
                        self.ticks_done += 1
                        self._reply(conn_id, reply)
                        self._broadcast(core.snapshot())
                    elif not is_input or reply.get("type") == "error" \
                            or "id" in msg:
                        self._reply(conn_id, reply)
                    if msg.get("type") in ("reset", "load_path",
                                           "select_algorithm", "set_params"):
                        self._broadcast(core.snapshot())
            except queue.Empty:
                pass

            if core.running:
                behind = (now - anchor) - sim_ahead
                ticks = int(behind / dt)
                if ticks > MAX_CATCHUP_TICKS:
                    # too far behind: drop the backlog instead of spiraling
                    anchor = now - sim_ahead - MAX_CATCHUP_TICKS * dt
                    ticks = MAX_CATCHUP_TICKS
                for _ in range(ticks):
                    try:
                        stepped = core.tick()
                    except NumericalDivergenceError:
                        self._broadcast({"type": "error", "code": "divergence-reset",
                                         "message": "session auto-reset"})
                        break
                    sim_ahead += dt
                    if stepped:
                        self.ticks_done += 1
                        # wall-clock decimation, checked inside the batch so a
                        # saturated catch-up loop still broadcasts at >= 30 Hz
                        wall = time.monotonic()
                        if wall >= next_broadcast:
                            next_broadcast = wall + 1.0 / 40.0
                            self._broadcast(core.snapshot())
            else:
                anchor = time.monotonic() - sim_ahead

            if now >= next_heartbeat:
                next_heartbeat = now + HEARTBEAT_PERIOD
                self._broadcast_heartbeat(core.loop.t)

            self._wake.wait(timeout=dt / 2)
            self._wake.clear()

    def _broadcast_heartbeat(self, t: float):
        with self._conn_lock:
            targets = list(self.connections.items())
        for conn_id, conn in targets:
            conn.push_reply({"type": "heartbeat", "t": t})
            self._schedule_flush(conn_id)
