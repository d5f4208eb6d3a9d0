"""Central message hub: role-registered clients, prefix routing, observer fan-out.

Principals (one pipeline, one controller) connect over a TCP stream socket;
any number of console observers connect over a WebSocket endpoint.  Both
transports carry the identical line frames.  Routing runs through a single
dispatcher task, so per-sender FIFO order and role uniqueness hold without
locks.
"""

from __future__ import annotations

import asyncio
import json
import logging
import threading
from dataclasses import dataclass

import websockets

from .protocol import (
    Frame,
    MessageKind,
    ProtocolError,
    decode_frame,
    encode_frame,
    make_frame,
    parse_envelope,
)

log = logging.getLogger(__name__)

PRINCIPAL_ROLES = ("pipeline", "controller")
VALID_ROLES = PRINCIPAL_ROLES + ("console",)

# kind -> destination role; X fans out to consoles only, H echoes to sender
ROUTING_TABLE = {
    MessageKind.SPEECH_REPLY: "controller",
    MessageKind.ACTION_COMMAND: "controller",
    MessageKind.RE_PROMPT: "controller",
    MessageKind.END_FLAG: "pipeline",
    MessageKind.TEXT_INJECTION: "pipeline",
    MessageKind.STATE_BROADCAST: "consoles",
    MessageKind.HEARTBEAT: "sender",
}


@dataclass
class HubConfig:
    heartbeat_interval_s: float = 5.0
    heartbeat_misses: int = 2
    observer_queue_max: int = 256
    principal_queue_max: int = 10000


class _Session:
    def __init__(self, role: str, queue_max: int):
        self.role = role
        self.outbox: asyncio.Queue = asyncio.Queue(maxsize=queue_max)
        self.alive = True
        self.last_seen = 0.0

    def offer(self, line: bytes) -> bool:
        try:
            self.outbox.put_nowait(line)
            return True
        except asyncio.QueueFull:
            return False


class Hub:
    """One hub instance per event loop; see HubThread for sync embedding."""

    def __init__(self, config: HubConfig | None = None):
        self.config = config or HubConfig()
        self.principals: dict[str, _Session | None] = {"pipeline": None, "controller": None}
        self.consoles: set[_Session] = set()
        self.frame_log: list[tuple[str, str, int]] = []   # (sender_role, symbol, turn)
        self._route_queue: asyncio.Queue = asyncio.Queue()
        self._tasks: list[asyncio.Task] = []
        self.tcp_port = None
        self.ws_port = None
        self._server = None
        self._ws_server = None

    # -- lifecycle ---------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", tcp_port: int = 0, ws_port: int = 0):
        self._server = await asyncio.start_server(self._handle_tcp, host, tcp_port, limit=1 << 20)
        self._ws_server = await websockets.serve(self._handle_ws, host, ws_port, max_size=1 << 20)
        self.tcp_port = self._server.sockets[0].getsockname()[1]
        self.ws_port = next(iter(self._ws_server.sockets)).getsockname()[1]
        self._tasks.append(asyncio.create_task(self._route_loop()))
        log.info("hub listening tcp=%s ws=%s", self.tcp_port, self.ws_port)

    async def stop(self):
        for task in self._tasks:
            task.cancel()
        if self._server:
            self._server.close()
            await self._server.wait_closed()
        if self._ws_server:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def serve_forever(self):
        await asyncio.Event().wait()

    # -- registration ------------------------------------------------------

    def _register(self, frame: Frame):
        """Returns (session, ack_frame) or raises ValueError with the reason."""
        if frame.kind is not MessageKind.REGISTER:
            raise ValueError("FirstFrameNotRegister")
        env = parse_envelope(frame)
        role = json.loads(frame.payload).get("role") or env.sender
        if role not in VALID_ROLES:
            raise ValueError(f"UnknownRole:{role}")
        if role in PRINCIPAL_ROLES:
            live = self.principals[role]
            if live is not None and live.alive:
                raise ValueError(f"RoleOccupied:{role}")
            session = _Session(role, self.config.principal_queue_max)
            self.principals[role] = session
        else:
            session = _Session(role, self.config.observer_queue_max)
            self.consoles.add(session)
        ack = make_frame(MessageKind.STATE_BROADCAST, env.turn, "hub", "registered")
        return session, ack

    def _drop(self, session: _Session):
        session.alive = False
        if session.role in PRINCIPAL_ROLES and self.principals.get(session.role) is session:
            self.principals[session.role] = None
        self.consoles.discard(session)

    # -- routing -----------------------------------------------------------

    async def _route_loop(self):
        while True:
            session, frame = await self._route_queue.get()
            try:
                self._route(frame, session)
            except Exception:
                log.exception("routing failure for %s frame", frame.symbol)

    def _route(self, frame: Frame, sender: _Session):
        try:
            turn = parse_envelope(frame).turn
        except ProtocolError:
            turn = -1
        self.frame_log.append((sender.role, frame.symbol, turn))
        line = encode_frame(frame)
        dest = ROUTING_TABLE.get(frame.kind)
        if dest == "sender":
            sender.offer(line)
            return
        delivered = True
        if dest in PRINCIPAL_ROLES:
            target = self.principals[dest]
            if target is None or not target.alive:
                delivered = False
            else:
                target.offer(line)
        # every routed frame is copied to all console observers
        for console in list(self.consoles):
            if console is sender:
                continue
            if not console.offer(line):
                log.warning("console observer too slow, dropping it")
                self._drop(console)
        if dest in PRINCIPAL_ROLES and not delivered:
            notice = make_frame(MessageKind.STATE_BROADCAST, turn if turn >= 0 else 0,
                                "hub", "undeliverable")
            sender.offer(encode_frame(notice))

    def submit(self, session: _Session, frame: Frame):
        self._route_queue.put_nowait((session, frame))

    # -- TCP transport -----------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        session = None
        writer_task = None
        try:
            first = await self._read_line(reader)
            if first is None:
                return
            try:
                frame = decode_frame(first)
                session, ack = self._register(frame)
            except (ProtocolError, ValueError) as exc:
                writer.write(encode_frame(
                    make_frame(MessageKind.STATE_BROADCAST, 0, "hub", f"rejected:{exc}")))
                await writer.drain()
                return
            session.offer(encode_frame(ack))
            writer_task = asyncio.create_task(self._tcp_writer(session, writer))
            deadline = self.config.heartbeat_interval_s * self.config.heartbeat_misses
            while True:
                try:
                    line = await asyncio.wait_for(self._read_line(reader), timeout=deadline)
                except asyncio.TimeoutError:
                    log.info("%s missed its heartbeats, dropping", session.role)
                    break
                if line is None:
                    break
                try:
                    self.submit(session, decode_frame(line))
                except ProtocolError as exc:
                    session.offer(encode_frame(
                        make_frame(MessageKind.STATE_BROADCAST, 0, "hub", f"bad_frame:{exc}")))
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            if session:
                self._drop(session)
            if writer_task:
                writer_task.cancel()
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    @staticmethod
    async def _read_line(reader: asyncio.StreamReader):
        line = await reader.readline()
        if not line:
            return None
        return line.rstrip(b"\n")

    @staticmethod
    async def _tcp_writer(session: _Session, writer: asyncio.StreamWriter):
        try:
            while True:
                line = await session.outbox.get()
                writer.write(line)
                await writer.drain()
        except (ConnectionError, asyncio.CancelledError, OSError):
            pass

    # -- WebSocket transport ----------------------------------------------

    async def _handle_ws(self, connection):
        path = getattr(getattr(connection, "request", None), "path", "/observe")
        if not path.startswith("/observe"):
            await connection.close(code=4404, reason="unknown path")
            return
        session = None
        sender_task = None
        try:
            first = await connection.recv()
            try:
                frame = decode_frame(first.rstrip("\n").encode("utf-8")
                                     if isinstance(first, str) else first.rstrip(b"\n"))
                session, ack = self._register(frame)
            except (ProtocolError, ValueError) as exc:
                await connection.send(encode_frame(
                    make_frame(MessageKind.STATE_BROADCAST, 0, "hub", f"rejected:{exc}"))
                    .decode("utf-8").rstrip("\n"))
                return
            session.offer(encode_frame(ack))
            sender_task = asyncio.create_task(self._ws_writer(session, connection))
            async for message in connection:
                raw = message.encode("utf-8") if isinstance(message, str) else message
                try:
                    self.submit(session, decode_frame(raw.rstrip(b"\n")))
                except ProtocolError as exc:
                    session.offer(encode_frame(
                        make_frame(MessageKind.STATE_BROADCAST, 0, "hub", f"bad_frame:{exc}")))
        except websockets.ConnectionClosed:
            pass
        finally:
            if session:
                self._drop(session)
            if sender_task:
                sender_task.cancel()

    @staticmethod
    async def _ws_writer(session: _Session, connection):
        try:
            while True:
                line = await session.outbox.get()
                await connection.send(line.decode("utf-8").rstrip("\n"))
        except (websockets.ConnectionClosed, asyncio.CancelledError):
            pass


class HubThread:
    """Run a Hub on a private event loop in a daemon thread (tests, demos)."""

    def __init__(self, config: HubConfig | None = None, host: str = "127.0.0.1"):
        self.hub = Hub(config)
        self.host = host
        self._loop = None
        self._thread = None
        self._started = threading.Event()

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()
        if not self._started.wait(timeout=10):
            raise RuntimeError("hub failed to start")
        return self

    def _run(self):
        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)

        async def boot():
            await self.hub.start(self.host)
            self._started.set()

        self._loop.run_until_complete(boot())
        try:
            self._loop.run_forever()
        finally:
            self._loop.run_until_complete(self.hub.stop())
            pending = asyncio.all_tasks(self._loop)
            for task in pending:
                task.cancel()
            self._loop.run_until_complete(asyncio.gather(*pending, return_exceptions=True))
            self._loop.close()

    @property
    def tcp_port(self):
        return self.hub.tcp_port

    @property
    def ws_port(self):
        return self.hub.ws_port

    @property
    def frame_log(self):
        return list(self.hub.frame_log)

    def stop(self):
        if self._loop:
            self._loop.call_soon_threadsafe(self._loop.stop)
        if self._thread:
            self._thread.join(timeout=10)


async def serve(host: str, tcp_port: int, ws_port: int,
                config: HubConfig | None = None):
    """CLI entrypoint body: bind both endpoints and run until cancelled."""
    hub = Hub(config)
    try:
        await hub.start(host, tcp_port, ws_port)
    except OSError as exc:
        raise SystemExit(f"hub: bind failure: {exc}")
    try:
        await hub.serve_forever()
    finally:
        await hub.stop()
