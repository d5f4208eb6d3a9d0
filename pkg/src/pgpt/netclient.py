"""Blocking hub client: register a role, send frames, receive via a queue.

A reader thread turns inbound lines into Frames on an ordered queue; an
optional heartbeat thread keeps the hub's liveness watchdog satisfied.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading

from .protocol import Frame, MessageKind, ProtocolError, decode_frame, encode_frame, make_frame

log = logging.getLogger(__name__)


class HubConnectionError(Exception):
    pass


class RegistrationRejected(HubConnectionError):
    pass


class HubClient:
    def __init__(self, host: str, port: int, role: str, heartbeat_interval_s: float = 2.5):
        self.host = host
        self.port = port
        self.role = role
        self.heartbeat_interval_s = heartbeat_interval_s
        self.inbound: queue.Queue[Frame] = queue.Queue()
        self._sock = None
        self._file = None
        self._send_lock = threading.Lock()
        self._closed = threading.Event()

    def connect(self) -> "HubClient":
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=10)
        except OSError as exc:
            raise HubConnectionError(f"cannot reach hub at {self.host}:{self.port}: {exc}") from exc
        self._sock.settimeout(None)
        self._file = self._sock.makefile("rb")
        self.send(make_frame(MessageKind.REGISTER, 0, self.role))
        ack_line = self._file.readline()
        if not ack_line:
            raise RegistrationRejected("hub closed the connection during registration")
        ack = decode_frame(ack_line.rstrip(b"\n"))
        if ack.kind is not MessageKind.STATE_BROADCAST or '"registered"' not in ack.payload:
            raise RegistrationRejected(f"registration rejected: {ack.payload}")
        threading.Thread(target=self._reader, daemon=True).start()
        threading.Thread(target=self._heartbeat, daemon=True).start()
        return self

    def send(self, frame: Frame) -> None:
        if self._sock is None or self._closed.is_set():
            raise HubConnectionError("not connected")
        with self._send_lock:
            try:
                self._sock.sendall(encode_frame(frame))
            except OSError as exc:
                self._closed.set()
                raise HubConnectionError(f"send failed: {exc}") from exc

    def _reader(self) -> None:
        try:
            for line in self._file:
                try:
                    self.inbound.put(decode_frame(line.rstrip(b"\n")))
                except ProtocolError as exc:
                    log.warning("%s: dropping undecodable line: %s", self.role, exc)
        except OSError:
            pass
        finally:
            self._closed.set()

    def _heartbeat(self) -> None:
        while not self._closed.wait(self.heartbeat_interval_s):
            try:
                self.send(Frame(MessageKind.HEARTBEAT, ""))
            except HubConnectionError:
                return

    @property
    def closed(self) -> bool:
        return self._closed.is_set()

    def close(self) -> None:
        self._closed.set()
        if self._sock:
            try:
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                self._sock.close()
            except OSError:
                pass
        if self._file:
            try:
                self._file.close()
            except OSError:
                pass
