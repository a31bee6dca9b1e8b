"""Blocking socket helpers shared by the KDC server and its clients."""

from __future__ import annotations

import socket
import struct

from .errors import ConnectionLost, Oversize, Timeout
from .wire import MAX_PAYLOAD, Message, _parse, encode

DEFAULT_DEADLINE = 30.0


def recv_exact(sock: socket.socket, size: int) -> bytes:
    buf = bytearray()
    while len(buf) < size:
        try:
            chunk = sock.recv(size - len(buf))
        except socket.timeout as e:
            raise Timeout(f"no frame within deadline ({e})") from e
        except OSError as e:
            raise ConnectionLost(str(e)) from e
        if not chunk:
            raise ConnectionLost("peer closed the connection")
        buf.extend(chunk)
    return bytes(buf)


def read_frame(sock: socket.socket) -> Message:
    """Read exactly one frame and parse it."""
    header = recv_exact(sock, 5)
    msg_type, length = struct.unpack(">BI", header)
    if length > MAX_PAYLOAD:
        raise Oversize(f"declared payload {length} exceeds {MAX_PAYLOAD}")
    payload = recv_exact(sock, length) if length else b""
    return _parse(msg_type, payload)


def send_frame(sock: socket.socket, m: Message) -> None:
    try:
        sock.sendall(encode(m))
    except socket.timeout as e:
        raise Timeout(f"send stalled past deadline ({e})") from e
    except OSError as e:
        raise ConnectionLost(str(e)) from e


def configure(sock: socket.socket, deadline: float) -> None:
    sock.settimeout(deadline)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
