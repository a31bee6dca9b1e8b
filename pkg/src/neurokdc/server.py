"""The key distribution centre service.

Per session the KDC generates every round's common input from its seeded
chain, relays the partners' output bits to each other and to any
listeners, and arbitrates sync probes by comparing the two fingerprints.
Partners never exchange fingerprints peer to peer.

One thread runs each session; its frames are processed strictly in
arrival order. Sessions are independent: a connection failure aborts its
own session (ABORT reason 3 to the survivors) and nothing else.

The round loop is lockstep. Both partners reach the agreement threshold
on the same round (agreements are mutual), so the server, tracking the
same streak from the relayed bits, knows exactly when to collect the two
probes. Server and clients must therefore agree on the window size; both
default to 50.
"""

from __future__ import annotations

import logging
import socket
import threading
from dataclasses import dataclass, field

from .errors import ConfigInvalid, NetError, WireError
from .rng import SplitMix64, gen_input
from .session import DEFAULT_AGREEMENT_WINDOW, DEFAULT_MAX_ROUNDS
from .tpm import RULE_NAMES, TpmParams
from .transport import DEFAULT_DEADLINE, configure, read_frame, send_frame
from .wire import (
    ABORT_LATE_JOIN,
    ABORT_PARAM_MISMATCH,
    ABORT_PEER_FAILURE,
    ABORT_ROUND_CAP,
    Abort,
    Hello,
    ROLE_A,
    ROLE_B,
    ROLE_E,
    RoundInput,
    RoundOutput,
    Start,
    SyncFail,
    SyncOk,
    SyncProbe,
    pack_inputs,
)

log = logging.getLogger(__name__)


@dataclass
class _Session:
    session_id: int
    partner_a: socket.socket | None = None
    partner_b: socket.socket | None = None
    hello_a: Hello | None = None
    hello_b: Hello | None = None
    listeners: list[socket.socket] = field(default_factory=list)
    started: bool = False

    @property
    def complete(self) -> bool:
        return self.partner_a is not None and self.partner_b is not None


class KdcServer:
    """Accepts client connections and runs key-exchange sessions."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0, *,
                 max_rounds: int = DEFAULT_MAX_ROUNDS,
                 agreement_window: int = DEFAULT_AGREEMENT_WINDOW,
                 input_seed: int = 0,
                 deadline: float = DEFAULT_DEADLINE):
        if agreement_window < 1 or max_rounds < agreement_window:
            raise ConfigInvalid("need max_rounds >= agreement_window >= 1")
        self._host = host
        self._port = port
        self.max_rounds = max_rounds
        self.agreement_window = agreement_window
        self.input_seed = input_seed
        self.deadline = deadline
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._sessions: dict[int, _Session] = {}
        self._lock = threading.Lock()
        self._stopping = threading.Event()
        self._live_socks: set[socket.socket] = set()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> tuple[str, int]:
        """Bind and begin accepting in a background thread; returns address."""
        self._listener = socket.create_server((self._host, self._port))
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="kdc-accept", daemon=True
        )
        self._accept_thread.start()
        return self.address

    @property
    def address(self) -> tuple[str, int]:
        assert self._listener is not None, "server not started"
        addr = self._listener.getsockname()
        return addr[0], addr[1]

    def serve_forever(self) -> None:
        if self._listener is None:
            self.start()
        try:
            while not self._stopping.wait(0.5):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.shutdown()

    def shutdown(self) -> None:
        self._stopping.set()
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            socks = list(self._live_socks)
        for s in socks:
            try:
                s.close()
            except OSError:
                pass

    # -- connection intake -------------------------------------------------

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stopping.is_set():
            try:
                conn, _addr = self._listener.accept()
            except OSError:
                break
            with self._lock:
                self._live_socks.add(conn)
            threading.Thread(
                target=self._register, args=(conn,), daemon=True
            ).start()

    def _register(self, conn: socket.socket) -> None:
        try:
            configure(conn, self.deadline)
            hello = read_frame(conn)
        except (NetError, WireError) as e:
            log.warning("rejecting connection before HELLO: %s", e)
            self._drop(conn)
            return
        if not isinstance(hello, Hello):
            self._abort_and_drop(conn, ABORT_PEER_FAILURE)
            return

        run_me = None
        with self._lock:
            sess = self._sessions.setdefault(hello.session_id, _Session(hello.session_id))
            if sess.started:
                self._abort_locked(conn, ABORT_LATE_JOIN)
                return
            if hello.role == ROLE_A:
                if sess.partner_a is not None:
                    self._abort_locked(conn, ABORT_LATE_JOIN)
                    return
                sess.partner_a, sess.hello_a = conn, hello
            elif hello.role == ROLE_B:
                if sess.partner_b is not None:
                    self._abort_locked(conn, ABORT_LATE_JOIN)
                    return
                sess.partner_b, sess.hello_b = conn, hello
            else:
                sess.listeners.append(conn)
            if sess.complete:
                sess.started = True
                run_me = sess
        if run_me is not None:
            threading.Thread(
                target=self._run_session, args=(run_me,),
                name=f"kdc-session-{run_me.session_id}", daemon=True,
            ).start()

    def _abort_locked(self, conn: socket.socket, reason: int) -> None:
        try:
            send_frame(conn, Abort(reason))
        except NetError:
            pass
        self._live_socks.discard(conn)
        try:
            conn.close()
        except OSError:
            pass

    def _abort_and_drop(self, conn: socket.socket, reason: int) -> None:
        try:
            send_frame(conn, Abort(reason))
        except NetError:
            pass
        self._drop(conn)

    def _drop(self, conn: socket.socket) -> None:
        with self._lock:
            self._live_socks.discard(conn)
        try:
            conn.close()
        except OSError:
            pass

    # -- session loop ------------------------------------------------------

    def _close_session(self, sess: _Session) -> None:
        with self._lock:
            self._sessions.pop(sess.session_id, None)
        for s in [sess.partner_a, sess.partner_b, *sess.listeners]:
            if s is not None:
                self._drop(s)

    def _abort_all(self, sess: _Session, reason: int) -> None:
        for s in [sess.partner_a, sess.partner_b, *sess.listeners]:
            if s is None:
                continue
            try:
                send_frame(s, Abort(reason))
            except NetError:
                pass
        self._close_session(sess)

    def _send_listeners(self, sess: _Session, msg) -> None:
        """Best effort: a dead listener is dropped, never blocks the exchange."""
        for s in list(sess.listeners):
            try:
                send_frame(s, msg)
            except NetError:
                sess.listeners.remove(s)
                self._drop(s)

    def _run_session(self, sess: _Session) -> None:
        assert sess.hello_a is not None and sess.hello_b is not None
        a, b = sess.hello_a, sess.hello_b
        if (a.k, a.n, a.l, a.rule) != (b.k, b.n, b.l, b.rule):
            self._abort_all(sess, ABORT_PARAM_MISMATCH)
            return
        try:
            params = TpmParams(k=a.k, n=a.n, l=a.l, rule=RULE_NAMES[a.rule])
        except ConfigInvalid:
            self._abort_all(sess, ABORT_PARAM_MISMATCH)
            return

        # Listeners learn the agreed geometry from an echoed HELLO.
        self._send_listeners(
            sess, Hello(sess.session_id, ROLE_E, a.k, a.n, a.l, a.rule)
        )

        sock_a, sock_b = sess.partner_a, sess.partner_b
        assert sock_a is not None and sock_b is not None
        try:
            send_frame(sock_a, Start(0))
            send_frame(sock_b, Start(0))
        except NetError:
            self._abort_all(sess, ABORT_PEER_FAILURE)
            return
        self._send_listeners(sess, Start(0))

        chain = SplitMix64(self.input_seed)
        streak = 0
        try:
            for rnd in range(self.max_rounds):
                x = gen_input(chain, params)
                inp = RoundInput(rnd, pack_inputs(x.x))
                send_frame(sock_a, inp)
                send_frame(sock_b, inp)
                self._send_listeners(sess, inp)

                out_a = self._expect_output(sock_a, rnd)
                out_b = self._expect_output(sock_b, rnd)

                send_frame(sock_b, out_a)
                send_frame(sock_a, out_b)
                self._send_listeners(sess, out_a)
                self._send_listeners(sess, out_b)

                streak = streak + 1 if out_a.tau == out_b.tau else 0
                if streak >= self.agreement_window:
                    probe_a = self._expect_probe(sock_a, rnd)
                    send_frame(sock_b, probe_a)
                    self._send_listeners(sess, probe_a)
                    probe_b = self._expect_probe(sock_b, rnd)
                    send_frame(sock_a, probe_b)
                    self._send_listeners(sess, probe_b)
                    if probe_a.fingerprint == probe_b.fingerprint:
                        send_frame(sock_a, SyncOk())
                        send_frame(sock_b, SyncOk())
                        self._send_listeners(sess, SyncOk())
                        self._close_session(sess)
                        return
                    send_frame(sock_a, SyncFail())
                    send_frame(sock_b, SyncFail())
                    self._send_listeners(sess, SyncFail())
                    streak = 0
        except (NetError, WireError) as e:
            log.warning("session %d: %s", sess.session_id, e)
            self._abort_all(sess, ABORT_PEER_FAILURE)
            return
        self._abort_all(sess, ABORT_ROUND_CAP)

    def _expect_output(self, sock: socket.socket, rnd: int) -> RoundOutput:
        msg = read_frame(sock)
        if not isinstance(msg, RoundOutput) or msg.round != rnd:
            raise NetError(f"expected OUTPUT for round {rnd}, got {msg!r}")
        return msg

    def _expect_probe(self, sock: socket.socket, rnd: int) -> SyncProbe:
        msg = read_frame(sock)
        if not isinstance(msg, SyncProbe) or msg.round != rnd:
            raise NetError(f"expected SYNC_PROBE for round {rnd}, got {msg!r}")
        return msg
