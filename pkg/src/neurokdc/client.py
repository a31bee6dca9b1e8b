"""Partner and listener clients for the KDC protocol."""

from __future__ import annotations

import socket
import time
from dataclasses import dataclass

from .errors import NetError, ProtocolViolation, WireError
from .keymat import KeyMaterial, derive_key
from .session import (
    DEFAULT_AGREEMENT_WINDOW,
    DEFAULT_MAX_ROUNDS,
    EavesdropperState,
    PartnerState,
    RUNNING,
    SYNCED,
    SyncReport,
    TIMED_OUT,
)
from .tpm import InputVector, RULE_NAMES, TpmParams
from .transport import DEFAULT_DEADLINE, configure, read_frame, send_frame
from .wire import (
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
    unpack_inputs,
)

ROLE_OCTETS = {"A": ROLE_A, "B": ROLE_B}


@dataclass
class PartyResult:
    """Everything a partner knows when its session ends."""

    report: SyncReport
    state: PartnerState
    key: KeyMaterial
    abort_reason: int | None = None


@dataclass
class EavesdropResult:
    """What a listener can state when the session it watched ends.

    `matched` compares the listener's own fingerprint against the winning
    probe fingerprint it observed on the wire (False when none was seen).
    """

    fingerprint: int
    observed_fingerprint: int | None
    matched: bool
    partners_synced: bool
    rounds_observed: int
    state: EavesdropperState
    abort_reason: int | None = None


def _connect(addr: tuple[str, int], deadline: float) -> socket.socket:
    sock = socket.create_connection(addr, timeout=deadline)
    configure(sock, deadline)
    return sock


def party_client(addr: tuple[str, int], *, session_id: int, role: str,
                 params: TpmParams, weight_seed: int,
                 max_rounds: int = DEFAULT_MAX_ROUNDS,
                 agreement_window: int = DEFAULT_AGREEMENT_WINDOW,
                 deadline: float = DEFAULT_DEADLINE) -> PartyResult:
    """Run one partner (role "A" or "B") against a KDC.

    Emits an output bit per round, initiates a sync probe whenever the
    agreement streak reaches the window, and returns when the KDC confirms
    sync, the round cap is hit, or the session aborts.
    """
    if role not in ROLE_OCTETS:
        raise ValueError(f"role must be 'A' or 'B', got {role!r}")
    state = PartnerState.from_seed(params, weight_seed,
                                   max_rounds=max_rounds,
                                   agreement_window=agreement_window)
    t0 = time.perf_counter()
    peer_fp: int | None = None
    abort_reason: int | None = None
    probed_round = -1

    sock = _connect(addr, deadline)
    try:
        send_frame(sock, Hello(session_id, ROLE_OCTETS[role], params.k,
                               params.n, params.l, params.rule_code))
        msg = read_frame(sock)
        if isinstance(msg, Abort):
            abort_reason = msg.reason
        elif not isinstance(msg, Start):
            raise ProtocolViolation(f"expected START, got {msg!r}")

        while abort_reason is None and state.status == RUNNING:
            msg = read_frame(sock)
            if isinstance(msg, RoundInput):
                rnd = msg.round
                if rnd != state.rounds_elapsed:
                    raise ProtocolViolation(
                        f"INPUT for round {rnd}, expected {state.rounds_elapsed}"
                    )
                try:
                    x = InputVector(params, unpack_inputs(msg.packed, params.k, params.n))
                except WireError as e:
                    raise ProtocolViolation(f"bad INPUT payload: {e}") from e
                tau, trace = state.partner_round(x)
                send_frame(sock, RoundOutput(rnd, tau))
                peer = read_frame(sock)
                if not isinstance(peer, RoundOutput) or peer.round != rnd:
                    raise ProtocolViolation(f"expected peer OUTPUT, got {peer!r}")
                state.apply_peer_output(x, trace, peer.tau)
                if state.probe_ready:
                    send_frame(sock, SyncProbe(rnd, state.fingerprint()))
                    probed_round = rnd
            elif isinstance(msg, SyncProbe):
                peer_fp = msg.fingerprint
                if probed_round != msg.round:
                    # Peer probed first (window mismatch); answer with ours.
                    send_frame(sock, SyncProbe(msg.round, state.fingerprint()))
                    probed_round = msg.round
            elif isinstance(msg, SyncOk):
                state.mark_synced()
            elif isinstance(msg, SyncFail):
                state.reset_streak()
            elif isinstance(msg, Abort):
                abort_reason = msg.reason
            else:
                raise ProtocolViolation(f"unexpected frame {msg!r}")

        if state.status == TIMED_OUT and abort_reason is None:
            # Wait for the server's matching round-cap abort, best effort.
            try:
                tail = read_frame(sock)
                if isinstance(tail, Abort):
                    abort_reason = tail.reason
            except (NetError, WireError):
                pass
    finally:
        sock.close()

    if abort_reason == ABORT_ROUND_CAP and state.status == RUNNING:
        state.status = TIMED_OUT
    own_fp = state.fingerprint()
    synced = state.status == SYNCED
    fp_self, fp_peer = own_fp, (peer_fp if peer_fp is not None else 0)
    if synced:
        fp_peer = own_fp
    report = SyncReport(
        synced=synced,
        rounds_used=state.rounds_elapsed,
        updates_applied=state.updates_applied,
        key_fingerprint_a=fp_self if role == "A" else fp_peer,
        key_fingerprint_b=fp_self if role == "B" else fp_peer,
        elapsed=time.perf_counter() - t0,
    )
    return PartyResult(report=report, state=state, key=derive_key(state.weights),
                       abort_reason=abort_reason)


def eavesdrop_client(addr: tuple[str, int], *, session_id: int,
                     weight_seed: int,
                     deadline: float = DEFAULT_DEADLINE) -> EavesdropResult:
    """Attach a passive listener to a session and watch it to completion.

    The listener learns the machine geometry from the KDC's echoed HELLO,
    then records every input and output bit, updating its own machine on
    agreement rounds exactly like the simple-attack simulation.
    """
    sock = _connect(addr, deadline)
    state: EavesdropperState | None = None
    observed_fp: int | None = None
    partners_synced = False
    abort_reason: int | None = None
    current_x: InputVector | None = None
    taus: list[int] = []
    params: TpmParams | None = None
    try:
        send_frame(sock, Hello(session_id, ROLE_E, 0, 0, 0, 0))
        while True:
            msg = read_frame(sock)
            if isinstance(msg, Hello):
                params = TpmParams(k=msg.k, n=msg.n, l=msg.l,
                                   rule=RULE_NAMES[msg.rule])
                state = EavesdropperState.from_seed(params, weight_seed)
            elif isinstance(msg, Start):
                if state is None:
                    raise ProtocolViolation("START before geometry HELLO")
            elif isinstance(msg, RoundInput):
                if state is None or params is None:
                    raise ProtocolViolation("INPUT before geometry HELLO")
                try:
                    current_x = InputVector(
                        params, unpack_inputs(msg.packed, params.k, params.n)
                    )
                except WireError as e:
                    raise ProtocolViolation(f"bad INPUT payload: {e}") from e
                taus = []
            elif isinstance(msg, RoundOutput):
                taus.append(msg.tau)
                if len(taus) == 2:
                    if state is None or current_x is None:
                        raise ProtocolViolation("OUTPUT before INPUT")
                    state.eavesdrop_round(current_x, taus[0], taus[1])
                    current_x = None
            elif isinstance(msg, SyncProbe):
                observed_fp = msg.fingerprint
            elif isinstance(msg, SyncOk):
                partners_synced = True
                break
            elif isinstance(msg, SyncFail):
                continue
            elif isinstance(msg, Abort):
                abort_reason = msg.reason
                break
            else:
                raise ProtocolViolation(f"unexpected frame {msg!r}")
    finally:
        sock.close()

    if state is None:
        detail = f" (abort reason {abort_reason})" if abort_reason is not None else ""
        raise ProtocolViolation(
            "session ended before the geometry was announced" + detail
        )
    own = state.fingerprint()
    return EavesdropResult(
        fingerprint=own,
        observed_fingerprint=observed_fp,
        matched=observed_fp is not None and own == observed_fp,
        partners_synced=partners_synced,
        rounds_observed=state.rounds_observed,
        state=state,
        abort_reason=abort_reason,
    )
