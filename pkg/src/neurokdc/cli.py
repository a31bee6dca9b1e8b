"""The kdc command line: serve, party, eavesdrop, and sim experiments.

Exit codes: serve returns 0 on clean shutdown. party and eavesdrop return
0 when the session synced, 2 on a round-cap timeout, 3 on protocol or
transport failure. sim subcommands return 0 on completion, 1 on a bad
configuration.
"""

from __future__ import annotations

import argparse
import sys

from .client import eavesdrop_client, party_client
from .errors import ConfigInvalid, NetError, NeurokdcError, WireError
from .experiments import SweepSpec, run_attack_bench, run_randomness, run_sweep
from .server import KdcServer
from .session import DEFAULT_AGREEMENT_WINDOW, DEFAULT_MAX_ROUNDS
from .tpm import RULES, TpmParams
from .transport import DEFAULT_DEADLINE
from .wire import ABORT_ROUND_CAP

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_TIMEOUT = 2
EXIT_PROTOCOL = 3


def _addr(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return v


def _values(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad values list {text!r}") from e


def _add_machine_args(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, default=3, help="hidden units")
    p.add_argument("--n", type=int, default=11, help="inputs per hidden unit")
    p.add_argument("--l", type=int, default=3, help="weight bound")
    p.add_argument("--rule", choices=RULES, default="hebbian")


def _add_limits(p: argparse.ArgumentParser):
    p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
    p.add_argument("--agreement-window", type=int, default=DEFAULT_AGREEMENT_WINDOW)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdc",
        description="Neural key exchange: KDC service, protocol roles and "
                    "simulation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the key distribution centre")
    serve.add_argument("--listen", type=_addr, default=("127.0.0.1", 4710))
    serve.add_argument("--input-seed", type=_u64, default=0)
    serve.add_argument("--timeout", type=float, default=DEFAULT_DEADLINE)
    _add_limits(serve)

    party = sub.add_parser("party", help="run protocol partner A or B")
    party.add_argument("--connect", type=_addr, required=True)
    party.add_argument("--session", type=_u64, required=True)
    party.add_argument("--role", choices=("A", "B"), required=True)
    party.add_argument("--weight-seed", type=_u64, required=True)
    party.add_argument("--emit-key", action="store_true",
                       help="print the derived key as lowercase hex")
    party.add_argument("--timeout", type=float, default=DEFAULT_DEADLINE)
    _add_machine_args(party)
    _add_limits(party)

    eav = sub.add_parser("eavesdrop", help="attach a passive listener")
    eav.add_argument("--connect", type=_addr, required=True)
    eav.add_argument("--session", type=_u64, required=True)
    eav.add_argument("--weight-seed", type=_u64, required=True)
    eav.add_argument("--timeout", type=float, default=DEFAULT_DEADLINE)

    sim = sub.add_parser("sim", help="batch experiments, CSV output")
    simsub = sim.add_subparsers(dest="experiment", required=True)

    sweep = simsub.add_parser("sweep", help="vary one machine dimension")
    sweep.add_argument("--vary", choices=("k", "n", "l"), required=True)
    sweep.add_argument("--values", type=_values, required=True)
    sweep.add_argument("--trials", type=int, required=True)
    sweep.add_argument("--seed", type=_u64, required=True)
    sweep.add_argument("--out", default="-")
    _add_machine_args(sweep)
    _add_limits(sweep)

    rand = simsub.add_parser("randomness", help="key distinctness across trials")
    rand.add_argument("--trials", type=int, required=True)
    rand.add_argument("--seed", type=_u64, required=True)
    rand.add_argument("--out", default="-")
    _add_machine_args(rand)
    _add_limits(rand)

    attack = simsub.add_parser("attack", help="partner vs listener comparison")
    attack.add_argument("--trials", type=int, required=True)
    attack.add_argument("--seed", type=_u64, required=True)
    attack.add_argument("--out", default="-")
    _add_machine_args(attack)
    _add_limits(attack)

    return parser


def _write_csv(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="ascii", newline="") as fh:
            fh.write(text)


def _cmd_serve(args) -> int:
    server = KdcServer(
        args.listen[0], args.listen[1],
        max_rounds=args.max_rounds,
        agreement_window=args.agreement_window,
        input_seed=args.input_seed,
        deadline=args.timeout,
    )
    host, port = server.start()
    print(f"kdc listening on {host}:{port}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


def _cmd_party(args) -> int:
    params = TpmParams(k=args.k, n=args.n, l=args.l, rule=args.rule)
    result = party_client(
        args.connect,
        session_id=args.session,
        role=args.role,
        params=params,
        weight_seed=args.weight_seed,
        max_rounds=args.max_rounds,
        agreement_window=args.agreement_window,
        deadline=args.timeout,
    )
    rep = result.report
    print(f"role={args.role} synced={rep.synced} rounds={rep.rounds_used} "
          f"updates={rep.updates_applied} "
          f"fingerprint={result.key.fingerprint:016x}", file=sys.stderr)
    if args.emit_key:
        print(result.key.bytes.hex())
    if rep.synced:
        return EXIT_OK
    if result.abort_reason in (None, ABORT_ROUND_CAP):
        return EXIT_TIMEOUT
    return EXIT_PROTOCOL


def _cmd_eavesdrop(args) -> int:
    result = eavesdrop_client(
        args.connect,
        session_id=args.session,
        weight_seed=args.weight_seed,
        deadline=args.timeout,
    )
    print(f"rounds_observed={result.rounds_observed} "
          f"partners_synced={result.partners_synced} "
          f"matched={result.matched} "
          f"fingerprint={result.fingerprint:016x}", file=sys.stderr)
    if result.partners_synced:
        return EXIT_OK
    if result.abort_reason == ABORT_ROUND_CAP:
        return EXIT_TIMEOUT
    return EXIT_PROTOCOL


def _cmd_sim(args) -> int:
    params = TpmParams(k=args.k, n=args.n, l=args.l, rule=args.rule)
    if args.experiment == "sweep":
        spec = SweepSpec(
            varying=args.vary,
            values=args.values,
            fixed=params,
            trials_per_value=args.trials,
            base_seed=args.seed,
            max_rounds=args.max_rounds,
            agreement_window=args.agreement_window,
        )
        text = run_sweep(spec)
    elif args.experiment == "randomness":
        text = run_randomness(args.trials, params, args.seed,
                              args.max_rounds, args.agreement_window)
    else:
        text = run_attack_bench(args.trials, params, args.seed,
                                args.max_rounds, args.agreement_window)
    _write_csv(text, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "party":
            return _cmd_party(args)
        if args.command == "eavesdrop":
            return _cmd_eavesdrop(args)
        return _cmd_sim(args)
    except ConfigInvalid as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NetError, WireError) as e:
        print(f"protocol error: {e}", file=sys.stderr)
        return EXIT_PROTOCOL
    except NeurokdcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
