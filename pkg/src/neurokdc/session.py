"""Protocol-role state machines and in-process session runners.

A partner emits an output bit each round, learns from its peer's bit, and
initiates a sync probe once it has seen `agreement_window` consecutive
agreements. A confirmed probe (equal key fingerprints) is the only thing
that flips a partner to synced; an unconfirmed one just resets the streak.

The in-process runners drive both partners (plus, for attack runs, a
passive listener) through the exact round sequence the networked protocol
produces, via the selected compute backend.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import ConfigInvalid, InvalidState
from .keymat import fingerprint_weights
from .rng import SplitMix64, gen_weights
from .tpm import (
    InputVector,
    RoundTrace,
    TpmParams,
    WeightMatrix,
    compute_output,
    overlap,
    update_weights,
)

RUNNING = "running"
SYNCED = "synced"
TIMED_OUT = "timed-out"

DEFAULT_MAX_ROUNDS = 100_000
DEFAULT_AGREEMENT_WINDOW = 50


@dataclass(frozen=True)
class SessionConfig:
    """All seeds and limits needed to reproduce a session bit for bit."""

    params: TpmParams
    input_seed: int
    weight_seed_a: int
    weight_seed_b: int
    weight_seed_e: int = 0
    max_rounds: int = DEFAULT_MAX_ROUNDS
    agreement_window: int = DEFAULT_AGREEMENT_WINDOW

    def __post_init__(self):
        if self.agreement_window < 1:
            raise ConfigInvalid("agreement_window must be >= 1")
        if self.max_rounds < self.agreement_window:
            raise ConfigInvalid("max_rounds must be >= agreement_window")


@dataclass
class SyncReport:
    """Outcome of one partner-pair session."""

    synced: bool
    rounds_used: int
    updates_applied: int
    key_fingerprint_a: int
    key_fingerprint_b: int
    elapsed: float


@dataclass
class AttackReport:
    """Partner outcome plus how the listener fared against partner A."""

    partner_report: SyncReport
    attacker_synced: bool
    attacker_mean_overlap: float
    key_fingerprint_e: int


@dataclass
class PartnerState:
    """One protocol partner: weights plus streak bookkeeping."""

    params: TpmParams
    weights: WeightMatrix
    max_rounds: int = DEFAULT_MAX_ROUNDS
    agreement_window: int = DEFAULT_AGREEMENT_WINDOW
    rounds_elapsed: int = 0
    consecutive_agreements: int = 0
    updates_applied: int = 0
    status: str = RUNNING

    @classmethod
    def from_seed(cls, params: TpmParams, weight_seed: int,
                  max_rounds: int = DEFAULT_MAX_ROUNDS,
                  agreement_window: int = DEFAULT_AGREEMENT_WINDOW) -> "PartnerState":
        w = gen_weights(SplitMix64(weight_seed), params)
        return cls(params=params, weights=w, max_rounds=max_rounds,
                   agreement_window=agreement_window)

    def partner_round(self, x: InputVector) -> tuple[int, RoundTrace]:
        """Evaluate the machine on this round's input; state is untouched."""
        if self.status != RUNNING:
            raise InvalidState(f"partner is {self.status}, not {RUNNING}")
        trace = compute_output(self.weights, x)
        return trace.tau, trace

    def apply_peer_output(self, x: InputVector, trace: RoundTrace,
                          tau_peer: int) -> None:
        """Digest the peer's output bit: learn on agreement, track streaks.

        Hitting the round cap with a probe pending does not time the
        partner out yet; the probe resolves first (a confirmed sync on the
        final round still counts).
        """
        if self.status != RUNNING:
            raise InvalidState(f"partner is {self.status}, not {RUNNING}")
        if trace.tau == tau_peer:
            self.weights = update_weights(self.weights, x, trace, tau_peer)
            self.consecutive_agreements += 1
            self.updates_applied += 1
        else:
            self.consecutive_agreements = 0
        self.rounds_elapsed += 1
        if self.rounds_elapsed >= self.max_rounds and not self.probe_ready:
            self.status = TIMED_OUT

    @property
    def probe_ready(self) -> bool:
        return (self.status == RUNNING
                and self.consecutive_agreements >= self.agreement_window)

    def fingerprint(self) -> int:
        return fingerprint_weights(self.weights)

    def reset_streak(self) -> None:
        """Failed probe: drop the streak; a deferred round-cap lands now."""
        self.consecutive_agreements = 0
        if self.status == RUNNING and self.rounds_elapsed >= self.max_rounds:
            self.status = TIMED_OUT

    def mark_synced(self) -> None:
        """Only called after a fingerprint-confirmed probe."""
        self.status = SYNCED


@dataclass
class EavesdropperState:
    """Passive listener: updates only on rounds where the partners agreed,
    imitating their shared output bit with its own hidden signs."""

    params: TpmParams
    weights: WeightMatrix
    rounds_observed: int = 0

    @classmethod
    def from_seed(cls, params: TpmParams, weight_seed: int) -> "EavesdropperState":
        return cls(params=params, weights=gen_weights(SplitMix64(weight_seed), params))

    def eavesdrop_round(self, x: InputVector, tau_a: int, tau_b: int) -> None:
        trace = compute_output(self.weights, x)
        if tau_a == tau_b:
            forced = RoundTrace(sums=trace.sums, sigma=trace.sigma, tau=tau_a)
            self.weights = update_weights(self.weights, x, forced, tau_a)
        self.rounds_observed += 1

    def fingerprint(self) -> int:
        return fingerprint_weights(self.weights)


def _initial_weights(cfg: SessionConfig, seed: int) -> np.ndarray:
    return gen_weights(SplitMix64(seed), cfg.params).w


def run_local_session(cfg: SessionConfig) -> SyncReport:
    """Drive both partners fully in-process and report the outcome.

    Deterministic given the config (apart from the elapsed wall clock).
    """
    p = cfg.params
    wa = _initial_weights(cfg, cfg.weight_seed_a)
    wb = _initial_weights(cfg, cfg.weight_seed_b)
    t0 = time.perf_counter()
    synced, rounds, updates = backends.session_loop(
        p.k, p.n, p.l, p.rule_code, cfg.max_rounds, cfg.agreement_window,
        cfg.input_seed, wa, wb,
    )
    elapsed = time.perf_counter() - t0
    return SyncReport(
        synced=synced,
        rounds_used=rounds,
        updates_applied=updates,
        key_fingerprint_a=fingerprint_weights(WeightMatrix(p, wa)),
        key_fingerprint_b=fingerprint_weights(WeightMatrix(p, wb)),
        elapsed=elapsed,
    )


def run_attack_session(cfg: SessionConfig) -> AttackReport:
    """Run a session with a listener observing every round; report both."""
    p = cfg.params
    wa = _initial_weights(cfg, cfg.weight_seed_a)
    wb = _initial_weights(cfg, cfg.weight_seed_b)
    we = _initial_weights(cfg, cfg.weight_seed_e)
    t0 = time.perf_counter()
    synced, rounds, updates = backends.attack_loop(
        p.k, p.n, p.l, p.rule_code, cfg.max_rounds, cfg.agreement_window,
        cfg.input_seed, wa, wb, we,
    )
    elapsed = time.perf_counter() - t0
    fp_a = fingerprint_weights(WeightMatrix(p, wa))
    fp_e = fingerprint_weights(WeightMatrix(p, we))
    report = SyncReport(
        synced=synced,
        rounds_used=rounds,
        updates_applied=updates,
        key_fingerprint_a=fp_a,
        key_fingerprint_b=fingerprint_weights(WeightMatrix(p, wb)),
        elapsed=elapsed,
    )
    mean_overlap = float(np.mean(overlap(WeightMatrix(p, we), WeightMatrix(p, wa))))
    return AttackReport(
        partner_report=report,
        attacker_synced=fp_e == fp_a,
        attacker_mean_overlap=mean_overlap,
        key_fingerprint_e=fp_e,
    )
