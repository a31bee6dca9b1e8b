"""Batch experiment harness emitting CSV.

Three analyses: synchronization scaling while one machine dimension
varies, key randomness across independent trials, and partner-versus-
listener comparisons. Rows are deterministic functions of the spec
(except the elapsed-time column); summary lines are appended as
'#'-prefixed comments so the data block keeps a single stable header.

Per-trial seeds are derived by fingerprinting the big-endian bytes of
(base_seed, varying value, trial index, stream tag), one stream tag per
seed the session consumes: 0 input chain, 1/2 partner weights, 3 listener
weights. Distinct tags keep the four seeds of a trial independent.
"""

from __future__ import annotations

import csv
import io
import statistics
import struct
from dataclasses import dataclass, field

from .errors import ConfigInvalid
from .keymat import fnv1a64
from .session import (
    DEFAULT_AGREEMENT_WINDOW,
    DEFAULT_MAX_ROUNDS,
    SessionConfig,
    run_attack_session,
    run_local_session,
)
from .tpm import TpmParams

SWEEP_HEADER = [
    "varying_value", "trial_index", "synced", "rounds_used",
    "updates_applied", "pct_iterations", "elapsed_micros", "fingerprint",
]
RANDOMNESS_HEADER = ["trial_index", "synced", "rounds_used", "fingerprint"]
ATTACK_HEADER = [
    "trial_index", "partner_synced", "partner_rounds_used",
    "attacker_synced", "attacker_mean_overlap",
    "fingerprint_a", "fingerprint_e",
]

INPUT_STREAM = 0
WEIGHT_A_STREAM = 1
WEIGHT_B_STREAM = 2
WEIGHT_E_STREAM = 3


def derive_seed(base_seed: int, value: int, trial: int, stream: int) -> int:
    return fnv1a64(struct.pack(">QQQB", base_seed & ((1 << 64) - 1),
                               value, trial, stream))


def trial_config(params: TpmParams, base_seed: int, value: int, trial: int,
                 max_rounds: int, agreement_window: int) -> SessionConfig:
    return SessionConfig(
        params=params,
        input_seed=derive_seed(base_seed, value, trial, INPUT_STREAM),
        weight_seed_a=derive_seed(base_seed, value, trial, WEIGHT_A_STREAM),
        weight_seed_b=derive_seed(base_seed, value, trial, WEIGHT_B_STREAM),
        weight_seed_e=derive_seed(base_seed, value, trial, WEIGHT_E_STREAM),
        max_rounds=max_rounds,
        agreement_window=agreement_window,
    )


@dataclass(frozen=True)
class SweepSpec:
    """One-dimensional parameter sweep: vary k, n or l, fix the rest."""

    varying: str
    values: tuple[int, ...]
    fixed: TpmParams
    trials_per_value: int
    base_seed: int
    max_rounds: int = DEFAULT_MAX_ROUNDS
    agreement_window: int = DEFAULT_AGREEMENT_WINDOW

    def __post_init__(self):
        if self.varying not in ("k", "n", "l"):
            raise ConfigInvalid(f"varying must be k, n or l, got {self.varying!r}")
        if not self.values:
            raise ConfigInvalid("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigInvalid("values must be strictly increasing")
        if self.trials_per_value < 1:
            raise ConfigInvalid("trials_per_value must be >= 1")
        if self.agreement_window < 1 or self.max_rounds < self.agreement_window:
            raise ConfigInvalid("need max_rounds >= agreement_window >= 1")

    def params_at(self, value: int) -> TpmParams:
        merged = {"k": self.fixed.k, "n": self.fixed.n, "l": self.fixed.l,
                  self.varying: value}
        return TpmParams(rule=self.fixed.rule, **merged)


def run_sweep(spec: SweepSpec) -> str:
    """One CSV data row per (value, trial), plus a summary line per value."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    summaries = []
    for value in spec.values:
        params = spec.params_at(value)
        rounds = []
        synced_count = 0
        for trial in range(spec.trials_per_value):
            cfg = trial_config(params, spec.base_seed, value, trial,
                               spec.max_rounds, spec.agreement_window)
            rep = run_local_session(cfg)
            rounds.append(rep.rounds_used)
            synced_count += rep.synced
            writer.writerow([
                value, trial, int(rep.synced), rep.rounds_used,
                rep.updates_applied,
                f"{rep.rounds_used / spec.max_rounds:.6f}",
                int(rep.elapsed * 1e6),
                f"{rep.key_fingerprint_a:016x}",
            ])
        summaries.append(
            f"# summary varying_value={value} trials={spec.trials_per_value}"
            f" sync_fraction={synced_count / spec.trials_per_value:.6f}"
            f" mean_rounds={statistics.fmean(rounds):.3f}"
            f" median_rounds={statistics.median(rounds):.1f}"
        )
    for line in summaries:
        out.write(line + "\n")
    return out.getvalue()


def run_randomness(trials: int, params: TpmParams, base_seed: int,
                   max_rounds: int = DEFAULT_MAX_ROUNDS,
                   agreement_window: int = DEFAULT_AGREEMENT_WINDOW) -> str:
    """Fingerprint per independent session plus a distinct-count summary."""
    if trials < 2:
        raise ConfigInvalid("randomness needs at least 2 trials")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RANDOMNESS_HEADER)
    fingerprints = []
    synced_count = 0
    for trial in range(trials):
        cfg = trial_config(params, base_seed, 0, trial,
                           max_rounds, agreement_window)
        rep = run_local_session(cfg)
        fingerprints.append(rep.key_fingerprint_a)
        synced_count += rep.synced
        writer.writerow([
            trial, int(rep.synced), rep.rounds_used,
            f"{rep.key_fingerprint_a:016x}",
        ])
    out.write(
        f"# summary trials={trials} synced={synced_count}"
        f" distinct_fingerprints={len(set(fingerprints))}\n"
    )
    return out.getvalue()


def run_attack_bench(trials: int, params: TpmParams, base_seed: int,
                     max_rounds: int = DEFAULT_MAX_ROUNDS,
                     agreement_window: int = DEFAULT_AGREEMENT_WINDOW) -> str:
    """Partner and listener outcomes per trial plus both success fractions."""
    if trials < 1:
        raise ConfigInvalid("attack bench needs at least 1 trial")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ATTACK_HEADER)
    partner_synced = 0
    attacker_synced = 0
    overlaps = []
    for trial in range(trials):
        cfg = trial_config(params, base_seed, 0, trial,
                           max_rounds, agreement_window)
        rep = run_attack_session(cfg)
        partner_synced += rep.partner_report.synced
        attacker_synced += rep.attacker_synced
        overlaps.append(rep.attacker_mean_overlap)
        writer.writerow([
            trial, int(rep.partner_report.synced),
            rep.partner_report.rounds_used,
            int(rep.attacker_synced),
            f"{rep.attacker_mean_overlap:.6f}",
            f"{rep.partner_report.key_fingerprint_a:016x}",
            f"{rep.key_fingerprint_e:016x}",
        ])
    out.write(
        f"# summary trials={trials}"
        f" partner_sync_fraction={partner_synced / trials:.6f}"
        f" attacker_sync_fraction={attacker_synced / trials:.6f}"
        f" mean_attacker_overlap={statistics.fmean(overlaps):.6f}\n"
    )
    return out.getvalue()
