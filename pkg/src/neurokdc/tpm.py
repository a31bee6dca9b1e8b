"""Tree parity machine mathematics.

A machine has k hidden units, each wired to n inputs through integer
weights bounded by [-l, +l]. Its output is the product of the hidden
units' signs. Everything in this module is a pure function of its
arguments; nothing here touches a network or a clock.

Sign convention: a zero local field maps to -1, so hidden signs and the
output bit always live in {-1, +1}. Both parties (and every test) must
share this convention or transcripts diverge at the bit level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch

HEBBIAN = "hebbian"
ANTI_HEBBIAN = "anti-hebbian"
RANDOM_WALK = "random-walk"

RULES = (HEBBIAN, ANTI_HEBBIAN, RANDOM_WALK)

# Wire and kernel encoding of the rule choice.
RULE_CODES = {HEBBIAN: 0, ANTI_HEBBIAN: 1, RANDOM_WALK: 2}
RULE_NAMES = {code: name for name, code in RULE_CODES.items()}

# Weight bound cap: one byte per weight in the key layout.
MAX_WEIGHT_BOUND = 127

# Local fields must fit comfortably in 64-bit arithmetic.
_FIELD_BUDGET = 1 << 60


@dataclass(frozen=True)
class TpmParams:
    """Machine geometry (k hidden units, n inputs each, bound l) plus rule."""

    k: int
    n: int
    l: int
    rule: str = HEBBIAN

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ConfigInvalid(f"k and n must be >= 1, got k={self.k} n={self.n}")
        if not 1 <= self.l <= MAX_WEIGHT_BOUND:
            raise ConfigInvalid(f"l must be in [1, {MAX_WEIGHT_BOUND}], got {self.l}")
        if self.k * self.n * self.l > _FIELD_BUDGET:
            raise ConfigInvalid("k*n*l too large for 64-bit local fields")
        if self.rule not in RULES:
            raise ConfigInvalid(f"unknown learning rule {self.rule!r}")

    @property
    def rule_code(self) -> int:
        return RULE_CODES[self.rule]


@dataclass
class WeightMatrix:
    """k x n integer synaptic weights, every entry in [-l, +l]."""

    params: TpmParams
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.int64)
        if self.w.shape != (self.params.k, self.params.n):
            raise DimensionMismatch(
                f"weights shape {self.w.shape} != ({self.params.k}, {self.params.n})"
            )
        if np.any(np.abs(self.w) > self.params.l):
            raise ConfigInvalid(f"weight outside [-{self.params.l}, {self.params.l}]")

    def copy(self) -> "WeightMatrix":
        return WeightMatrix(self.params, self.w.copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.w, other.w)


@dataclass
class InputVector:
    """k x n entries in {-1, +1}, shared by every machine in a round."""

    params: TpmParams
    x: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        if self.x.shape != (self.params.k, self.params.n):
            raise DimensionMismatch(
                f"input shape {self.x.shape} != ({self.params.k}, {self.params.n})"
            )
        if not np.all(np.abs(self.x) == 1):
            raise ConfigInvalid("input entries must be -1 or +1")


@dataclass(frozen=True)
class RoundTrace:
    """One round's local fields, hidden signs and output bit."""

    sums: np.ndarray = field(compare=False)
    sigma: np.ndarray = field(compare=False)
    tau: int


def _check_same_geometry(a: TpmParams, b: TpmParams):
    if (a.k, a.n) != (b.k, b.n):
        raise DimensionMismatch(f"geometry ({a.k},{a.n}) vs ({b.k},{b.n})")


def compute_output(w: WeightMatrix, x: InputVector) -> RoundTrace:
    """Evaluate the machine: row sums, hidden signs, product output bit."""
    _check_same_geometry(w.params, x.params)
    sums = np.sum(w.w * x.x, axis=1)
    sigma = np.where(sums > 0, 1, -1).astype(np.int64)
    tau = int(np.prod(sigma))
    return RoundTrace(sums=sums, sigma=sigma, tau=tau)


def clamp(v: int, l: int) -> int:
    """Saturate a single weight value to [-l, +l]."""
    if v > l:
        return l
    if v < -l:
        return -l
    return v


def update_weights(
    w: WeightMatrix, x: InputVector, trace: RoundTrace, tau_peer: int
) -> WeightMatrix:
    """Apply the session's learning rule for one round.

    No-op unless the two outputs agree. Rows whose hidden sign differs
    from the output bit are untouched; the rest move by one clamped step:
    hebbian with x*tau, anti-hebbian against it, random-walk with x alone.
    """
    _check_same_geometry(w.params, x.params)
    if trace.tau != tau_peer:
        return w
    rule = w.params.rule
    if rule == HEBBIAN:
        delta = x.x * trace.tau
    elif rule == ANTI_HEBBIAN:
        delta = -x.x * trace.tau
    else:
        delta = x.x
    rows = (trace.sigma == trace.tau)[:, np.newaxis]
    l = w.params.l
    new_w = np.clip(w.w + np.where(rows, delta, 0), -l, l)
    return WeightMatrix(w.params, new_w)


def overlap(wa: WeightMatrix, wb: WeightMatrix) -> np.ndarray:
    """Per-row normalized dot product in [-1, 1]; 1 means the row is synced.

    A row is 0 if either side's row is all-zero.
    """
    if wa.params != wb.params:
        raise DimensionMismatch("overlap requires identical params")
    dot = np.sum(wa.w * wb.w, axis=1).astype(np.float64)
    na = np.sum(wa.w * wa.w, axis=1).astype(np.float64)
    nb = np.sum(wb.w * wb.w, axis=1).astype(np.float64)
    den = np.sqrt(na * nb)
    out = np.zeros(wa.params.k, dtype=np.float64)
    nz = den > 0
    out[nz] = dot[nz] / den[nz]
    return out
