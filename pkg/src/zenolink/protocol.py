"""The 0-bit and 1-bit processes, the M-process logical encoding and the
closed-form probabilities used to check them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence

import numpy as np

from .core import (
    NUMBER_TOL,
    BeamSplitterStack,
    Outcome,
    Region,
    apply_beam_splitter,
    collapse_bob,
    create_particle_at_A,
    measure_alice_number,
    transfer,
)


class AngleSource(Protocol):
    mode: str

    def sample(self, n: int, rng: np.random.Generator) -> BeamSplitterStack: ...


@dataclass(frozen=True)
class ProcessOutcome:
    alice_detects: bool
    bob_detects: bool
    # B-originated amplitude was mixed back into the line during this run
    entered_bob_support: bool
    pass_count: int

    def __post_init__(self):
        if self.alice_detects and self.bob_detects:
            raise ValueError("Alice and Bob cannot both detect the single particle")


@dataclass(frozen=True)
class LogicalBitConfig:
    bit: int
    n: int
    m: int

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit}")
        if self.n < 1 or self.m < 1:
            raise ValueError(f"N and M must be >= 1, got N={self.n}, M={self.m}")


@dataclass(frozen=True)
class LogicalOutcome:
    sent_bit: int
    decoded_bit: int
    violation: bool
    per_process: tuple[ProcessOutcome, ...] = field(repr=False)

    @property
    def error(self) -> bool:
        return self.decoded_bit != self.sent_bit


def _as_angles(angles) -> np.ndarray:
    if isinstance(angles, BeamSplitterStack):
        return np.asarray(angles.angles)
    return np.asarray(angles, dtype=float)


def run_process(bit: int, angles: BeamSplitterStack, rng: np.random.Generator) -> ProcessOutcome:
    """One protocol round, step by step on the discrete-mode state."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    state = create_particle_at_A()
    state, _ = transfer(state, Region.A, Region.TR)
    fed_back = False
    passes = 0
    for k, theta in enumerate(angles, start=1):
        if state.amp_B != 0:
            fed_back = True
        state = apply_beam_splitter(state, theta)
        passes = k
        if bit == 1:
            state, outcome, _ = collapse_bob(state, rng, pass_index=k)
            if outcome is Outcome.DETECTED_AT_BOB:
                return ProcessOutcome(False, True, fed_back, passes)
    state, _ = transfer(state, Region.TR, Region.A)
    count, _ = measure_alice_number(state, rng)
    return ProcessOutcome(count == 1, False, fed_back, passes)


@dataclass
class ProcessBatch:
    alice_detects: np.ndarray
    bob_detects: np.ndarray
    entered_bob_support: np.ndarray
    pass_count: np.ndarray

    def __len__(self):
        return len(self.alice_detects)


def simulate_processes(bit: int, angles, rng: np.random.Generator, trials: Optional[int] = None) -> ProcessBatch:
    """Vectorised version of :func:`run_process`.

    ``angles`` is either one stack (shared by ``trials`` rounds) or an array of
    shape (trials, N) with one stack per round.  Bob's detectors are sampled
    pass by pass, exactly as in the scalar path.
    """
    ang = _as_angles(angles)
    if ang.ndim == 1:
        if trials is None:
            raise ValueError("trials is required when a single stack is given")
        ang = np.broadcast_to(ang, (trials, ang.size))
    trials, n = ang.shape
    tr = np.ones(trials, dtype=complex)
    b = np.zeros(trials, dtype=complex)
    alive = np.ones(trials, dtype=bool)
    fed_back = np.zeros(trials, dtype=bool)
    passes = np.zeros(trials, dtype=np.int64)
    for k in range(n):
        fed_back |= alive & (b != 0)
        c = np.cos(ang[:, k])
        s = 1j * np.sin(ang[:, k])
        tr, b = c * tr + s * b, s * tr + c * b
        passes[alive] = k + 1
        if bit == 1:
            p_bob = b.real**2 + b.imag**2
            detected = alive & (p_bob > 0) & (rng.random(trials) < p_bob)
            alive &= ~detected
            keep = np.sqrt(np.where(alive, 1.0 - p_bob, 1.0))
            tr = np.where(alive, tr / np.where(keep > 0, keep, 1.0), 0)
            b = np.zeros(trials, dtype=complex)
    # final transfer Tr -> A and Alice's number measurement
    p_a = np.where(alive, tr.real**2 + tr.imag**2, 0.0)
    alice = p_a >= 1.0 - NUMBER_TOL
    mixed = alive & (p_a > NUMBER_TOL) & ~alice
    if mixed.any():
        alice |= mixed & (rng.random(trials) < p_a)
    return ProcessBatch(alice, ~alive, fed_back, passes)


def p1_success(angles) -> float:
    """Probability a 1-bit round survives every pass: prod cos^2(theta_i)."""
    return float(np.prod(np.cos(_as_angles(angles)) ** 2))


def p0_return(angles) -> float:
    """Probability a 0-bit round leaves the particle in the line: cos^2(sum theta_i)."""
    return float(math.cos(float(np.sum(_as_angles(angles)))) ** 2)


def p1_fail_logical(p_success: float, m: int) -> float:
    return (1.0 - p_success) ** m


def p0_fail_logical(p_return: float, m: int) -> float:
    """Exact logical-0 failure over M rounds; ``m * p_return`` is its first-order form."""
    return -math.expm1(m * math.log1p(-p_return)) if p_return < 1 else 1.0


def run_logical_bit(
    cfg: LogicalBitConfig, noise: Optional[AngleSource] = None, rng: Optional[np.random.Generator] = None
) -> LogicalOutcome:
    """Send one logical bit as M rounds; decode 1 iff Alice saw at least one particle."""
    rng = np.random.default_rng() if rng is None else rng
    if noise is None:
        stacks = [BeamSplitterStack.ideal(cfg.n)] * cfg.m
    elif noise.mode == "static_device":
        stacks = [noise.sample(cfg.n, rng)] * cfg.m
    else:
        stacks = [noise.sample(cfg.n, rng) for _ in range(cfg.m)]
    outcomes = tuple(run_process(cfg.bit, s, rng) for s in stacks)
    decoded = decode(outcomes)
    return LogicalOutcome(cfg.bit, decoded, cfg.bit == 0 and decoded == 1, outcomes)


def decode(outcomes: Iterable[ProcessOutcome]) -> int:
    return int(any(o.alice_detects for o in outcomes))


def zeno_limit_table(n_values: Sequence[int]) -> list[tuple[int, float]]:
    rows = []
    for n in n_values:
        if n < 1:
            raise ValueError(f"N must be >= 1, got {n}")
        rows.append((int(n), math.cos(math.pi / (2 * n)) ** (2 * n)))
    return rows
