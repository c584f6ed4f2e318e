"""Discrete-mode state of one particle shared between Alice, the line and Bob.

The particle lives in the one-excitation sector of three bosonic modes, so a
state is three complex amplitudes (Alice, Transmission Line, Bob) plus a
status flag recording whether the particle has been absorbed by Bob's
detectors.  All operations return new states.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

NORM_TOL = 1e-12
# |amp_A|^2 closer than this to 0 or 1 is read out deterministically
NUMBER_TOL = 1e-9


class Region(enum.Enum):
    A = "A"
    TR = "Tr"
    B = "B"


class Status(enum.Enum):
    COHERENT = "Coherent"
    DETECTED_AT_BOB = "DetectedAtBob"
    VACUUM = "Vacuum"


class Outcome(enum.Enum):
    SURVIVED = "Survived"
    DETECTED_AT_BOB = "DetectedAtBob"


@dataclass(frozen=True)
class OneParticleState:
    amp_A: complex = 0j
    amp_Tr: complex = 0j
    amp_B: complex = 0j
    status: Status = Status.COHERENT

    def __post_init__(self):
        for name in ("amp_A", "amp_Tr", "amp_B"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.status is Status.COHERENT:
            if abs(self.norm() - 1.0) > NORM_TOL:
                raise ValueError(f"coherent state must be normalised, got norm {self.norm()!r}")
        elif self.amplitudes() != (0j, 0j, 0j):
            raise ValueError(f"{self.status.value} state must have zero amplitudes")

    def amplitudes(self) -> tuple[complex, complex, complex]:
        return (self.amp_A, self.amp_Tr, self.amp_B)

    def amplitude(self, region: Region) -> complex:
        return {Region.A: self.amp_A, Region.TR: self.amp_Tr, Region.B: self.amp_B}[region]

    def norm(self) -> float:
        return abs(self.amp_A) ** 2 + abs(self.amp_Tr) ** 2 + abs(self.amp_B) ** 2

    def probabilities(self) -> tuple[float, float, float]:
        return tuple(abs(a) ** 2 for a in self.amplitudes())


@dataclass(frozen=True)
class BeamSplitterStack:
    """Ordered beam-splitter angles (radians) met by the particle on each pass."""

    angles: tuple[float, ...]

    def __post_init__(self):
        angles = tuple(float(t) for t in self.angles)
        if len(angles) < 1:
            raise ValueError("a beam-splitter stack needs at least one angle")
        # closed interval: the ideal single-splitter stack sits at pi/2
        bad = [t for t in angles if not -math.pi / 2 <= t <= math.pi / 2]
        if bad:
            raise ValueError(f"angles must lie in [-pi/2, pi/2], got {bad}")
        object.__setattr__(self, "angles", angles)

    @classmethod
    def ideal(cls, n: int) -> "BeamSplitterStack":
        if n < 1:
            raise ValueError(f"N must be >= 1, got {n}")
        return cls((math.pi / (2 * n),) * n)

    @property
    def n(self) -> int:
        return len(self.angles)

    def __len__(self):
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles)


@dataclass(frozen=True)
class CollapseRecord:
    pass_index: int
    probability_removed: float


def vacuum() -> OneParticleState:
    return OneParticleState(status=Status.VACUUM)


def create_particle_at_A() -> OneParticleState:
    """Alice creates one particle in her laboratory: |1>_A |0>_Tr |0>_B."""
    return OneParticleState(1.0, 0.0, 0.0)


def transfer(state: OneParticleState, source: Region, target: Region) -> tuple[OneParticleState, float]:
    """Move the amplitude of ``source`` into ``target`` (the operator a_target^dag a_source).

    Returns the new state and the weight |amp_source|^2 that was moved.  A zero
    weight means the annihilator found nothing and the state is unchanged.
    The target must be empty: adding into an occupied mode would not
    preserve the norm, and the protocol never does it.
    """
    if source is target:
        raise ValueError("transfer needs distinct source and target regions")
    if state.status is Status.DETECTED_AT_BOB:
        raise ValueError("cannot transfer a particle already absorbed at Bob")
    amp = state.amplitude(source)
    weight = abs(amp) ** 2
    if state.status is Status.VACUUM or amp == 0:
        return state, 0.0
    if state.amplitude(target) != 0:
        raise ValueError(f"transfer target {target.value} is already occupied")
    amps = dict(zip(Region, state.amplitudes()))
    amps[target] += amp
    amps[source] = 0j
    return OneParticleState(amps[Region.A], amps[Region.TR], amps[Region.B]), weight


def beam_splitter_matrix(theta: float) -> np.ndarray:
    """2x2 unitary acting on (Tr, B): cos on the diagonal, i sin off it."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 1j * s], [1j * s, c]])


def apply_beam_splitter(state: OneParticleState, theta: float) -> OneParticleState:
    if state.status is not Status.COHERENT:
        raise ValueError(f"beam splitter needs a coherent state, got {state.status.value}")
    c, s = math.cos(theta), math.sin(theta)
    tr = c * state.amp_Tr + 1j * s * state.amp_B
    b = 1j * s * state.amp_Tr + c * state.amp_B
    return replace(state, amp_Tr=tr, amp_B=b)


def collapse_bob(
    state: OneParticleState, rng: np.random.Generator, pass_index: int = 1
) -> tuple[OneParticleState, Outcome, CollapseRecord]:
    """Projective which-region measurement by Bob's detectors."""
    if state.status is not Status.COHERENT:
        raise ValueError(f"collapse needs a coherent state, got {state.status.value}")
    p_bob = abs(state.amp_B) ** 2
    record = CollapseRecord(pass_index, p_bob)
    if p_bob > 0 and rng.random() < p_bob:
        return OneParticleState(status=Status.DETECTED_AT_BOB), Outcome.DETECTED_AT_BOB, record
    if p_bob == 0:
        return state, Outcome.SURVIVED, record
    scale = 1.0 / math.sqrt(abs(state.amp_A) ** 2 + abs(state.amp_Tr) ** 2)
    return OneParticleState(state.amp_A * scale, state.amp_Tr * scale, 0.0), Outcome.SURVIVED, record


def measure_alice_number(
    state: OneParticleState, rng: Optional[np.random.Generator] = None
) -> tuple[int, OneParticleState]:
    """Alice's number operator a_A^dag a_A; returns (count, post-measurement state).

    Protocol-exact states are read deterministically.  A genuine superposition
    (reachable only with imperfect beam splitters) needs ``rng`` for the Born
    draw.
    """
    if state.status is not Status.COHERENT:
        return 0, state
    p_a = abs(state.amp_A) ** 2
    if p_a >= 1.0 - NUMBER_TOL:
        return 1, state
    if p_a <= NUMBER_TOL:
        if p_a == 0:
            return 0, state
        scale = 1.0 / math.sqrt(abs(state.amp_Tr) ** 2 + abs(state.amp_B) ** 2)
        return 0, OneParticleState(0.0, state.amp_Tr * scale, state.amp_B * scale)
    if rng is None:
        raise ValueError("measuring a superposition of Alice occupancy needs a random generator")
    if rng.random() < p_a:
        return 1, OneParticleState(state.amp_A / abs(state.amp_A), 0.0, 0.0)
    scale = 1.0 / math.sqrt(1.0 - p_a)
    return 0, OneParticleState(0.0, state.amp_Tr * scale, state.amp_B * scale)


def alice_probability(bit: int, angles: Sequence[float] | np.ndarray) -> np.ndarray:
    """Probability that Alice detects the particle, batched over leading axes.

    ``angles`` has shape (..., N).  The mode amplitudes are propagated pass by
    pass; for ``bit == 1`` Bob's mode is projected out after every pass
    without renormalising, so the surviving weight is the branch probability.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    angles = np.asarray(angles, dtype=float)
    tr = np.ones(angles.shape[:-1], dtype=complex)
    b = np.zeros_like(tr)
    for k in range(angles.shape[-1]):
        c = np.cos(angles[..., k])
        s = 1j * np.sin(angles[..., k])
        tr, b = c * tr + s * b, s * tr + c * b
        if bit == 1:
            b = np.zeros_like(b)
    return tr.real**2 + tr.imag**2
