"""Potentials and the time-staged schedule that drives a scenario.

Every spec evaluates to a finite array on the grid plus a set of pinned
(hard-wall) node indices; an infinite barrier is represented only through
the pinned set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .grid import Grid1D


@dataclass(frozen=True)
class Harmonic:
    center: float
    omega: float
    offset: float = 0.0

    def values(self, x):
        return 0.5 * self.omega**2 * (x - self.center) ** 2 + self.offset


@dataclass(frozen=True)
class Flat:
    value: float = 0.0

    def values(self, x):
        return np.full_like(x, self.value, dtype=float)


@dataclass(frozen=True)
class Split:
    """``left`` applies for x < at, ``right`` for x >= at."""

    at: float
    left: "WellSpec"
    right: "WellSpec"

    def values(self, x):
        return np.where(x < self.at, self.left.values(x), self.right.values(x))


@dataclass(frozen=True)
class Tabulated:
    x: tuple
    v: tuple

    def values(self, x):
        return np.interp(x, self.x, self.v)


WellSpec = Union[Harmonic, Flat, Split, Tabulated]


@dataclass(frozen=True)
class Barrier:
    """Rectangular barrier; ``height = inf`` makes it a hard wall."""

    center: float
    height: float
    width: float

    def __post_init__(self):
        if not self.height > 0:
            raise ValueError(f"barrier height must be positive, got {self.height}")
        if not self.width > 0:
            raise ValueError(f"barrier width must be positive, got {self.width}")

    @property
    def strength(self) -> float:
        return self.height * self.width

    def deposit(self, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
        """Cell-averaged potential and pinned indices.

        Each node gets height * (overlap of its cell with the barrier) / dx, so
        the integrated strength is independent of grid alignment; a barrier
        narrower than a cell becomes a lattice delta.
        """
        x, dx = grid.x, grid.dx
        lo, hi = self.center - self.width / 2, self.center + self.width / 2
        overlap = np.clip(np.minimum(x + dx / 2, hi) - np.maximum(x - dx / 2, lo), 0, None)
        if math.isinf(self.height):
            pinned = np.flatnonzero(overlap >= 0.5 * min(dx, self.width))
            return np.zeros_like(x), pinned
        return self.height * overlap / dx, np.empty(0, dtype=np.int64)


@dataclass(frozen=True)
class Composite:
    well: WellSpec
    barrier: Optional[Barrier] = None

    def evaluate(self, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
        v = np.asarray(self.well.values(grid.x), dtype=float)
        pinned = np.empty(0, dtype=np.int64)
        if self.barrier is not None:
            vb, pinned = self.barrier.deposit(grid)
            v = v + vb
        if not np.all(np.isfinite(v)):
            raise ValueError("potential must be finite on the grid")
        return v, pinned


def evaluate(spec, grid: Grid1D) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(spec, Composite):
        return spec.evaluate(grid)
    return Composite(spec).evaluate(grid)


@dataclass(frozen=True)
class Stage:
    duration: float
    potential: Union[Composite, WellSpec]
    bounces: int = 0
    label: str = ""

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"stage duration must be positive, got {self.duration}")
        if self.bounces < 0:
            raise ValueError("bounces must be >= 0")


@dataclass(frozen=True)
class PotentialSchedule:
    stages: tuple[Stage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("a schedule needs at least one stage")

    @property
    def total_bounces(self) -> int:
        return sum(s.bounces for s in self.stages)

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.stages)


# ------------------------------------------------------------------ JSON I/O

def _num(v):
    if isinstance(v, str) and v.lower() in ("inf", "infinity"):
        return math.inf
    return float(v)


def spec_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "harmonic":
        return Harmonic(_num(d["center"]), _num(d["omega"]), _num(d.get("offset", 0.0)))
    if kind == "flat":
        return Flat(_num(d.get("value", 0.0)))
    if kind == "split":
        return Split(_num(d["at"]), spec_from_dict(d["left"]), spec_from_dict(d["right"]))
    if kind == "tabulated":
        x, v = tuple(map(float, d["x"])), tuple(map(float, d["v"]))
        if len(x) != len(v) or len(x) < 2:
            raise ValueError("tabulated potential needs matching x and v arrays of length >= 2")
        return Tabulated(x, v)
    if kind == "composite":
        b = d.get("barrier")
        barrier = Barrier(_num(b["center"]), _num(b["height"]), _num(b["width"])) if b else None
        return Composite(spec_from_dict(d["well"]), barrier)
    raise ValueError(f"unknown potential kind {kind!r}")


def spec_to_dict(spec) -> dict:
    if isinstance(spec, Harmonic):
        return {"kind": "harmonic", "center": spec.center, "omega": spec.omega, "offset": spec.offset}
    if isinstance(spec, Flat):
        return {"kind": "flat", "value": spec.value}
    if isinstance(spec, Split):
        return {"kind": "split", "at": spec.at, "left": spec_to_dict(spec.left), "right": spec_to_dict(spec.right)}
    if isinstance(spec, Tabulated):
        return {"kind": "tabulated", "x": list(spec.x), "v": list(spec.v)}
    if isinstance(spec, Composite):
        d = {"kind": "composite", "well": spec_to_dict(spec.well)}
        if spec.barrier is not None:
            b = spec.barrier
            d["barrier"] = {
                "center": b.center,
                "height": "inf" if math.isinf(b.height) else b.height,
                "width": b.width,
            }
        return d
    raise TypeError(f"not a potential spec: {spec!r}")


def schedule_from_list(stages: list) -> PotentialSchedule:
    return PotentialSchedule(
        tuple(
            Stage(_num(s["duration"]), spec_from_dict(s["potential"]), int(s.get("bounces", 0)), s.get("label", ""))
            for s in stages
        )
    )


def schedule_to_list(schedule: PotentialSchedule) -> list:
    return [
        {"label": s.label, "duration": s.duration, "bounces": s.bounces, "potential": spec_to_dict(s.potential)}
        for s in schedule.stages
    ]
