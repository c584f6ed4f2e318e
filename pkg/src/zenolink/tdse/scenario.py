"""Wavepacket version of the protocol: load, bounce against the barrier,
optional collapse in Bob's region, return to Alice.

Layout used by :func:`build_protocol_scenario` (hbar = m = 1)::

    |  A  (trap at x_A)  |  Tr  (release point x_b - a)  ||  B  (x_b + a)  |
                      a_tr_boundary                      x_b

During the bounce stage a single harmonic well is centred on the barrier, so
the reflected and transmitted parts of the packet are mirror images and meet
at the barrier again every half period.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .calibrate import ReferencePacket
from .grid import Grid1D, RegionPartition, Wavefunction1D, init_ground_state, region_probabilities
from .leapfrog import FluxTrigger, advance, check_stable, stability_limit, stagger
from .potential import (
    Barrier,
    Composite,
    Flat,
    Harmonic,
    PotentialSchedule,
    Split,
    Stage,
    evaluate,
    schedule_from_list,
    schedule_to_list,
)

log = logging.getLogger(__name__)

POLICIES = ("flux", "bounce_end", "none")


@dataclass(frozen=True)
class CollapsePolicy:
    """When Bob's detectors fire during bounce stages of a bit-1 run.

    ``flux``: once the current through the barrier has exceeded
    ``arm_threshold`` and its average over the trailing ``window`` (time
    units) has then fallen below ``fire_threshold``.
    ``bounce_end``: at the end of every bounce period.
    """

    policy: str = "flux"
    arm_threshold: float = 1e-2
    fire_threshold: float = 1e-6
    window: float = 0.05

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"collapse policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.window > 0:
            raise ValueError("collapse window must be positive")


@dataclass(frozen=True)
class Scenario:
    bit: int
    grid: Grid1D
    dt: float
    partition: RegionPartition
    initial: Harmonic
    schedule: PotentialSchedule
    n_bounces: int
    collapse: CollapsePolicy = CollapsePolicy()
    frame_stride: int = 5000
    timeseries_stride: int = 500
    sentinel_width: float = 2.0
    seed: int = 0
    name: str = ""
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit}")
        if self.frame_stride < 1 or self.timeseries_stride < 1:
            raise ValueError("strides must be >= 1")
        self.partition.check(self.grid)
        if self.schedule.total_bounces != self.n_bounces:
            raise ValueError(
                f"schedule provides {self.schedule.total_bounces} bounce periods, scenario asks for {self.n_bounces}"
            )

    def refined(self) -> "Scenario":
        """dx and dt halved, strides doubled so frames land on the same times."""
        return replace(
            self,
            grid=self.grid.refined(),
            dt=self.dt / 2,
            frame_stride=2 * self.frame_stride,
            timeseries_stride=2 * self.timeseries_stride,
        )


@dataclass
class Frame:
    time: float
    density: np.ndarray
    p_a: float
    p_tr: float
    p_b: float
    collapsed: float


@dataclass
class CollapseEvent:
    time: float
    index: int
    removed: float
    norm_before: float

    @property
    def leakage(self) -> float:
        return self.removed / self.norm_before


@dataclass
class ScenarioResult:
    x: np.ndarray
    frames: list
    # columns t, P_A, P_Tr, P_B, collapsed, norm
    timeseries: np.ndarray
    collapses: list
    final: dict
    backflow: float
    sentinel_max: float
    steps: int

    @property
    def survival(self) -> float:
        return self.final["survival"]

    def ledger_error(self) -> float:
        """Largest |P_A + P_Tr + P_B + collapsed - 1| over the recorded rows."""
        ts = self.timeseries
        return float(np.max(np.abs(ts[:, 1] + ts[:, 2] + ts[:, 3] + ts[:, 4] - 1.0)))

    def norm_drift(self) -> float:
        """Largest deviation of norm + collapsed from its initial value."""
        total = self.timeseries[:, 5] + self.timeseries[:, 4]
        return float(np.max(np.abs(total - total[0])))

    def leakages(self) -> np.ndarray:
        return np.array([c.leakage for c in self.collapses])


def _collapse_b(wf: Wavefunction1D, mask_b: np.ndarray) -> float:
    removed = float(wf.density()[mask_b].sum() * wf.grid.dx)
    for arr in (wf.real, wf.imag, wf.imag_prev):
        arr[mask_b] = 0.0
    return removed


def run_scenario(scenario: Scenario, compiled: bool = True) -> ScenarioResult:
    """Integrate the scenario through its schedule.

    For bit 1, Bob's region is emptied after every beam-splitter interaction
    of a bounce stage; the removed weight is added to the collapsed total and
    the state is not renormalised, so the remaining norm is the survival
    probability.
    """
    sc = scenario
    grid, dt = sc.grid, sc.dt
    dx = grid.dx
    x = grid.x
    mask_a, mask_tr, mask_b = sc.partition.masks(grid)
    link = sc.partition.link(grid)
    sentinel = (x < grid.x_min + sc.sentinel_width) | (x > grid.x_max - sc.sentinel_width)
    collapsing = sc.bit == 1 and sc.collapse.policy != "none"

    potentials = [evaluate(stage.potential, grid) for stage in sc.schedule.stages]
    for v, _ in potentials:
        check_stable(v, dx, dt)

    wf = init_ground_state(grid, sc.initial)
    frames, rows, collapses = [], [], []
    collapsed = 0.0
    backflow = 0.0
    sentinel_max = 0.0
    k = 0

    def record(force=False):
        rho = wf.density()
        p_a = float(rho[mask_a].sum() * dx)
        p_tr = float(rho[mask_tr].sum() * dx)
        p_b = float(rho[mask_b].sum() * dx)
        t = k * dt
        if force or k % sc.timeseries_stride == 0:
            if not rows or rows[-1][0] != t:
                rows.append((t, p_a, p_tr, p_b, collapsed, p_a + p_tr + p_b))
        if force or k % sc.frame_stride == 0:
            if not frames or frames[-1].time != t:
                frames.append(Frame(t, rho.copy(), p_a, p_tr, p_b, collapsed))

    prev_v = None
    for si, (stage, (v, pinned)) in enumerate(zip(sc.schedule.stages, potentials)):
        if prev_v is None or not np.array_equal(v, prev_v[0]) or not np.array_equal(pinned, prev_v[1]):
            wf = stagger(wf, v, dt, pinned)
        prev_v = (v, pinned)
        if si == 0:
            record()
        n_steps = int(round(stage.duration / dt))
        bounce_stage = collapsing and stage.bounces > 0
        use_flux = bounce_stage and sc.collapse.policy == "flux"
        boundaries = []
        if bounce_stage and sc.collapse.policy == "bounce_end":
            boundaries = [int(round(j * n_steps / stage.bounces)) for j in range(1, stage.bounces + 1)]
        trigger = FluxTrigger(
            sc.collapse.arm_threshold if use_flux else math.inf,
            sc.collapse.fire_threshold,
            max(1, int(round(sc.collapse.window / dt))),
        )
        done = 0
        stage_collapses = 0
        while done < n_steps:
            chunk = n_steps - done
            chunk = min(chunk, sc.frame_stride - k % sc.frame_stride, sc.timeseries_stride - k % sc.timeseries_stride)
            upcoming = [b for b in boundaries if b > done]
            if upcoming:
                chunk = min(chunk, upcoming[0] - done)
            n, fired, flux = advance(wf, v, pinned, chunk, link, trigger, stop_on_fire=use_flux, compiled=compiled)
            done += n
            k += n
            if collapses:
                backflow += float(np.clip(-flux, 0, None).sum() * dt)
            at_boundary = bool(upcoming) and done == upcoming[0]
            if (fired or at_boundary) and stage_collapses < stage.bounces:
                norm_before = wf.norm()
                removed = _collapse_b(wf, mask_b)
                collapsed += removed
                stage_collapses += 1
                collapses.append(CollapseEvent(k * dt, len(collapses) + 1, removed, norm_before))
            elif fired:
                log.warning("flux trigger fired after all %d collapses of stage %d", stage.bounces, si)
            sentinel_max = max(sentinel_max, float(np.abs(wf.density()[sentinel]).sum() * dx))
            record()
        if bounce_stage and stage_collapses != stage.bounces:
            log.warning("stage %d: %d collapses for %d bounce periods", si, stage_collapses, stage.bounces)
    record(force=True)

    p_a, p_tr, p_b = region_probabilities(wf, sc.partition)
    norm = p_a + p_tr + p_b
    final = {
        "P_A": p_a,
        "P_Tr": p_tr,
        "P_B": p_b,
        "collapsed": collapsed,
        "norm": norm,
        "survival": norm if sc.bit == 1 else p_a,
        "collapses": len(collapses),
        "time": k * dt,
    }
    return ScenarioResult(x, frames, np.array(rows), collapses, final, backflow, sentinel_max, k)


# ------------------------------------------------------------------ building

def protocol_layout(omega: float, amplitude: float, load_distance: float, barrier_center: float = 0.0) -> dict:
    x_b = barrier_center
    x_s = x_b - amplitude
    x_a = x_s - load_distance
    return {"x_b": x_b, "x_release": x_s, "x_A": x_a, "load_center": 0.5 * (x_a + x_s), "load_half": 0.5 * load_distance}


def build_protocol_scenario(
    bit: int,
    barrier_height: float,
    n_bounces: int = 7,
    omega: float = 0.5,
    amplitude: float = 20.0,
    load_distance: float = 16.0,
    margin: float = 12.0,
    dx: float = 0.025,
    dt: float = 1.5e-4,
    barrier_width: float = 0.004,
    bob_side: Optional[str] = None,
    collapse: CollapsePolicy = CollapsePolicy(),
    frame_stride: int = 5000,
    timeseries_stride: int = 500,
    name: str = "",
    notes: Optional[dict] = None,
) -> Scenario:
    """Three-stage schedule (load, ``n_bounces`` bounce half-periods, return).

    Every harmonic well carries an offset that puts the packet's potential
    energy at zero where a stage begins, so stage switches leave the local
    potential continuous under the packet.  ``bob_side`` selects the potential
    beyond the barrier during the bounce stage: ``mirror`` (the well continues
    symmetrically, so transmitted parts come back and add up coherently) or
    ``flat`` (a level channel at the barrier floor that carries them away).
    The default is ``mirror`` for bit 0 and ``flat`` for bit 1.
    """
    if bob_side is None:
        bob_side = "flat" if bit == 1 else "mirror"
    lay = protocol_layout(omega, amplitude, load_distance)
    x_b, x_a, c_load, d = lay["x_b"], lay["x_A"], lay["load_center"], lay["load_half"]
    x_min, x_max = x_a - margin, x_b + amplitude + margin
    n_points = int(round((x_max - x_min) / dx)) + 1
    grid = Grid1D(x_min, x_max, n_points)
    if not grid.is_node(x_b):
        raise ValueError("barrier centre must fall on a grid node")
    barrier = Barrier(x_b, barrier_height, barrier_width)
    half_period = math.pi / omega
    load_well = Harmonic(c_load, omega, -0.5 * omega**2 * d**2)
    bounce_well = Harmonic(x_b, omega, -0.5 * omega**2 * amplitude**2)
    if bob_side == "mirror":
        bounce = bounce_well
        bob_hold = Harmonic(x_b + amplitude, omega)
    elif bob_side == "flat":
        bounce = Split(x_b, bounce_well, Flat(bounce_well.offset))
        bob_hold = Flat(bounce_well.offset)
    else:
        raise ValueError(f"bob_side must be 'mirror' or 'flat', got {bob_side!r}")
    schedule = PotentialSchedule(
        (
            Stage(half_period, Composite(load_well, barrier), 0, "load A -> Tr"),
            Stage(n_bounces * half_period, Composite(bounce, barrier), n_bounces, "bounce"),
            Stage(half_period, Composite(Split(x_b, load_well, bob_hold), barrier), 0, "return Tr -> A"),
        )
    )
    return Scenario(
        bit=bit,
        grid=grid,
        dt=dt,
        partition=RegionPartition(c_load, x_b, barrier_width / 2),
        initial=Harmonic(x_a, omega),
        schedule=schedule,
        n_bounces=n_bounces,
        collapse=collapse,
        frame_stride=frame_stride,
        timeseries_stride=timeseries_stride,
        name=name,
        notes=dict(notes or {}),
    )


def reference_packet(scenario: Scenario) -> ReferencePacket:
    """The single-hit packet matching a scenario built by :func:`build_protocol_scenario`."""
    x_b = scenario.partition.barrier_center
    bounce = next(s for s in scenario.schedule.stages if s.bounces > 0).potential
    well = bounce.well.left if isinstance(bounce.well, Split) else bounce.well
    amplitude = math.sqrt(-2 * well.offset) / well.omega
    return ReferencePacket(x_b, well.omega, amplitude)


# ------------------------------------------------------------------ JSON I/O

def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "name": sc.name,
        "bit": sc.bit,
        "n_bounces": sc.n_bounces,
        "grid": {"x_min": sc.grid.x_min, "x_max": sc.grid.x_max, "n_points": sc.grid.n_points},
        "dt": sc.dt,
        "partition": {
            "a_tr_boundary": sc.partition.a_tr_boundary,
            "barrier_center": sc.partition.barrier_center,
            "barrier_half_width": sc.partition.barrier_half_width,
        },
        "initial_state": {"kind": "ground_state", "center": sc.initial.center, "omega": sc.initial.omega},
        "stages": schedule_to_list(sc.schedule),
        "collapse": {
            "policy": sc.collapse.policy,
            "arm_threshold": sc.collapse.arm_threshold,
            "fire_threshold": sc.collapse.fire_threshold,
            "window": sc.collapse.window,
        },
        "frame_stride": sc.frame_stride,
        "timeseries_stride": sc.timeseries_stride,
        "sentinel_width": sc.sentinel_width,
        "seed": sc.seed,
        "notes": sc.notes,
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        g, p, init = d["grid"], d["partition"], d["initial_state"]
        if init.get("kind", "ground_state") != "ground_state":
            raise ValueError(f"unsupported initial state kind {init.get('kind')!r}")
        c = d.get("collapse", {})
        return Scenario(
            bit=int(d["bit"]),
            grid=Grid1D(float(g["x_min"]), float(g["x_max"]), int(g["n_points"])),
            dt=float(d["dt"]),
            partition=RegionPartition(
                float(p["a_tr_boundary"]), float(p["barrier_center"]), float(p.get("barrier_half_width", 0.0))
            ),
            initial=Harmonic(float(init["center"]), float(init["omega"])),
            schedule=schedule_from_list(d["stages"]),
            n_bounces=int(d["n_bounces"]),
            collapse=CollapsePolicy(
                c.get("policy", "flux"),
                float(c.get("arm_threshold", 1e-2)),
                float(c.get("fire_threshold", 1e-6)),
                float(c.get("window", 0.05)),
            ),
            frame_stride=int(d.get("frame_stride", 5000)),
            timeseries_stride=int(d.get("timeseries_stride", 500)),
            sentinel_width=float(d.get("sentinel_width", 2.0)),
            seed=int(d.get("seed", 0)),
            name=str(d.get("name", "")),
            notes=dict(d.get("notes", {})),
        )
    except KeyError as exc:
        raise ValueError(f"scenario is missing required field {exc.args[0]!r}") from None


def load_scenario(source) -> Scenario:
    """Read a scenario from a path, a bundled name (``fig3a``/``fig3b``) or a JSON string.

    Malformed JSON raises :class:`json.JSONDecodeError`, which carries the
    line and column of the fault.
    """
    text = None
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        if not path.exists() and bundled_path(str(source)) is not None:
            path = bundled_path(str(source))
        text = path.read_text()
    else:
        text = source
    return scenario_from_dict(json.loads(text))


def bundled_path(name: str) -> Optional[Path]:
    stem = name[:-5] if name.endswith(".json") else name
    path = Path(__file__).resolve().parent.parent / "scenarios" / f"{stem}.json"
    return path if path.exists() else None


def stable_dt(scenario: Scenario, cfl: float = 0.5) -> float:
    """``cfl`` times the tightest stability bound over all stages."""
    return cfl * min(stability_limit(evaluate(s.potential, scenario.grid)[0], scenario.grid.dx) for s in scenario.schedule.stages)
