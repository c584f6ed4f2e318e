"""Tune the barrier so one scattering event transmits a chosen fraction."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import CalibrationError
from .grid import Grid1D, RegionPartition, init_ground_state, region_probabilities
from .leapfrog import advance, check_stable, stagger
from .potential import Barrier, Composite, Harmonic

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReferencePacket:
    """Ground-state packet released at rest ``amplitude`` to the left of a
    harmonic well whose minimum sits on the barrier."""

    barrier_center: float
    omega: float
    amplitude: float

    @property
    def start(self) -> float:
        return self.barrier_center - self.amplitude

    def well(self) -> Harmonic:
        # zero of energy at the release point
        return Harmonic(self.barrier_center, self.omega, -0.5 * self.omega**2 * self.amplitude**2)


def scattering_transmission(grid: Grid1D, packet: ReferencePacket, barrier: Barrier, dt: float) -> float:
    """Fraction of the packet found beyond the barrier after one hit.

    The packet reaches the barrier a quarter period after release; after half
    a period both the reflected and transmitted parts are back at rest at
    their turning points, where they are counted.
    """
    wf = init_ground_state(grid, Harmonic(packet.start, packet.omega))
    v, pinned = Composite(packet.well(), barrier).evaluate(grid)
    check_stable(v, grid.dx, dt)
    wf = stagger(wf, v, dt, pinned)
    advance(wf, v, pinned, int(round(math.pi / packet.omega / dt)))
    part = RegionPartition(grid.x_min + 0.5 * (packet.start - grid.x_min), barrier.center)
    _, p_tr, p_b = region_probabilities(wf, part)
    return p_b / (p_tr + p_b)


def max_stable_height(grid: Grid1D, dt: float, width: float, well_max: float, safety: float = 0.95) -> float:
    """Largest barrier height for which dt stays inside the stability bound."""
    v_node = safety * 2.0 / dt - 2.0 / grid.dx**2 - well_max
    if v_node <= 0:
        raise CalibrationError(f"dt = {dt:g} leaves no room for a barrier on this grid")
    return v_node * grid.dx / min(width, grid.dx)


def calibrate_barrier(
    grid: Grid1D,
    packet: ReferencePacket,
    target_transmission: float,
    width: float,
    dt: float,
    bracket: Optional[tuple[float, float]] = None,
    tol: float = 2e-4,
    max_iter: int = 80,
) -> tuple[Barrier, float]:
    """Bisect the barrier height (geometrically) at fixed width.

    Returns the calibrated barrier and its measured single-hit transmission.
    The default bracket runs from 1 up to the tallest barrier the time step
    can integrate stably.

    Raises
    ------
    CalibrationError
        If the transmissions at the bracket ends do not straddle the target,
        or the bisection fails to reach ``tol``.
    """
    if not 0 < target_transmission < 1:
        raise ValueError(f"target transmission must lie in (0, 1), got {target_transmission}")
    if bracket is None:
        well_max = float(np.max(packet.well().values(grid.x)))
        bracket = (1.0, max_stable_height(grid, dt, width, well_max))
    lo, hi = bracket

    def trans(h):
        return scattering_transmission(grid, packet, Barrier(packet.barrier_center, h, width), dt)

    t_lo, t_hi = trans(lo), trans(hi)
    if not t_hi < target_transmission < t_lo:
        raise CalibrationError(
            f"bracket heights {lo:g}..{hi:g} give transmissions {t_lo:.4g}..{t_hi:.4g}, "
            f"which do not contain {target_transmission:.4g}"
        )
    for it in range(max_iter):
        mid = math.sqrt(lo * hi)
        t_mid = trans(mid)
        log.debug("calibration iter %d: height %.6g -> T = %.6g", it, mid, t_mid)
        if abs(t_mid - target_transmission) <= tol:
            return Barrier(packet.barrier_center, mid, width), t_mid
        if t_mid > target_transmission:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(f"bisection did not reach |T - target| <= {tol} in {max_iter} iterations")
