"""Spatial grid, region bookkeeping and the staggered wavefunction."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import ResolutionError

# minimum grid points per standard deviation of an initial packet
MIN_POINTS_PER_SIGMA = 8


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(f"a grid needs at least 3 points, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def index_of(self, position: float) -> int:
        return int(round((position - self.x_min) / self.dx))

    def is_node(self, position: float) -> bool:
        i = (position - self.x_min) / self.dx
        return abs(i - round(i)) < 1e-6

    def refined(self) -> "Grid1D":
        """Same interval with dx halved; every old node stays a node."""
        return replace(self, n_points=2 * self.n_points - 1)


@dataclass(frozen=True)
class RegionPartition:
    """A | Tr | B split of the line.

    Nodes left of ``a_tr_boundary`` belong to Alice, nodes up to and including
    ``barrier_center`` to the Transmission Line, and everything beyond the
    barrier centre to Bob.
    """

    a_tr_boundary: float
    barrier_center: float
    barrier_half_width: float = 0.0

    def check(self, grid: Grid1D) -> None:
        if not grid.x_min < self.a_tr_boundary < self.barrier_center < grid.x_max:
            raise ValueError("partition must satisfy x_min < a_tr_boundary < barrier_center < x_max")

    def link(self, grid: Grid1D) -> int:
        """Index of the last Tr node; the Tr/B interface is the link (link, link + 1)."""
        return int(math.floor((self.barrier_center - grid.x_min) / grid.dx + 1e-9))

    def masks(self, grid: Grid1D) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = grid.x
        b = self.link(grid)
        idx = np.arange(grid.n_points)
        in_a = x < self.a_tr_boundary
        in_b = idx > b
        return in_a, ~in_a & ~in_b, in_b


@dataclass
class Wavefunction1D:
    """Real part at time ``time``; imaginary part at ``time + dt/2`` and ``time - dt/2``.

    Before the first step (``dt is None``) both imaginary arrays hold Im(psi)
    at ``time``.  The density R^2 + I(t+dt/2) I(t-dt/2) is the quantity the
    staggered scheme conserves exactly.
    """

    grid: Grid1D
    real: np.ndarray
    imag: np.ndarray
    imag_prev: np.ndarray
    time: float = 0.0
    dt: Optional[float] = None

    @classmethod
    def from_complex(cls, grid: Grid1D, psi: np.ndarray, time: float = 0.0) -> "Wavefunction1D":
        psi = np.asarray(psi, dtype=complex).copy()
        psi[0] = psi[-1] = 0
        return cls(grid, psi.real.copy(), psi.imag.copy(), psi.imag.copy(), time)

    @property
    def staggered(self) -> bool:
        return self.dt is not None

    def copy(self) -> "Wavefunction1D":
        return replace(self, real=self.real.copy(), imag=self.imag.copy(), imag_prev=self.imag_prev.copy())

    def density(self) -> np.ndarray:
        return self.real * self.real + self.imag * self.imag_prev

    def norm(self) -> float:
        return float(self.density().sum() * self.grid.dx)

    def psi(self) -> np.ndarray:
        """Complex wavefunction at ``time`` (imaginary part averaged across the stagger)."""
        return self.real + 0.5j * (self.imag + self.imag_prev)

    def expect_x(self) -> float:
        rho = self.density()
        return float((rho * self.grid.x).sum() / rho.sum())


def gaussian_ground_state(grid: Grid1D, center: float, omega: float) -> np.ndarray:
    sigma = 1.0 / math.sqrt(2.0 * omega)
    psi = np.exp(-((grid.x - center) ** 2) / (4.0 * sigma**2))
    psi[0] = psi[-1] = 0
    return psi / math.sqrt((psi**2).sum() * grid.dx)


def init_ground_state(grid: Grid1D, well) -> Wavefunction1D:
    """Normalised Gaussian ground state of a harmonic well (hbar = m = 1).

    Parameters
    ----------
    grid : Grid1D
    well : Harmonic
        Anything with ``center`` and ``omega`` attributes.

    Raises
    ------
    ResolutionError
        If the packet width is under-resolved or the centre is off the grid.
    """
    sigma = 1.0 / math.sqrt(2.0 * well.omega)
    if not grid.x_min < well.center < grid.x_max:
        raise ValueError(f"well centre {well.center} outside the grid")
    if sigma / grid.dx < MIN_POINTS_PER_SIGMA:
        raise ResolutionError(
            f"packet width {sigma:.4g} spans {sigma / grid.dx:.2f} grid points, need {MIN_POINTS_PER_SIGMA}"
        )
    return Wavefunction1D.from_complex(grid, gaussian_ground_state(grid, well.center, well.omega))


def region_probabilities(wf: Wavefunction1D, partition: RegionPartition) -> tuple[float, float, float]:
    rho = wf.density()
    dx = wf.grid.dx
    a, tr, b = partition.masks(wf.grid)
    return float(rho[a].sum() * dx), float(rho[tr].sum() * dx), float(rho[b].sum() * dx)
