"""Staggered leapfrog for i dpsi/dt = H psi with hbar = m = 1.

The real part R lives on integer steps and the imaginary part I on half
steps::

    R(t + dt)      = R(t)        + dt * H I(t + dt/2)
    I(t + 3dt/2)   = I(t + dt/2) - dt * H R(t + dt)

with H = -(1/2) d^2/dx^2 + V and the three-point Laplacian.  The scheme is
stable for dt * rho(H) < 2 and conserves sum(R^2 + I(t+dt/2) I(t-dt/2)) dx
exactly while H is fixed.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import StabilityError
from .grid import Wavefunction1D

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def apply_hamiltonian(f: np.ndarray, v: np.ndarray, dx: float) -> np.ndarray:
    """H f with hard walls (f is zero outside the grid)."""
    out = v * f
    c = 0.5 / dx**2
    out[1:-1] -= c * (f[:-2] - 2 * f[1:-1] + f[2:])
    out[0] -= c * (f[1] - 2 * f[0])
    out[-1] -= c * (f[-2] - 2 * f[-1])
    return out


def stability_limit(v: np.ndarray, dx: float) -> float:
    """Largest stable dt: 2 / spectral radius of H.

    The spectrum of the discrete H lies in [min V, 2/dx^2 + max V].
    """
    rho = max(2.0 / dx**2 + float(np.max(v)), abs(float(np.min(v))))
    return 2.0 / rho


def check_stable(v: np.ndarray, dx: float, dt: float) -> None:
    limit = stability_limit(v, dx)
    if not 0 < dt < limit:
        raise StabilityError(f"dt = {dt:.4g} violates the leapfrog stability bound {limit:.4g}")


def _pin(wf: Wavefunction1D, pinned) -> None:
    for arr in (wf.real, wf.imag, wf.imag_prev):
        arr[0] = arr[-1] = 0.0
        arr[pinned] = 0.0


def stagger(wf: Wavefunction1D, v: np.ndarray, dt: float, pinned=()) -> Wavefunction1D:
    """Set I(t +/- dt/2) = I(t) -/+ (dt/2) H R(t) for the Hamiltonian about to act.

    Used on a fresh state (then the total density is rescaled to the
    unstaggered norm) and whenever the potential changes, where I(t) is
    taken as the mean of the two stored half steps.
    """
    check_stable(v, wf.grid.dx, dt)
    out = wf.copy()
    pinned = np.asarray(pinned, dtype=np.int64)
    _pin(out, pinned)
    i_now = out.imag if not wf.staggered else 0.5 * (out.imag + out.imag_prev)
    hr = apply_hamiltonian(out.real, v, wf.grid.dx)
    hr[pinned] = 0.0
    out.imag = i_now - 0.5 * dt * hr
    out.imag_prev = i_now + 0.5 * dt * hr
    _pin(out, pinned)
    if not wf.staggered:
        target = float((wf.real**2 + wf.imag**2).sum() * wf.grid.dx)
        out_norm = out.norm()
        if out_norm > 0:
            scale = math.sqrt(target / out_norm)
            out.real *= scale
            out.imag *= scale
            out.imag_prev *= scale
    out.dt = dt
    return out


def step(wf: Wavefunction1D, v: np.ndarray, dt: float, pinned=()) -> Wavefunction1D:
    """Advance one leapfrog step; returns a new state."""
    check_stable(v, wf.grid.dx, dt)
    if not wf.staggered or not math.isclose(wf.dt, dt, rel_tol=1e-12):
        wf = stagger(wf, v, dt, pinned)
    else:
        wf = wf.copy()
    pinned = np.asarray(pinned, dtype=np.int64)
    dx = wf.grid.dx
    wf.real += dt * apply_hamiltonian(wf.imag, v, dx)
    wf.real[0] = wf.real[-1] = 0.0
    wf.real[pinned] = 0.0
    new_imag = wf.imag - dt * apply_hamiltonian(wf.real, v, dx)
    new_imag[0] = new_imag[-1] = 0.0
    new_imag[pinned] = 0.0
    wf.imag_prev, wf.imag = wf.imag, new_imag
    wf.time += dt
    return wf


def _kernel_py(re, im, im_prev, v, pinned, dt, dx, nsteps, link, arm, fire, buf, st, stop_on_fire, flux):
    """Reference loop with the same contract as the compiled kernel.

    ``buf`` is a ring buffer of the last len(buf) flux values and ``st``
    holds (running sum, ring position, values seen, armed).
    """
    c = 0.5 / dx**2
    w = buf.shape[0]
    for s in range(nsteps):
        re[1:-1] += dt * (-c * (im[:-2] - 2 * im[1:-1] + im[2:]) + v[1:-1] * im[1:-1])
        re[pinned] = 0.0
        im_prev[:] = im
        im[1:-1] = im_prev[1:-1] - dt * (-c * (re[:-2] - 2 * re[1:-1] + re[2:]) + v[1:-1] * re[1:-1])
        im[pinned] = 0.0
        j = 0.0
        if link >= 0:
            ia = 0.5 * (im[link] + im_prev[link])
            ib = 0.5 * (im[link + 1] + im_prev[link + 1])
            j = (re[link] * ib - re[link + 1] * ia) / dx
        flux[s] = j
        pos = int(st[1])
        st[0] += j - buf[pos]
        buf[pos] = j
        st[1] = (pos + 1) % w
        st[2] += 1
        if st[3] > 0:
            if st[2] >= w and abs(st[0]) < fire * w:
                st[3] = 0.0
                if stop_on_fire:
                    return s + 1, True
        elif abs(j) > arm:
            st[3] = 1.0
    return nsteps, False


if numba is not None:

    @numba.njit(cache=True, nogil=True)
    def _kernel_nb(re, im, im_prev, v, pinned, dt, dx, nsteps, link, arm, fire, buf, st, stop_on_fire, flux):
        n = re.shape[0]
        w = buf.shape[0]
        c = 0.5 / (dx * dx)
        for s in range(nsteps):
            for i in range(1, n - 1):
                re[i] += dt * (-c * (im[i - 1] - 2.0 * im[i] + im[i + 1]) + v[i] * im[i])
            for k in range(pinned.shape[0]):
                re[pinned[k]] = 0.0
            for i in range(n):
                im_prev[i] = im[i]
            for i in range(1, n - 1):
                im[i] = im_prev[i] - dt * (-c * (re[i - 1] - 2.0 * re[i] + re[i + 1]) + v[i] * re[i])
            for k in range(pinned.shape[0]):
                im[pinned[k]] = 0.0
            j = 0.0
            if link >= 0:
                ia = 0.5 * (im[link] + im_prev[link])
                ib = 0.5 * (im[link + 1] + im_prev[link + 1])
                j = (re[link] * ib - re[link + 1] * ia) / dx
            flux[s] = j
            pos = int(st[1])
            st[0] += j - buf[pos]
            buf[pos] = j
            st[1] = (pos + 1) % w
            st[2] += 1
            if st[3] > 0:
                if st[2] >= w and abs(st[0]) < fire * w:
                    st[3] = 0.0
                    if stop_on_fire:
                        return s + 1, True
            elif abs(j) > arm:
                st[3] = 1.0
        return nsteps, False

else:  # pragma: no cover
    _kernel_nb = None


class FluxTrigger:
    """Arms when the instantaneous current |j| exceeds ``arm`` and fires once
    the current averaged over the last ``window`` steps is below ``fire``.

    Averaging keeps the trigger from firing on the sign changes of the small
    residual current that lingers around the barrier between hits.
    """

    def __init__(self, arm: float = math.inf, fire: float = 0.0, window: int = 1):
        if window < 1:
            raise ValueError("trigger window must be at least one step")
        self.arm = float(arm)
        self.fire = float(fire)
        self.buf = np.zeros(int(window))
        self.state = np.zeros(4)

    @property
    def armed(self) -> bool:
        return bool(self.state[3])


def advance(
    wf: Wavefunction1D,
    v: np.ndarray,
    pinned: np.ndarray,
    nsteps: int,
    link: int = -1,
    trigger: FluxTrigger | None = None,
    stop_on_fire: bool = False,
    compiled: bool = True,
):
    """In-place multi-step advance of an already staggered state.

    The probability current through the link (link, link + 1) is recorded
    after every step and fed to ``trigger``; with ``stop_on_fire`` the
    advance stops on the step where the trigger fires.

    Returns (steps_done, fired, flux).
    """
    if not wf.staggered:
        raise ValueError("stagger the state before advancing it")
    if trigger is None:
        trigger = FluxTrigger()
    flux = np.zeros(nsteps)
    kernel = _kernel_nb if compiled and _kernel_nb is not None else _kernel_py
    done, fired = kernel(
        wf.real, wf.imag, wf.imag_prev, v, np.asarray(pinned, dtype=np.int64),
        wf.dt, wf.grid.dx, int(nsteps), int(link), trigger.arm, trigger.fire,
        trigger.buf, trigger.state, bool(stop_on_fire), flux,
    )
    wf.time += done * wf.dt
    return done, fired, flux[:done]
