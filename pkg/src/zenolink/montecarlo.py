"""Bit-error and interaction-free-violation rates versus the encoding number M
under Gaussian beam-splitter angle noise.

Two independent routes are provided: :func:`estimate_rates` draws noisy
angles and detection events, :func:`analytic_rates` integrates the closed
form process probabilities over the noise distribution.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from .core import BeamSplitterStack, alice_probability
from .protocol import p0_fail_logical, simulate_processes

log = logging.getLogger(__name__)

MODES = ("per_shot", "static_device")
CLAMP = math.pi / 2 - 1e-9
CHUNK = 4096
THREADS_ENV = "ZENOLINK_THREADS"


@dataclass(frozen=True)
class NoiseModel:
    mean_angle: float
    sigma_theta: float
    mode: str = "per_shot"

    def __post_init__(self):
        if self.sigma_theta < 0:
            raise ValueError(f"sigma_theta must be >= 0, got {self.sigma_theta}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def for_stack(cls, n: int, sigma_theta: float, mode: str = "per_shot") -> "NoiseModel":
        return cls(math.pi / (2 * n), sigma_theta, mode)

    def sample(self, n: int, rng: np.random.Generator) -> BeamSplitterStack:
        return sample_stack(n, self, rng)


def sample_angles(n: int, noise: NoiseModel, rng: np.random.Generator, size: tuple = ()) -> tuple[np.ndarray, int]:
    """Draw angles of shape ``size + (n,)``; returns (angles, number clamped)."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    shape = tuple(size) + (n,)
    if noise.sigma_theta == 0:
        return np.full(shape, noise.mean_angle), 0
    angles = rng.normal(noise.mean_angle, noise.sigma_theta, size=shape)
    wild = np.abs(angles) > CLAMP
    n_clamped = int(wild.sum())
    if n_clamped:
        np.clip(angles, -CLAMP, CLAMP, out=angles)
    return angles, n_clamped


def sample_stack(n: int, noise: NoiseModel, rng: np.random.Generator) -> BeamSplitterStack:
    angles, _ = sample_angles(n, noise, rng)
    return BeamSplitterStack(tuple(angles))


@dataclass
class RateCurve:
    m: np.ndarray
    bit_error_rate: np.ndarray
    violation_rate: np.ndarray
    stderr_bit: np.ndarray
    stderr_violation: np.ndarray
    trials: np.ndarray
    # per-sent-bit breakdown; counts for Monte Carlo curves, probabilities for analytic ones
    sent_one: np.ndarray = field(default=None, repr=False)
    errors_one: np.ndarray = field(default=None, repr=False)
    sent_zero: np.ndarray = field(default=None, repr=False)
    errors_zero: np.ndarray = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    COLUMNS = ("M", "bit_error_rate", "violation_rate", "stderr_bit", "stderr_violation", "trials")

    def rows(self):
        for i in range(len(self.m)):
            yield (
                int(self.m[i]),
                float(self.bit_error_rate[i]),
                float(self.violation_rate[i]),
                float(self.stderr_bit[i]),
                float(self.stderr_violation[i]),
                int(self.trials[i]),
            )

    def one_error_rate(self) -> np.ndarray:
        """Fraction of logical-1 transmissions decoded as 0."""
        return self.errors_one / np.maximum(self.sent_one, 1)

    def zero_error_rate(self) -> np.ndarray:
        """Fraction of logical-0 transmissions decoded as 1 (each one a violation)."""
        return self.errors_zero / np.maximum(self.sent_zero, 1)

    def argmin_m(self) -> int:
        return int(self.m[np.argmin(self.bit_error_rate)])


def binomial_stderr(p, n):
    p = np.asarray(p, dtype=float)
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(n > 0, np.sqrt(np.clip(p * (1 - p), 0, None) / np.maximum(n, 1)), 0.0)


def worker_count(requested: Optional[int] = None) -> int:
    cap = os.environ.get(THREADS_ENV)
    n = requested or (int(cap) if cap else os.cpu_count() or 1)
    if cap:
        n = min(n, int(cap))
    return max(1, n)


def _first_detection(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Index of the first round in which Alice detects; M_max if none."""
    hits = rng.random(probs.shape) < probs
    return np.where(hits.any(axis=1), hits.argmax(axis=1), probs.shape[1])


def _simulate_chunk(n, noise, m_max, trials, bit_mix, seed_seq):
    rng = np.random.default_rng(seed_seq)
    sent = rng.random(trials) < bit_mix
    if noise.mode == "static_device":
        angles, clamped = sample_angles(n, noise, rng, size=(trials, 1))
    else:
        angles, clamped = sample_angles(n, noise, rng, size=(trials, m_max))
    probs = np.empty(angles.shape[:-1])
    if sent.any():
        probs[sent] = alice_probability(1, angles[sent])
    if (~sent).any():
        probs[~sent] = alice_probability(0, angles[~sent])
    probs = np.broadcast_to(probs, (trials, m_max))
    return sent, _first_detection(probs, rng), clamped


def estimate_rates(
    n: int,
    noise: NoiseModel,
    m_values: Sequence[int],
    trials_per_m: int,
    bit_mix: float = 0.5,
    seed: int = 0,
    workers: Optional[int] = None,
    chunk: int = CHUNK,
) -> RateCurve:
    """Monte Carlo rate curve.

    Each simulated logical event sends a random bit (1 with probability
    ``bit_mix``) as a sequence of ``max(m_values)`` rounds; the logical bit
    for a given M is decoded from the first M rounds.  Chunks of events get
    their own substreams spawned from ``seed``, so the result does not depend
    on the worker count.
    """
    if trials_per_m < 1:
        raise ValueError(f"trials_per_m must be >= 1, got {trials_per_m}")
    if not 0 <= bit_mix <= 1:
        raise ValueError(f"bit_mix must lie in [0, 1], got {bit_mix}")
    m_arr = np.asarray(sorted(set(int(m) for m in m_values)))
    if m_arr.size == 0 or m_arr[0] < 1:
        raise ValueError("M values must be >= 1")
    m_max = int(m_arr[-1])
    sizes = [chunk] * (trials_per_m // chunk)
    if trials_per_m % chunk:
        sizes.append(trials_per_m % chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))

    def job(i):
        sent, first, clamped = _simulate_chunk(n, noise, m_max, sizes[i], bit_mix, seeds[i])
        decoded_one = first[:, None] < m_arr[None, :]
        err_one = (sent[:, None] & ~decoded_one).sum(axis=0)
        err_zero = (~sent[:, None] & decoded_one).sum(axis=0)
        return int(sent.sum()), err_one, err_zero, clamped

    n_workers = min(worker_count(workers), len(sizes))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]

    sent_one = sum(p[0] for p in parts)
    err_one = np.sum([p[1] for p in parts], axis=0)
    err_zero = np.sum([p[2] for p in parts], axis=0)
    clamped = sum(p[3] for p in parts)
    if clamped:
        log.warning("clamped %d angles to +/-(pi/2 - 1e-9)", clamped)
    total = np.full(m_arr.shape, trials_per_m)
    ber = (err_one + err_zero) / trials_per_m
    vio = err_zero / trials_per_m
    return RateCurve(
        m=m_arr,
        bit_error_rate=ber,
        violation_rate=vio,
        stderr_bit=binomial_stderr(ber, total),
        stderr_violation=binomial_stderr(vio, total),
        trials=total,
        sent_one=np.full(m_arr.shape, sent_one),
        errors_one=err_one,
        sent_zero=np.full(m_arr.shape, trials_per_m - sent_one),
        errors_zero=err_zero,
        meta=_meta(n, noise, bit_mix, seed=seed, clamped=clamped, method="monte_carlo"),
    )


@dataclass(frozen=True)
class ProcessTally:
    """Counts over many independent single rounds of one bit value."""

    bit: int
    n: int
    trials: int
    alice_detections: int
    bob_detections: int
    alice_after_bob_support: int
    clamped: int = 0

    @property
    def alice_rate(self) -> float:
        return self.alice_detections / self.trials

    @property
    def alice_stderr(self) -> float:
        return float(binomial_stderr(self.alice_rate, self.trials))


def tally_processes(
    bit: int,
    n: int,
    trials: int,
    seed: int = 0,
    noise: Optional[NoiseModel] = None,
    workers: Optional[int] = None,
    chunk: int = 1 << 16,
) -> ProcessTally:
    """Run ``trials`` rounds of the ``bit`` process in seeded chunks.

    Angles are ideal when ``noise`` is None, redrawn every round in
    ``per_shot`` mode, and drawn once for the whole tally in
    ``static_device`` mode.
    """
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit}")
    if n < 1 or trials < 1:
        raise ValueError("N and trials must be >= 1")
    sizes = [chunk] * (trials // chunk)
    if trials % chunk:
        sizes.append(trials % chunk)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes) + 1)
    fixed, fixed_clamped = np.asarray(BeamSplitterStack.ideal(n).angles), 0
    if noise is not None and noise.mode == "static_device":
        fixed, fixed_clamped = sample_angles(n, noise, np.random.default_rng(seeds[-1]))

    def job(i):
        rng = np.random.default_rng(seeds[i])
        if noise is None or noise.mode == "static_device":
            angles, clamped = fixed, 0
        else:
            angles, clamped = sample_angles(n, noise, rng, size=(sizes[i],))
        batch = simulate_processes(bit, angles, rng, trials=sizes[i])
        both = batch.alice_detects & batch.entered_bob_support
        return int(batch.alice_detects.sum()), int(batch.bob_detects.sum()), int(both.sum()), clamped

    n_workers = min(worker_count(workers), len(sizes))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(i) for i in range(len(sizes))]
    totals = [sum(p[k] for p in parts) for k in range(4)]
    totals[3] += fixed_clamped
    return ProcessTally(bit, n, trials, *totals)


def _meta(n, noise, bit_mix, **extra):
    meta = {
        "N": n,
        "mean_angle": noise.mean_angle,
        "sigma_theta": noise.sigma_theta,
        "mode": noise.mode,
        "bit_mix": bit_mix,
        "normalisation": "per logical bit",
    }
    meta.update(extra)
    return meta


# ---------------------------------------------------------------- analytic side

def _hermite(order: int = 64):
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return nodes, weights / math.sqrt(2 * math.pi)


def gaussian_expectation(f, mean: float, sigma: float, order: int = 64) -> float:
    """E[f(X)] for X ~ Normal(mean, sigma^2) by Gauss-Hermite quadrature."""
    if sigma == 0:
        return float(f(np.asarray(mean)))
    z, w = _hermite(order)
    return float(np.dot(w, f(mean + sigma * z)))


def mean_cos2(mean: float, sigma: float) -> float:
    """Closed form E[cos^2 X] = (1 + cos(2 mean) exp(-2 sigma^2)) / 2."""
    return 0.5 * (1.0 + math.cos(2 * mean) * math.exp(-2 * sigma**2))


def process_failure_probabilities(n: int, noise: NoiseModel) -> tuple[float, float]:
    """Per-round (p0, p1): 0-bit return probability and 1-bit success probability,
    averaged over per-shot angle noise."""
    s_mean, s_sigma = n * noise.mean_angle, math.sqrt(n) * noise.sigma_theta
    p0 = gaussian_expectation(lambda s: np.cos(s) ** 2, s_mean, s_sigma)
    p1 = gaussian_expectation(lambda t: np.cos(t) ** 2, noise.mean_angle, noise.sigma_theta) ** n
    return p0, p1


def _static_no_detection_one(n, noise, m_arr, qmc_points=2**16, seed=12345):
    """E_stack[(1 - prod cos^2 theta_i)^M] for a device whose angles are fixed."""
    if noise.sigma_theta == 0:
        p1 = math.cos(noise.mean_angle) ** (2 * n)
        return (1 - p1) ** m_arr.astype(float)
    if n <= 3:
        z, w = _hermite(32 if n == 3 else 48)
        grids = np.meshgrid(*([z] * n), indexing="ij")
        weights = np.ones_like(grids[0])
        for g, wg in zip(grids, np.meshgrid(*([w] * n), indexing="ij")):
            weights = weights * wg
        angles = np.stack([noise.mean_angle + noise.sigma_theta * g for g in grids], axis=-1).reshape(-1, n)
        weights = weights.ravel()
    else:
        # scrambled Sobol points mapped through the normal quantile
        from scipy.special import ndtri

        u = qmc.Sobol(d=n, scramble=True, seed=seed).random(qmc_points)
        angles = noise.mean_angle + noise.sigma_theta * ndtri(u)
        weights = np.full(len(angles), 1.0 / len(angles))
    q = 1.0 - np.prod(np.cos(angles) ** 2, axis=1)
    return np.array([float(np.dot(weights, q**m)) for m in m_arr])


def analytic_rates(
    n: int,
    noise: NoiseModel,
    m_values: Sequence[int],
    bit_mix: float = 0.5,
    trials: Optional[int] = None,
) -> RateCurve:
    """Expected rate curve; stderr columns are the binomial errors expected at
    ``trials`` events (zero when ``trials`` is None)."""
    m_arr = np.asarray(sorted(set(int(m) for m in m_values)))
    p0, p1 = process_failure_probabilities(n, noise)
    if noise.mode == "per_shot":
        fail_one = (1.0 - p1) ** m_arr.astype(float)
        fail_zero = np.array([p0_fail_logical(p0, int(m)) for m in m_arr])
    else:
        fail_one = _static_no_detection_one(n, noise, m_arr)
        s_mean, s_sigma = n * noise.mean_angle, math.sqrt(n) * noise.sigma_theta
        fail_zero = np.array(
            [1.0 - gaussian_expectation(lambda s, m=m: np.sin(s) ** (2 * m), s_mean, s_sigma) for m in m_arr]
        )
    vio = (1 - bit_mix) * fail_zero
    ber = bit_mix * fail_one + vio
    n_trials = np.full(m_arr.shape, trials or 0)
    return RateCurve(
        m=m_arr,
        bit_error_rate=ber,
        violation_rate=vio,
        stderr_bit=binomial_stderr(ber, n_trials),
        stderr_violation=binomial_stderr(vio, n_trials),
        trials=n_trials,
        sent_one=np.full(m_arr.shape, bit_mix),
        errors_one=bit_mix * fail_one,
        sent_zero=np.full(m_arr.shape, 1 - bit_mix),
        errors_zero=(1 - bit_mix) * fail_zero,
        meta=_meta(n, noise, bit_mix, p0_per_process=p0, p1_per_process=p1, method="analytic"),
    )
