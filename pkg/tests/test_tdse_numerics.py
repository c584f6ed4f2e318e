import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from zenolink.errors import CalibrationError, ResolutionError, StabilityError
from zenolink.tdse import (
    Barrier,
    Composite,
    Flat,
    FluxTrigger,
    Grid1D,
    Harmonic,
    ReferencePacket,
    RegionPartition,
    Split,
    Tabulated,
    Wavefunction1D,
    advance,
    apply_hamiltonian,
    calibrate_barrier,
    init_ground_state,
    max_stable_height,
    region_probabilities,
    scattering_transmission,
    stability_limit,
    stagger,
    step,
)
from zenolink.tdse.potential import evaluate, schedule_from_list, schedule_to_list, spec_from_dict, spec_to_dict
from zenolink.tdse.potential import PotentialSchedule, Stage


def energy(wf, v):
    psi = wf.psi()
    h = apply_hamiltonian(psi.real, v, wf.grid.dx) + 1j * apply_hamiltonian(psi.imag, v, wf.grid.dx)
    return float(np.real(np.vdot(psi, h)) / np.vdot(psi, psi).real)


# ------------------------------------------------------------------ grid and initial state

def test_grid_invariants():
    g = Grid1D(-1.0, 1.0, 201)
    assert g.dx == pytest.approx(0.01)
    assert g.x[0] == -1 and g.x[-1] == 1
    assert g.refined().n_points == 401 and g.refined().dx == pytest.approx(0.005)
    assert g.is_node(0.25) and not g.is_node(0.255)
    with pytest.raises(ValueError):
        Grid1D(0, 1, 2)
    with pytest.raises(ValueError):
        Grid1D(1, 0, 10)


def test_partition_checks_order():
    g = Grid1D(-10, 10, 201)
    with pytest.raises(ValueError):
        RegionPartition(2.0, 1.0).check(g)
    a, tr, b = RegionPartition(-5.0, 0.0).masks(g)
    assert a.sum() + tr.sum() + b.sum() == g.n_points
    assert not (a & tr).any() and not (tr & b).any()
    assert g.x[tr].max() == pytest.approx(0.0) and g.x[b].min() > 0


def test_ground_state_oracles():
    g = Grid1D(-15, 15, 1201)
    well = Harmonic(1.3, 0.5)
    wf = init_ground_state(g, well)
    assert wf.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(wf.expect_x() - 1.3) <= g.dx
    v = well.values(g.x)
    assert energy(wf, v) == pytest.approx(0.25, rel=0.01)


def test_ground_state_rejects_coarse_grid():
    with pytest.raises(ResolutionError):
        init_ground_state(Grid1D(-15, 15, 121), Harmonic(0.0, 0.5))
    with pytest.raises(ValueError):
        init_ground_state(Grid1D(-15, 15, 1201), Harmonic(20.0, 0.5))


def test_region_probabilities_sum_to_norm():
    g = Grid1D(-20, 20, 1601)
    wf = init_ground_state(g, Harmonic(-12.0, 0.5))
    part = RegionPartition(-5.0, 0.0)
    p = region_probabilities(wf, part)
    assert p[0] == pytest.approx(1.0, abs=1e-9)
    assert sum(p) == pytest.approx(wf.norm(), abs=1e-12)


# ------------------------------------------------------------------ leapfrog

def test_stability_bound():
    g = Grid1D(-10, 10, 401)
    v = np.zeros(g.n_points)
    limit = stability_limit(v, g.dx)
    assert limit == pytest.approx(g.dx**2)
    wf = init_ground_state(g, Harmonic(0.0, 0.5))
    with pytest.raises(StabilityError):
        step(wf, v, 1.01 * limit)
    step(wf, v, 0.99 * limit)


def test_free_packet_norm_drift():
    g = Grid1D(-40, 40, 1601)
    wf = init_ground_state(g, Harmonic(0.0, 0.5))
    psi = wf.psi() * np.exp(1j * 1.5 * g.x)
    wf = Wavefunction1D.from_complex(g, psi / math.sqrt((np.abs(psi) ** 2).sum() * g.dx))
    v = np.zeros(g.n_points)
    wf = stagger(wf, v, 0.5 * stability_limit(v, g.dx))
    n0 = wf.norm()
    advance(wf, v, np.empty(0, dtype=np.int64), 10_000)
    assert abs(wf.norm() - n0) <= 1e-8
    assert wf.expect_x() == pytest.approx(1.5 * wf.time, abs=0.05)


def test_ehrenfest_oscillation():
    g = Grid1D(-20, 20, 1601)
    omega, x0 = 0.5, 5.0
    v = Harmonic(0.0, omega).values(g.x)
    dt = 0.5 * stability_limit(v, g.dx)
    wf = stagger(init_ground_state(g, Harmonic(x0, omega)), v, dt)
    period = 2 * math.pi / omega
    per = 50
    n_chunks = int(round(period / dt)) // per
    worst = 0.0
    for _ in range(n_chunks):
        advance(wf, v, np.empty(0, dtype=np.int64), per)
        worst = max(worst, abs(wf.expect_x() - x0 * math.cos(omega * wf.time)))
    assert worst <= 0.01 * x0


def test_discrete_eigenstate_is_stationary():
    g = Grid1D(-15, 15, 601)
    omega = 0.5
    v = Harmonic(0.0, omega).values(g.x)
    c = 0.5 / g.dx**2
    # interior nodes; the walls hold zero
    w, vecs = eigh_tridiagonal(v[1:-1] + 2 * c, -c * np.ones(g.n_points - 3), select="i", select_range=(1, 1))
    psi = np.zeros(g.n_points)
    psi[1:-1] = vecs[:, 0] / math.sqrt(g.dx)
    assert w[0] == pytest.approx(1.5 * omega, rel=1e-3)
    dt = 0.5 * stability_limit(v, g.dx)
    wf = stagger(Wavefunction1D.from_complex(g, psi), v, dt)
    rho0 = wf.density().copy()
    advance(wf, v, np.empty(0, dtype=np.int64), int(round(2 * math.pi / omega / dt)))
    assert np.max(np.abs(wf.density() - rho0)) <= 1e-6


def test_step_and_advance_agree():
    g = Grid1D(-10, 10, 401)
    v = Harmonic(1.0, 0.7).values(g.x)
    dt = 0.4 * stability_limit(v, g.dx)
    wf0 = stagger(init_ground_state(g, Harmonic(-2.0, 0.5)), v, dt)
    a = wf0
    for _ in range(25):
        a = step(a, v, dt)
    b = wf0.copy()
    advance(b, v, np.empty(0, dtype=np.int64), 25)
    np.testing.assert_allclose(a.real, b.real, atol=1e-14)
    np.testing.assert_allclose(a.imag, b.imag, atol=1e-14)
    assert a.time == pytest.approx(b.time)


def test_compiled_kernel_matches_reference():
    g = Grid1D(-10, 10, 801)
    v, pinned = Composite(Harmonic(0.0, 0.5, -4.0), Barrier(0.0, 500.0, 0.004)).evaluate(g)
    dt = 0.4 * stability_limit(v, g.dx)
    wf = stagger(init_ground_state(g, Harmonic(-4.0, 0.5)), v, dt)
    link = RegionPartition(-6.0, 0.0).link(g)
    outs = []
    for compiled in (True, False):
        w = wf.copy()
        trig = FluxTrigger(1e-3, 1e-5, 40)
        n, fired, flux = advance(w, v, pinned, 40000, link, trig, stop_on_fire=True, compiled=compiled)
        outs.append((n, fired, flux, w))
    (n1, f1, j1, w1), (n2, f2, j2, w2) = outs
    assert f1 and f2 and n1 == n2
    np.testing.assert_allclose(j1, j2, atol=1e-13)
    np.testing.assert_allclose(w1.real, w2.real, atol=1e-12)


def test_advance_requires_staggered_state():
    g = Grid1D(-10, 10, 401)
    with pytest.raises(ValueError):
        advance(init_ground_state(g, Harmonic(0.0, 0.5)), np.zeros(401), np.empty(0, dtype=np.int64), 10)


def test_restagger_keeps_norm_across_potential_switch():
    g = Grid1D(-20, 20, 1601)
    v1 = Harmonic(-3.0, 0.5).values(g.x)
    v2 = Harmonic(4.0, 0.5, -3.0).values(g.x)
    dt = 0.5 * min(stability_limit(v1, g.dx), stability_limit(v2, g.dx))
    wf = stagger(init_ground_state(g, Harmonic(0.0, 0.5)), v1, dt)
    none = np.empty(0, dtype=np.int64)
    advance(wf, v1, none, 5000)
    before = wf.norm()
    wf = stagger(wf, v2, dt)
    assert wf.norm() == pytest.approx(before, abs=1e-8)
    advance(wf, v2, none, 5000)
    assert wf.norm() == pytest.approx(before, abs=1e-8)


# ------------------------------------------------------------------ potentials

def test_barrier_deposit_conserves_strength():
    for n in (801, 1601, 3201):
        g = Grid1D(-10, 10, n)
        v, pinned = Barrier(0.0, 1000.0, 0.004).deposit(g)
        assert v.sum() * g.dx == pytest.approx(4.0, rel=1e-12)
        assert pinned.size == 0
    g = Grid1D(-10, 10, 801)
    v, pinned = Barrier(0.0, math.inf, 0.004).deposit(g)
    assert not v.any() and list(pinned) == [400]


def test_potential_specs_and_json_round_trip():
    g = Grid1D(-5, 5, 101)
    split = Split(0.0, Harmonic(0.0, 1.0), Flat(-2.0))
    v = split.values(g.x)
    assert v[0] == pytest.approx(12.5) and v[-1] == -2.0
    tab = Tabulated((-5.0, 5.0), (0.0, 10.0))
    assert tab.values(np.array([0.0]))[0] == pytest.approx(5.0)
    spec = Composite(split, Barrier(0.0, math.inf, 0.01))
    assert spec_from_dict(spec_to_dict(spec)) == spec
    sched = PotentialSchedule((Stage(1.0, spec, 2, "x"), Stage(0.5, tab)))
    assert schedule_from_list(schedule_to_list(sched)) == sched
    with pytest.raises(ValueError):
        spec_from_dict({"kind": "cubic"})
    with pytest.raises(ValueError):
        Stage(0.0, Flat())
    with pytest.raises(ValueError):
        Barrier(0.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        evaluate(Tabulated((0.0, 1.0), (0.0, math.inf)), g)


# ------------------------------------------------------------------ calibration

@pytest.fixture(scope="module")
def cal_setup():
    g = Grid1D(-30, 20, 2001)
    return g, ReferencePacket(0.0, 0.5, 12.0), 2e-4


def test_hard_wall_reflects_everything(cal_setup):
    g, packet, dt = cal_setup
    assert scattering_transmission(g, packet, Barrier(0.0, math.inf, 0.004), dt) < 1e-4


def test_transmission_decreases_with_height(cal_setup):
    g, packet, dt = cal_setup
    hmax = max_stable_height(g, dt, 0.004, 40.0)
    heights = np.geomspace(10, hmax, 6)
    t = [scattering_transmission(g, packet, Barrier(0.0, h, 0.004), dt) for h in heights]
    assert np.all(np.diff(t) < 0)


def test_calibration_hits_target(cal_setup):
    g, packet, dt = cal_setup
    target = math.sin(math.pi / 14) ** 2
    barrier, t = calibrate_barrier(g, packet, target, 0.004, dt)
    assert abs(t - target) <= 2e-4
    check = scattering_transmission(g, packet, barrier, dt)
    assert abs(check - target) <= 0.002


def test_calibration_reports_bad_bracket(cal_setup):
    g, packet, dt = cal_setup
    with pytest.raises(CalibrationError):
        calibrate_barrier(g, packet, 0.05, 0.004, dt, bracket=(1e3, 2e3))
    with pytest.raises(ValueError):
        calibrate_barrier(g, packet, 1.5, 0.004, dt)
