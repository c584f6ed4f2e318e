import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zenolink.core import (
    BeamSplitterStack,
    OneParticleState,
    Outcome,
    Region,
    Status,
    alice_probability,
    apply_beam_splitter,
    beam_splitter_matrix,
    collapse_bob,
    create_particle_at_A,
    measure_alice_number,
    transfer,
    vacuum,
)

angles = st.floats(-math.pi / 2, math.pi / 2, allow_nan=False)


@st.composite
def states(draw):
    re = [draw(st.floats(-1, 1)) for _ in range(3)]
    im = [draw(st.floats(-1, 1)) for _ in range(3)]
    v = np.array(re) + 1j * np.array(im)
    if np.linalg.norm(v) < 1e-3:
        v = np.array([1, 0, 0], dtype=complex)
    v = v / np.linalg.norm(v)
    return OneParticleState(*v)


def amps(state):
    return np.array(state.amplitudes())


# ------------------------------------------------------------------ state construction

def test_create_particle_at_a():
    s = create_particle_at_A()
    assert s.amplitudes() == (1, 0, 0)
    assert s.status is Status.COHERENT
    assert s.norm() == 1.0
    assert measure_alice_number(s)[0] == 1


def test_state_rejects_unnormalised():
    with pytest.raises(ValueError):
        OneParticleState(1.0, 1e-5, 0)


def test_absorbed_state_must_be_empty():
    with pytest.raises(ValueError):
        OneParticleState(1.0, 0, 0, Status.DETECTED_AT_BOB)
    assert vacuum().amplitudes() == (0, 0, 0)


def test_stack_invariants():
    assert BeamSplitterStack.ideal(7).angles == (math.pi / 14,) * 7
    assert BeamSplitterStack.ideal(1).angles == (math.pi / 2,)
    with pytest.raises(ValueError):
        BeamSplitterStack(())
    with pytest.raises(ValueError):
        BeamSplitterStack((0.1, 1.6))
    with pytest.raises(ValueError):
        BeamSplitterStack.ideal(0)


# ------------------------------------------------------------------ transfer

def test_transfer_a_to_line():
    s, w = transfer(create_particle_at_A(), Region.A, Region.TR)
    assert s.amplitudes() == (0, 1, 0)
    assert w == 1.0


def test_transfer_from_empty_region_is_identity():
    s0 = OneParticleState(0, 0, 1j)
    s, w = transfer(s0, Region.TR, Region.A)
    assert s == s0
    assert w == 0.0


def test_transfer_relabels_amplitude():
    s, w = transfer(OneParticleState(0, 0.6, 0.8j), Region.TR, Region.A)
    np.testing.assert_allclose(amps(s), [0.6, 0, 0.8j])
    assert w == pytest.approx(0.36)
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_transfer_rejects_occupied_target():
    with pytest.raises(ValueError):
        transfer(OneParticleState(0.6, 0.8, 0), Region.TR, Region.A)


def test_transfer_rejects_same_region():
    with pytest.raises(ValueError):
        transfer(create_particle_at_A(), Region.A, Region.A)


@given(states(), st.sampled_from(list(Region)), st.sampled_from(list(Region)))
def test_transfer_preserves_norm_and_empties_source(s, src, dst):
    if src is dst:
        return
    if s.amplitude(src) != 0 and s.amplitude(dst) != 0:
        with pytest.raises(ValueError):
            transfer(s, src, dst)
        return
    out, _ = transfer(s, src, dst)
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    assert out.amplitude(src) == 0
    again, w = transfer(out, src, dst)
    assert again == out and w == 0.0


# ------------------------------------------------------------------ beam splitter

def test_single_pass_from_line():
    t = 0.3
    s = apply_beam_splitter(OneParticleState(0, 1, 0), t)
    np.testing.assert_allclose(amps(s), [0, math.cos(t), 1j * math.sin(t)], atol=1e-15)


def test_zero_angle_is_identity():
    s = OneParticleState(0, 1, 0)
    assert apply_beam_splitter(s, 0.0) == s


@pytest.mark.parametrize("n", [1, 2, 7, 50])
def test_ideal_stack_moves_line_into_bob(n):
    s = OneParticleState(0, 1, 0)
    for t in BeamSplitterStack.ideal(n):
        s = apply_beam_splitter(s, t)
    np.testing.assert_allclose(amps(s), [0, 0, 1j], atol=1e-10)


def test_matrix_is_exponential_of_sigma_x():
    t = 0.37
    sx = np.array([[0, 1], [1, 0]])
    expected = math.cos(t) * np.eye(2) + 1j * math.sin(t) * sx
    np.testing.assert_allclose(beam_splitter_matrix(t), expected, atol=1e-15)


@settings(max_examples=300)
@given(states(), angles, angles)
def test_composition_adds_angles(s, t1, t2):
    two = apply_beam_splitter(apply_beam_splitter(s, t1), t2)
    one = apply_beam_splitter(s, t1 + t2)
    np.testing.assert_allclose(amps(two), amps(one), atol=1e-12)


def test_unitarity_over_a_million_random_states():
    rng = np.random.default_rng(20)
    n = 1_000_000
    v = rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    theta = rng.uniform(-math.pi / 2, math.pi / 2, n)
    worst = 0.0
    for i in range(n):
        out = apply_beam_splitter(OneParticleState(*v[i]), theta[i])
        worst = max(worst, abs(out.norm() - 1.0))
    assert worst <= 1e-12


def test_beam_splitter_needs_coherent_state():
    with pytest.raises(ValueError):
        apply_beam_splitter(vacuum(), 0.1)


# ------------------------------------------------------------------ collapse and readout

def test_collapse_without_bob_support_always_survives():
    rng = np.random.default_rng(0)
    s = OneParticleState(0, 1, 0)
    for _ in range(100):
        out, outcome, rec = collapse_bob(s, rng)
        assert outcome is Outcome.SURVIVED and out == s and rec.probability_removed == 0


def test_collapse_with_all_support_at_bob_always_detects():
    rng = np.random.default_rng(0)
    for _ in range(100):
        out, outcome, rec = collapse_bob(OneParticleState(0, 0, 1j), rng, pass_index=3)
        assert outcome is Outcome.DETECTED_AT_BOB
        assert out.status is Status.DETECTED_AT_BOB and out.amplitudes() == (0, 0, 0)
        assert rec.pass_index == 3 and rec.probability_removed == 1.0


def test_collapse_survivor_is_renormalised_line_state():
    t = 0.4
    s = OneParticleState(0, math.cos(t), 1j * math.sin(t))
    rng = np.random.default_rng(5)
    survivors = [out for out, o, _ in (collapse_bob(s, rng) for _ in range(50)) if o is Outcome.SURVIVED]
    assert survivors
    for out in survivors:
        np.testing.assert_allclose(amps(out), [0, 1, 0], atol=1e-15)


def test_collapse_statistics():
    t = 0.3
    s = OneParticleState(0, math.cos(t), 1j * math.sin(t))
    rng = np.random.default_rng(11)
    n = 100_000
    hits = sum(collapse_bob(s, rng)[1] is Outcome.DETECTED_AT_BOB for _ in range(n))
    p = math.sin(t) ** 2
    assert abs(hits / n - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_alice_readout():
    assert measure_alice_number(OneParticleState(1, 0, 0))[0] == 1
    assert measure_alice_number(OneParticleState(status=Status.DETECTED_AT_BOB))[0] == 0
    count, post = measure_alice_number(OneParticleState(0, 1, 0))
    assert count == 0 and post.amp_A == 0


def test_alice_readout_tolerance_band():
    eps = 1e-10
    s = OneParticleState(math.sqrt(1 - eps), math.sqrt(eps), 0)
    assert measure_alice_number(s)[0] == 1
    count, post = measure_alice_number(OneParticleState(math.sqrt(eps), math.sqrt(1 - eps), 0))
    assert count == 0 and post.amp_A == 0 and post.norm() == pytest.approx(1, abs=1e-12)


def test_alice_readout_of_superposition_needs_rng_and_follows_born_rule():
    s = OneParticleState(math.sqrt(0.3), math.sqrt(0.7), 0)
    with pytest.raises(ValueError):
        measure_alice_number(s)
    rng = np.random.default_rng(2)
    results = [measure_alice_number(s, rng) for _ in range(20_000)]
    rate = np.mean([c for c, _ in results])
    assert abs(rate - 0.3) < 4 * math.sqrt(0.21 / 20_000)
    for c, post in results[:50]:
        assert abs(post.amp_A) == pytest.approx(float(c))


# ------------------------------------------------------------------ batched propagation

def test_alice_probability_matches_closed_forms():
    ang = np.array([[0.1, 0.2, 0.3], [math.pi / 6] * 3])
    np.testing.assert_allclose(alice_probability(1, ang), np.prod(np.cos(ang) ** 2, axis=1), rtol=1e-13)
    np.testing.assert_allclose(alice_probability(0, ang), np.cos(ang.sum(axis=1)) ** 2, atol=1e-15)


def test_alice_probability_rejects_bad_bit():
    with pytest.raises(ValueError):
        alice_probability(2, [0.1])
