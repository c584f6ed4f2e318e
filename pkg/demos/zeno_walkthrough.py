"""Walk one particle through the discrete-mode protocol, then look at the Zeno limit.

    python demos/zeno_walkthrough.py
"""

import math

import numpy as np

from zenolink.core import (
    BeamSplitterStack,
    Outcome,
    Region,
    apply_beam_splitter,
    collapse_bob,
    create_particle_at_A,
    measure_alice_number,
    transfer,
)
from zenolink.protocol import LogicalBitConfig, run_logical_bit, simulate_processes, zeno_limit_table


def show(label, state):
    a, tr, b = state.amplitudes()
    print(f"  {label:<22} |A|^2={abs(a)**2:.4f}  |Tr|^2={abs(tr)**2:.4f}  |B|^2={abs(b)**2:.4f}")


def one_process(bit, n, rng):
    print(f"bit {bit}, N={n}")
    state, _ = transfer(create_particle_at_A(), Region.A, Region.TR)
    show("loaded into the line", state)
    for k, theta in enumerate(BeamSplitterStack.ideal(n), start=1):
        state = apply_beam_splitter(state, theta)
        if bit == 1:
            state, outcome, _ = collapse_bob(state, rng, pass_index=k)
            if outcome is Outcome.DETECTED_AT_BOB:
                print(f"  pass {k}: Bob's detector clicked, Alice sees nothing")
                return
        show(f"after pass {k}", state)
    state, _ = transfer(state, Region.TR, Region.A)
    count, _ = measure_alice_number(state, rng)
    print(f"  Alice counts {count} particle(s)")


rng = np.random.default_rng(1)
one_process(0, 4, rng)
one_process(1, 4, rng)

# The chance of the 1-bit returning to Alice climbs towards one as N grows,
# while the 0-bit never comes back in the ideal device.
print("\n  N   cos^2(pi/2N)^N   sampled (1e5)")
for n, p in zeno_limit_table([1, 2, 4, 7, 10, 50, 100, 500]):
    batch = simulate_processes(1, BeamSplitterStack.ideal(n), rng, trials=100_000)
    print(f"{n:4d}   {p:.6f}         {batch.alice_detects.mean():.4f}")

zero = simulate_processes(0, BeamSplitterStack.ideal(7), rng, trials=100_000)
print(f"\n0-bit, N=7: Alice detections in 1e5 rounds = {int(zero.alice_detects.sum())}")

# A logical bit repeats the process M times; one Alice click decodes a 1.
for m in (1, 3, 10):
    errors = sum(run_logical_bit(LogicalBitConfig(1, 7, m), rng=rng).error for _ in range(20_000))
    print(f"logical 1 over M={m:2d}: error rate {errors / 20_000:.5f}  (exact {(1 - math.cos(math.pi / 14) ** 14) ** m:.5f})")
