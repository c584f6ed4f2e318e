"""Calibrate the barrier and rewrite the bundled scenario files.

The barrier height is tuned so that the reference packet, released from
the well's turning point, transmits sin^2(pi/14) on one hit.

    python demos/regenerate_scenarios.py --out src/zenolink/scenarios
"""

import argparse
import math
from pathlib import Path

from zenolink.io import write_json
from zenolink.tdse import build_protocol_scenario, calibrate_barrier, reference_packet, scenario_to_dict

parser = argparse.ArgumentParser()
parser.add_argument("--out", type=Path, default=Path("regenerated"))
parser.add_argument("--tol", type=float, default=1e-5)
args = parser.parse_args()

width = 0.004
base = build_protocol_scenario(1, 1.0)
target = math.sin(math.pi / 14) ** 2
barrier, measured = calibrate_barrier(base.grid, reference_packet(base), target, width, base.dt, tol=args.tol)
print(f"height {barrier.height!r} gives T={measured:.6f} (target {target:.6f})")

descriptions = {
    "fig3a": (0, "0-bit process: no detectors in Bob's region, the packet accumulates in B over seven hits"),
    "fig3b": (1, "1-bit process: Bob empties his region after every hit, about 70% of the packet returns to Alice"),
}
for name, (bit, desc) in descriptions.items():
    notes = {
        "description": desc,
        "calibration": {
            "target_transmission": target,
            "measured_transmission": measured,
            "barrier_width": width,
            "reference_packet": "ground state released at rest 20 to the left of a well centred on the barrier, omega 0.5",
        },
    }
    sc = build_protocol_scenario(bit, barrier.height, name=name, notes=notes)
    write_json(args.out / f"{name}.json", scenario_to_dict(sc))
    print(f"wrote {args.out / (name + '.json')}")
