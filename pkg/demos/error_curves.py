"""Bit-error and counterfactuality-violation rates versus M under beam-splitter noise.

Monte Carlo curves are printed next to the quadrature values. The 0-bit
violations grow roughly linearly in M while the 1-bit errors fall
geometrically, so the total error has a minimum at an intermediate M.

    python demos/error_curves.py [--trials 200000] [--sigma 0.01]
"""

import argparse

import numpy as np

from zenolink.montecarlo import NoiseModel, analytic_rates, estimate_rates

parser = argparse.ArgumentParser()
parser.add_argument("--trials", type=int, default=200_000)
parser.add_argument("--sigma", type=float, default=0.01)
parser.add_argument("--seed", type=int, default=2024)
args = parser.parse_args()

m_values = list(range(1, 101))
show = [1, 2, 3, 5, 7, 10, 15, 20, 30, 50, 75, 100]
for n in (2, 7):
    noise = NoiseModel.for_stack(n, args.sigma)
    mc = estimate_rates(n, noise, m_values, args.trials, seed=[args.seed, n])
    an = analytic_rates(n, noise, m_values, trials=args.trials)
    print(f"\nN={n}, sigma={args.sigma}, {args.trials} logical bits per M")
    print("   M    BER (MC)     BER (quad)   violations (MC)  violations (quad)")
    for m in show:
        i = m - 1
        print(
            f"{m:4d}  {mc.bit_error_rate[i]:.3e}    {an.bit_error_rate[i]:.3e}    "
            f"{mc.violation_rate[i]:.3e}        {an.violation_rate[i]:.3e}"
        )
    print(f"lowest BER at M={mc.argmin_m()} (quadrature: M={an.argmin_m()})")

# A static device draws its angles once, so every round shares the same error.
noise = NoiseModel.for_stack(7, 0.05, "static_device")
static = analytic_rates(7, noise, [1, 10, 100])
shot = analytic_rates(7, NoiseModel.for_stack(7, 0.05), [1, 10, 100])
print("\nsigma=0.05, N=7: violation rate at M=1, 10, 100")
print("  per shot      ", np.array2string(shot.violation_rate, precision=4))
print("  static device ", np.array2string(static.violation_rate, precision=4))
