"""Why the exponent condition cannot be weakened.

Trigonometric partial sums with alpha + beta = 1 have integrals growing
like pi * m, so no limit exists. Above the threshold the same sums converge
geometrically.
"""

import math
import warnings

from holderint.sharpness import divergence_sweep, rows_to_csv

rows = divergence_sweep(1, 0.5, [0.5], range(0, 7))
print("alpha = beta = 1/2")
for r in rows:
    print(f"m={r.m}  value={r.numeric_integral: .6f}  -pi*m={-math.pi * r.m: .6f}")

rows = divergence_sweep(1, 0.9, [0.9], range(1, 8))
print("\nalpha = beta = 0.9, increments shrink by 2^(-0.8) each step")
for r in rows[1:]:
    print(f"m={r.m}  increment={r.increment: .3e}  predicted={-math.pi * 2 ** (r.m * (1 - 1.8)): .3e}")

# the sweep warns when the quadrature is too coarse for the top frequency
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    divergence_sweep(1, 0.5, [0.5], [5], resolution=128)
print(f"\n{caught[0].message}")

print("\n" + rows_to_csv(divergence_sweep(2, 0.5, [0.5, 0.5], range(1, 4))))
