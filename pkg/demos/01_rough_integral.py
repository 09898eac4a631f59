"""Integrating one rough function against another.

Both fields below are lacunary series, so neither has a derivative anywhere.
The Riemann-Stieltjes sum still converges because the exponents add up to
more than the dimension.
"""

import numpy as np

from holderint import BoxDomain, integrate, lacunary_series, riemann_sequence

# exponents 0.7 + 0.6 = 1.3 > 1 on an interval
f = lacunary_series(0.7, 12)
g = lacunary_series(0.6, 12, phase=1.0)
box = BoxDomain(((0.0, 2.0),))

# the dyadic sums settle geometrically
seq = riemann_sequence(f, [g], box, 14)
for k in range(0, 15, 2):
    print(f"k={k:2d}  I_k={seq[k]: .10f}  step={abs(seq[k] - seq[k - 1]) if k else float('nan'):.2e}")

# integrate picks the level and reports how it stopped
res = integrate(f, [g], box, tol=1e-6, k_max=22)
print(f"\nvalue {res.value:.10f} at level {res.level} ({res.criterion})")
print(f"certified bound {res.apriori:.2e}, tail estimate {res.aposteriori:.2e}")

# in two dimensions the integrand pairs with det Dg
f2 = lacunary_series(0.9, 6, "sine_product", dim=2)
g2 = [lacunary_series(0.9, 6, dim=2, axis=0), lacunary_series(0.9, 6, dim=2, axis=1, phase=0.5)]
res2 = integrate(f2, g2, BoxDomain.unit(2), k_max=8)
print(f"\n2-D value {res2.value:.8f} at level {res2.level}, bound {res2.apriori:.2e}")
print("the 2-D certificate is loose: it carries the full constant recursion")

# the exponent condition is enforced before any work is done
try:
    integrate(lacunary_series(0.5, 8), [lacunary_series(0.5, 8)], box, tol=1e-3)
except ValueError as exc:
    print(f"\nrefused: {exc}")
