"""Line integrals around von Koch polygons.

The polygons converge to the snowflake, whose boundary has no finite length.
A parametrization with Hölder exponent log 3 / log 4 and a level-free
constant still lets us integrate y dx around it; the result is minus the
enclosed area.
"""

import time

from holderint import ScalarField
from holderint.currents import koch_boundary_evaluate, koch_parametrization

y = ScalarField.coordinate(1, 2)
x = ScalarField.coordinate(0, 2)

print("level  segments  integral of y dx    -area            quotient")
for level in range(7):
    t0 = time.perf_counter()
    res = koch_boundary_evaluate(y, [x], level, k_max=20, k_min=20)
    _, rep = koch_parametrization(level)
    print(f"{level:5d}  {rep.segments:8d}  {res.value: .12f}  {-rep.area: .12f}  {rep.sampled_quotient:.3f}"
          f"   ({time.perf_counter() - t0:.2f}s)")
print(f"\ncertified quotient bound {rep.certified_bound:.3f}; the limit area is 8/5 of the triangle")
