"""Growth on a time scale that mixes continuous stretches and jumps.

The generalized exponential e_p(t, 0) with constant p is e^(p t) on the
dense pieces and multiplies by 1 + mu p across each gap.
"""

import numpy as np

from tsdelay import build_timescale, exp_values, regressivity_class

# two dense stretches joined by isolated points
ts = build_timescale([[0, 1], {1.5}, {2}, [2.5, 3]], dense_step=0.01)
print(ts)

p = 0.8
points, e = exp_values(ts, p, 0, 3)
print("regressivity of p:", regressivity_class(ts, p, 0, 3).name)

# compare with the continuous exponential: the gaps grow slower than e^(p mu)
for t in (1.0, 1.5, 2.0, 2.5, 3.0):
    j = int(np.argmin(np.abs(points - t)))
    print(f"t={t:4.1f}  e_p={e[j]:.6f}  exp(p t)={np.exp(p * t):.6f}")

# a negative rate that flips sign across a wide gap
q = -2.5
print("regressivity of q:", regressivity_class(ts, q, 0, 3).name)
