"""Picard iterates for a nonlinear delay equation and their a priori bound.

Each difference x_k - x_{k-1} stays below M L^(k-1) h_k(t, beta).
"""

import numpy as np

from tsdelay import DelayIVP, integers, iterate_error_bound, picard_solve

ts = integers(0, 8)
M, L = 0.8, 0.5
ivp = DelayIVP(ts, alpha=0, beta=0, gamma=8,
               rhs=lambda t, u: 0.5 * np.sin(u) + 0.3,
               delays=[lambda t: max(t - 1, 0)], history=0.0,
               lipschitz_L=L, bound_M=M, epsilon=10.0)
sol = picard_solve(ivp, record_iterates=True)
print("window delta, zeta:", sol.diagnostics.window_delta, sol.diagnostics.zeta)
print("iterations:", sol.diagnostics.iterations)

its = sol.diagnostics.iterates
for k in range(1, len(its)):
    diff = np.max(np.abs(its[k] - its[k - 1]))
    bound = iterate_error_bound(M, L, k, ts, 8, 0)
    print(f"k={k}  sup|x_k - x_(k-1)|={diff:.3e}  bound at t=8: {bound:.3e}")
