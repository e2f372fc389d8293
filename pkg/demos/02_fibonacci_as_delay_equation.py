"""A delay difference equation on the integers.

x^Delta(t) = x(t - 1) reads x(t + 1) = x(t) + x(t - 1), so history 1 on
{-1, 0} yields the Fibonacci numbers.  The solver stays exact on scattered
points.
"""

from tsdelay import LinearDelaySystem, integers, solve_global, verify_representation

ts = integers(-1, 20)
sys = LinearDelaySystem(ts, alpha=-1, beta=0, gamma=20, coeffs=[1.0],
                        delays=[lambda t: t - 1], history=1.0)
sol = solve_global(sys)
print([int(v) for v in sol.values.values])

# the same values through the principal-solution representation
print(verify_representation(sys, tol=0.0))
