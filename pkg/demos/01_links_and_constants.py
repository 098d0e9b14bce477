"""Link functions and the two constants that govern recovery difficulty.

L_alpha bounds how steep the log-likelihood can be on [-alpha, alpha];
beta_alpha measures how flat the link is there. Large beta means the
observations carry little information about the underlying value.
"""
import math

from bitmc import flatness, logistic, probit, steepness

print("logistic link")
for alpha in (0.5, 1.0, 2.0, 4.0):
    lg = logistic()
    closed = (1 + math.exp(alpha)) ** 2 / math.exp(alpha)
    print(f"  alpha={alpha:<4} L={steepness(lg, alpha):.6f}  beta={flatness(lg, alpha):10.4f}  closed form {closed:10.4f}")

# probit gets flatter quickly as alpha / sigma grows
print("probit link")
for sigma in (0.25, 1.0, 4.0):
    pl = probit(sigma)
    row = "  ".join(f"beta({a})={flatness(pl, a):.3g}" for a in (0.5, 1.0, 2.0))
    print(f"  sigma={sigma:<5} {row}")
