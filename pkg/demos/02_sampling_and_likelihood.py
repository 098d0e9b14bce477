"""Draw a low-rank matrix, observe random signs, and evaluate the likelihood.

The latent form (add Gaussian noise, keep the sign) and the probit link
describe the same observation model; the empirical frequency of +1 below
matches the link's prediction.
"""
import numpy as np

from bitmc import probit, sample_observations_latent, sample_omega, synth_low_rank
from bitmc.objective import value_and_grad

d, r, sigma = 60, 2, 0.5
m = synth_low_rank(d, d, r, seed=7)
omega = sample_omega(d, d, n=0.3 * d * d, seed=8)
obs = sample_observations_latent(m, omega, sigma, seed=9)
print(f"M: {d}x{d}, rank {r}, max |M_ij| = {np.max(np.abs(m)):.3f}")
print(f"observed {len(obs)} of {d * d} entries (expected {0.3 * d * d:.0f})")

link = probit(sigma)
predicted = link.eval(m[obs.rows, obs.cols]).mean()
print(f"fraction of +1: observed {np.mean(obs.y == 1):.3f}, predicted {predicted:.3f}")

# the truth is a good point for the likelihood but not its minimiser
for name, x in (("zero matrix", np.zeros_like(m)), ("true M", m)):
    state = value_and_grad(x, obs, link)
    print(f"{name:12s} -logL = {state.value:9.2f}   |grad|_F = {np.linalg.norm(state.grad):.2f}")
