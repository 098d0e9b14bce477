"""How error shrinks as more entries are observed.

The log-log slope of the relative Frobenius error (after rank-r truncation)
against the number of observations comes out near -1/2.
"""
from bitmc.experiments import ExperimentConfig, run_sweep_n

cfg = ExperimentConfig(
    kind="sweep_n", d1=60, d2=60, r=2, sigma=0.18,
    n_fractions=(0.15, 0.25, 0.35, 0.45, 0.6), replicates=3,
)
res = run_sweep_n(cfg)
for row in res["summary"]:
    print(f"n = {row['n']:6.0f}   rel. error {row['mean_rel_fro']:.3f}   Hellinger {row['mean_hellinger']:.3f}")
(slopes,) = res["slopes"]
print(f"slopes: rel. error {slopes['slope_rel_fro']:.2f}, Hellinger {slopes['slope_hellinger']:.2f}")
