"""Error against noise level: too little noise hurts as much as too much.

With almost no noise every observation is just sign(M_ij), which says nothing
about magnitudes; with heavy noise the signs are close to coin flips. The
error is smallest in between. Scaled down so it runs in under a minute.
"""
from bitmc.experiments import ExperimentConfig, run_sweep_sigma

cfg = ExperimentConfig(
    kind="sweep_sigma", d1=50, d2=50, r=1, n_fraction=0.15,
    sigma_grid=(0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0),
    programs=("box", "nuclear"), replicates=2,
)
res = run_sweep_sigma(cfg)
print(f"{'sigma':>7}  {'box':>7}  {'nuclear':>7}")
rows = {(s["program"], s["sigma"]): s["mean_rel_fro_sq"] for s in res["summary"]}
for sigma in cfg.sigma_grid:
    print(f"{sigma:7.2f}  {rows['box', sigma]:7.3f}  {rows['nuclear', sigma]:7.3f}")
