"""Predict whether held-out ratings are above or below average.

Uses MovieLens 100k when BITMC_RATINGS points at its u.data file. Otherwise a
small synthetic ratings file is generated so the pipeline can be seen end to
end; its accuracies mean nothing beyond that.
"""
import os
import tempfile
from pathlib import Path

import numpy as np

from bitmc.experiments import ExperimentConfig, run_recsys_eval

path = os.environ.get("BITMC_RATINGS")
if not path:
    rng = np.random.default_rng(0)
    users, items = 120, 80
    taste = rng.normal(size=(users, 2)) @ rng.normal(size=(2, items))
    lines = []
    for u in range(users):
        for i in rng.choice(items, size=25, replace=False):
            rating = int(np.clip(np.round(3 + taste[u, i] + 0.5 * rng.normal()), 1, 5))
            lines.append(f"{u + 1}\t{i + 1}\t{rating}\t0")
    path = Path(tempfile.mkdtemp()) / "toy.data"
    path.write_text("\n".join(lines) + "\n")
    print(f"no BITMC_RATINGS set; using synthetic ratings at {path}")

cfg = ExperimentConfig.from_dict({"kind": "recsys_eval", "ratings": str(path), "r": 5, "alpha": 3.0})
res = run_recsys_eval(cfg)
print(f"threshold {res['threshold']:.3f}; {res['n_train']} training / {res['n_holdout']} held-out ratings")
print(res["csv"])
