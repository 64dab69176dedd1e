"""
Sweeping the kept-window ratio
==============================

Run the seeded model at three kept ratios alpha = k/n on a tiny synthetic
dataset and collect one metric row per ratio.  Weights are untrained, so the
numbers only show that the harness runs end to end.
"""

import tempfile
from pathlib import Path

from raformer.ablation import PAPER_ALPHAS, alpha_sweep, sweep_csv
from raformer.cli import format_report
from raformer.synthetic import write_synthetic_dataset

work = Path(tempfile.mkdtemp(prefix="alpha_sweep_"))
manifest = write_synthetic_dataset(work / "data", count=2, length=5, size=(64, 64), seed=0)

# 4x4 windows on 16x16 features: n = 16, so k = 2, 4, 8.  At alpha = 1/8
# the kept windows are duplicated to fill a single group.
config = {"raformer": {"H": 64, "W": 64, "C": 16, "h": 4, "w": 4}}
rows = alpha_sweep(manifest, work / "runs", PAPER_ALPHAS, config=config)

table = work / "alpha.csv"
table.write_text(sweep_csv(rows))
print(format_report([table]))
print("outputs under", work)
