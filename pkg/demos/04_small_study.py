"""A small Monte-Carlo study and where its outputs go.

The full two-player protocol is 100 user drops with 20 fading draws each;
this runs a fraction of it.  Use the CLI for the real thing.
"""

import json
import tempfile
from pathlib import Path

from sharegame.experiment import ExperimentConfig, emit_outputs, run_experiment

cfg = ExperimentConfig(kind="MRG", visiting_prob=0.0, user_realizations=5, fading_realizations=4, seed=1, nash_check=False)
report = run_experiment(cfg, progress=lambda k, n: print(f"user drop {k}/{n}"))

out = Path(tempfile.mkdtemp())
paths = emit_outputs(report, out)
summary = json.loads(paths["summary.json"].read_text())
print("\nmedian per-user rate (Mbit/s)")
for curve, stats in summary["curves"].items():
    print(f"  {curve:>10}  {stats['median_rate']:7.2f}")
print("\nconvergence histogram:", summary["convergence"])
print("first lines of rates.csv:")
print("".join(paths["rates.csv"].read_text().splitlines(True)[:4]))
