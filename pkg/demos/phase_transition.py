"""
Error against communication budget
==================================

Run the repeated project-then-test procedure for two (d, tau^2) pairs with
the same ratio d / tau^2. Plotted against the total number of bits sent,
both error curves fall together.

Pass --quick for a small version that runs in a few seconds.
"""

import argparse
import json
from pathlib import Path

from distcorr import SweepSpec, sweep_phase_transition

parser = argparse.ArgumentParser()
parser.add_argument("--quick", action="store_true")
args = parser.parse_args()

cfg = json.loads((Path(__file__).parent / "configs" / "phase_transition.json").read_text())
if args.quick:
    cfg.update(trials=40, repetitions=[1, 4, 16])

rows = sweep_phase_transition(SweepSpec.from_dict(cfg))

print(f"{'d':>3} {'tau^2':>7} {'bits':>6} {'error':>7}  ")
for row in rows:
    bar = "#" * round(60 * row.avg_error)
    print(f"{row.d:3d} {row.tau_sq:7.4f} {row.total_bits:6d} {row.avg_error:7.3f}  {bar}")
