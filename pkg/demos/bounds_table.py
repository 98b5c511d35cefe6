"""
Upper bound against the lower bounds
====================================

For a range of correlation thresholds, print the bits the protocol spends
next to the lower bounds on any one-way or interactive protocol.
"""

import warnings

import numpy as np

from distcorr import print_bounds

warnings.simplefilter("ignore")

delta, eps = 0.05, 0.05
columns = ["upper_bits", "lb_oneway_eps", "lb_oneway_delta", "lb_ddim_eps", "lb_interactive"]

for d in (1, 8):
    print(f"\nd = {d}, delta = eps = {delta}")
    print(f"{'tau':>6}" + "".join(f"{c:>17}" for c in columns))
    for tau in np.linspace(0.2, 1.0, 5):
        rep = print_bounds(float(tau), delta, eps, d)
        print(f"{tau:6.2f}" + "".join(f"{rep[c]:17.4g}" for c in columns)
              + ("" if rep["consistent"] else "   inconsistent!"))

# In one dimension the gap is a constant factor. For d > 1 the upper bound
# also pays for the many repetitions that the default vote constants demand.
