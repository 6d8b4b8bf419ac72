"""How the model approaches the quantum answer as the tolerances shrink.

All three parameters (kick width, window half-width, kick cutoff) go to
zero together.  The error falls, and so does the fraction of runs that
survive post-selection.  Because a surviving run needs both a kick of the
right size and a narrow window hit, the acceptance shrinks like the
product of kick width and window width.
"""

import math

import numpy as np

from hvlab import circuits, samplers

PI = math.pi
family = lambda d: circuits.build_malus(0, PI / 3, d)

schedule = [(d, d, d) for d in (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)]
rows = samplers.convergence_sweep(family, schedule, rng_seed=5, n_accepted=50_000, max_trials=10**15)
print(samplers.sweep_csv(rows))
print(f"acceptance slope, all deltas together: {samplers.acceptance_slope(rows):.2f}")

# --- Shrink only the window ---
tols = np.array([3e-2, 1e-2, 3e-3, 1e-3])
rates = [samplers.run_rejection(family((1e-3, t, 1e-3)).hv, 6, 20_000).acceptance_rate for t in tols]
slope = np.polyfit(np.log(tols), np.log(rates), 1)[0]
print(f"acceptance slope, window only:       {slope:.2f}")
