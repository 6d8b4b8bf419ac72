"""Malus' law and EPR correlations from a polarization hidden-variable model.

A photon's polarization is a hidden angle.  It gets a Lorentz kick on the
way to the analyzer, and the run is kept only if the angle ends up aligned
with one of the analyzer's two axes.  That post-selection is enough to
reproduce the quantum statistics.
"""

import math

from hvlab import circuits, samplers
from hvlab.metrics import additive_error
from hvlab.qsim import outcome_distribution

PI = math.pi

# --- One photon, analyzer at theta ---
print("theta    P(0) model   cos^2(theta)   acceptance")
for theta in (0.0, PI / 6, PI / 4, PI / 3):
    pair = circuits.build_malus(0, theta, deltas=1e-3)
    rep = samplers.run_rejection(pair.hv, rng_seed=1, n_accepted_target=50_000)
    print(f"{theta:5.3f}    {rep.distribution['0']:.4f}       {math.cos(theta) ** 2:.4f}         {rep.acceptance_rate:.2e}")

# --- Two photons sharing one hidden angle ---
# With the window constraint the pair reproduces P(same) = cos^2(theta1 - theta2).
# Without it (the causal variant) each photon is binned on its own and the
# correlation falls to the linear 1 - 2|theta1 - theta2|/pi.
print("\ntheta2   quantum   post-selected   causal")
for theta2 in (0.0, PI / 8, PI / 4):
    pair = circuits.build_epr(0.0, theta2, deltas=1e-3)
    q = outcome_distribution(pair.quantum, pair.input_bits)
    nl = samplers.run_rejection(pair.hv, 2, 50_000, max_trials=10**15)
    c = samplers.run_sequential(pair.causal(), 3, 50_000)
    print(f"{theta2:5.3f}    {q.marginal_same():.4f}    {nl.distribution.marginal_same():.4f}          "
          f"{c.distribution.marginal_same():.4f}")

pair = circuits.build_epr(0.0, PI / 8, deltas=1e-3)
c = samplers.run_sequential(pair.causal(), 3, 100_000)
print(f"\ncausal additive error at pi/8: {additive_error(c.distribution, outcome_distribution(pair.quantum, '00')):.3f}")
