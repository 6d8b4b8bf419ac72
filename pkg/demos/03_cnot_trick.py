"""Two Bell pairs linked by a CNOT, in both descriptions.

On the hidden-variable side the CNOT becomes "add the control's angle to
the target's".  With every analyzer at 0 this matches the quantum circuit.
Tilting the middle analyzers breaks the agreement, which the scan below
shows setting by setting.
"""

import math

from hvlab import circuits, samplers
from hvlab.qsim import outcome_distribution

PI = math.pi

pair = circuits.build_double_bell_cnot((0, 0, 0, 0), deltas=1e-3)
q = outcome_distribution(pair.quantum, pair.input_bits)
rep = samplers.run_rejection(pair.hv, 7, 40_000, max_trials=10**15)
print("outcome  quantum  model")
for y in sorted(set(q.probs) | set(rep.distribution.probs)):
    print(f"{y}     {q[y]:.3f}    {rep.distribution[y]:.3f}")

grid = [[0, 0, 0, 0], [0, PI / 8, 0, 0], [PI / 8, 0, 0, PI / 8], [0, PI / 4, PI / 4, 0]]
print()
print(samplers.divergence_scan(grid, 1e-2, rng_seed=8, n_accepted=5_000, max_trials=10**12))
