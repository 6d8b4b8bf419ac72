"""Conditioned probabilities, the multiplicative-error lemma, and majority voting."""

from fractions import Fraction

import numpy as np

from hvlab.distribution import OutcomeDistribution
from hvlab.metrics import (
    bernoulli_decider, check_lemma_instance, conditioned_probability, majority_amplify, majority_error,
    post_select_decider, table_sampler,
)
from hvlab.rng import stream

# --- A machine that is valid only 8% of the time ---
joint = {(0, 1): 0.02, (1, 1): 0.06, (0, 0): 0.46, (1, 0): 0.46}
d = OutcomeDistribution(2, {f"{s}{v}": Fraction(p).limit_denominator(100) for (s, v), p in joint.items()})
print("P(sample = 1 | valid) =", conditioned_probability(d, 0, 1, "1"))

decider = post_select_decider(table_sampler(joint))
out = decider(stream(1), 200_000)
print("empirical:", np.mean(out[out >= 0] == 1).round(4))

# --- Multiplicatively close distributions have close conditionals ---
rng = np.random.default_rng(2)
p = rng.dirichlet(np.ones(8))
c = p * (1 + rng.uniform(-0.04, 0.04, 8))
c /= c.sum()
res = check_lemma_instance(OutcomeDistribution.from_array(p), OutcomeDistribution.from_array(c), 0.1)
print(f"lemma: {res.verdict.value}, worst gap {res.worst_gap:.4f} <= bound {res.bound:.4f}")

# --- Majority voting drives a 1/3 error rate down fast ---
for m in (1, 11, 51, 101):
    amp = majority_amplify(bernoulli_decider(1 / 3), m)
    emp = np.mean(amp(stream(3, m), 100_000) == 1)
    print(f"m = {m:3d}: exact {majority_error(1 / 3, m):.2e}, empirical {emp:.2e}")
