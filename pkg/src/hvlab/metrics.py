"""Sampling-error metrics and the post-selection toolkit.

Additive error is the plain sum ``sum_y |C(y) - D(y)|`` (twice the total
variation distance; it is never halved here).  Multiplicative error is the
worst per-outcome ratio deviation and is undefined when ``C`` puts mass
where ``D`` has none.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from .distribution import EMPIRICAL, OutcomeDistribution

Z95 = 1.959963984540054
MAX_LEMMA_BITS = 12
FAILED_BIT = -1

BitSampler = Callable[[np.random.Generator, int], np.ndarray]


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"
    PREMISE_FAILED = "premise_failed"


class UndefinedConditioning(ValueError):
    pass


def _same_width(c: OutcomeDistribution, d: OutcomeDistribution) -> None:
    if c.n_bits != d.n_bits:
        raise ValueError(f"distributions have {c.n_bits} and {d.n_bits} bits")


def additive_error(c: OutcomeDistribution, d: OutcomeDistribution) -> float:
    _same_width(c, d)
    keys = set(c.probs) | set(d.probs)
    return float(sum(abs(c.probs.get(y, 0.0) - d.probs.get(y, 0.0)) for y in keys))


@dataclass(frozen=True)
class Multiplicative:
    """Result of :func:`multiplicative_error`; ``value`` is None when undefined."""

    value: float | None
    support_violation: frozenset[str] = frozenset()

    @property
    def defined(self) -> bool:
        return self.value is not None


def multiplicative_error(c: OutcomeDistribution, d: OutcomeDistribution) -> Multiplicative:
    _same_width(c, d)
    bad = frozenset(y for y, p in c.probs.items() if p > 0 and d.probs.get(y, 0) == 0)
    if bad:
        return Multiplicative(None, bad)
    worst = 0.0
    for y, q in d.probs.items():
        if q > 0:
            worst = max(worst, abs(c.probs.get(y, 0.0) / q - 1))
    return Multiplicative(float(worst))


def wilson_radius(k, n: int, z: float = Z95):
    """Half-width of the Wilson score interval for ``k`` successes in ``n``."""
    k = np.asarray(k, dtype=float)
    p = k / n
    return z / (1 + z * z / n) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))


def additive_error_radius(c: OutcomeDistribution, d: OutcomeDistribution | None = None) -> float:
    """95% radius for the additive error of an empirical ``c``: summed per-outcome Wilson radii.

    Sums over the union of both supports; zero when ``c`` is exact.
    """
    if c.kind != EMPIRICAL or not c.n_samples:
        return 0.0
    keys = set(c.probs) | (set(d.probs) if d is not None else set())
    n = c.n_samples
    counts = [round(c.probs.get(y, 0.0) * n) for y in sorted(keys)]
    return float(np.sum(wilson_radius(counts, n)))


def verdict(value: float, radius: float, epsilon: float) -> Verdict:
    if value + radius <= epsilon:
        return Verdict.HOLDS
    if value - radius > epsilon:
        return Verdict.FAILS
    return Verdict.INCONCLUSIVE


@dataclass
class ErrorReport:
    additive: float
    multiplicative: Multiplicative
    n_samples: int | None = None
    additive_ci95: float = 0.0

    @classmethod
    def compare(cls, c: OutcomeDistribution, d: OutcomeDistribution) -> "ErrorReport":
        return cls(additive_error(c, d), multiplicative_error(c, d), c.n_samples,
                   additive_error_radius(c, d))

    def additive_verdict(self, epsilon: float) -> Verdict:
        return verdict(self.additive, self.additive_ci95, epsilon)

    def to_dict(self) -> dict:
        m = self.multiplicative
        return {
            "additive": self.additive,
            "additive_ci95": self.additive_ci95,
            "multiplicative": m.value if m.defined else "UNDEFINED",
            "support_violation": sorted(m.support_violation),
            "n_samples": self.n_samples,
        }


# ---------------------------------------------------------------- conditioning


def _split_key(k: int, b: int, y_prime: str, n_bits: int) -> str:
    if len(y_prime) == n_bits:
        y_prime = y_prime[:k] + y_prime[k + 1:]
    if len(y_prime) != n_bits - 1 or any(ch not in "01" for ch in y_prime):
        raise ValueError(f"y' must list the other {n_bits - 1} bits, got {y_prime!r}")
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    return y_prime[:k] + str(b) + y_prime[k:]


def conditioned_probability(d: OutcomeDistribution, k: int, b: int, y_prime: str):
    """P(bit k = b | the other bits equal ``y_prime``).

    ``y_prime`` lists the remaining bits in order; a full-length string is
    also accepted and its bit ``k`` ignored.  Arithmetic follows the stored
    probability type, so ``Fraction`` entries give exact results.
    """
    if not 0 <= k < d.n_bits:
        raise ValueError(f"bit index {k} out of range")
    num = d.probs.get(_split_key(k, b, y_prime, d.n_bits), 0)
    den = d.probs.get(_split_key(k, 0, y_prime, d.n_bits), 0) + d.probs.get(_split_key(k, 1, y_prime, d.n_bits), 0)
    if den == 0:
        raise UndefinedConditioning(f"no mass on bit {k} with other bits {y_prime!r}")
    return num / den


def lemma_epsilon_prime(eps: float) -> float:
    if not 0 <= eps < 1:
        raise ValueError("epsilon must lie in [0, 1)")
    return 2 * eps / (1 - eps)


def lemma_epsilon_from_prime(eps_prime: float) -> float:
    if eps_prime < 0:
        raise ValueError("epsilon' must be non-negative")
    return eps_prime / (2 + eps_prime)


@dataclass
class LemmaResult:
    verdict: Verdict
    bound: float
    worst: tuple[int, int, str] | None = None
    worst_gap: float = 0.0
    checked: int = 0
    premise: Multiplicative | None = None

    @property
    def margin(self) -> float:
        return self.bound - self.worst_gap

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "bound": self.bound,
            "worst": list(self.worst) if self.worst else None,
            "worst_gap": self.worst_gap,
            "margin": self.margin,
            "checked": self.checked,
        }


def check_lemma_instance(d: OutcomeDistribution, c: OutcomeDistribution, eps: float,
                         *, slack: float = 1e-12) -> LemmaResult:
    """Check that a multiplicative-ε pair also has ε'-close conditionals.

    The premise (``C`` within multiplicative ε of ``D``) is checked first.
    Then every defined (k, b, y') is enumerated.  ``slack`` absorbs float
    rounding on both comparisons.
    """
    _same_width(c, d)
    if d.n_bits > MAX_LEMMA_BITS:
        raise ValueError(f"enumeration is capped at {MAX_LEMMA_BITS} bits")
    bound = lemma_epsilon_prime(eps)
    premise = multiplicative_error(c, d)
    if not premise.defined or premise.value > eps + slack:
        return LemmaResult(Verdict.PREMISE_FAILED, bound, premise=premise)
    n = d.n_bits
    worst, gap, checked = None, -math.inf, 0
    for k in range(n):
        for rest in itertools.product("01", repeat=n - 1):
            y_prime = "".join(rest)
            try:
                pd = conditioned_probability(d, k, 1, y_prime)
                pc = conditioned_probability(c, k, 1, y_prime)
            except UndefinedConditioning:
                continue
            # the b=0 gap equals the b=1 gap since both pairs sum to one
            for b, g in ((0, abs((1 - pc) - (1 - pd))), (1, abs(pc - pd))):
                checked += 1
                if g > gap:
                    worst, gap = (k, b, y_prime), g
    if worst is None:
        return LemmaResult(Verdict.HOLDS, bound, None, 0.0, 0, premise)
    v = Verdict.HOLDS if gap <= bound + slack else Verdict.FAILS
    return LemmaResult(v, bound, worst, float(gap), checked, premise)


# ---------------------------------------------------------------- amplification


def majority_amplify(decider: BitSampler, m: int, *, chunk: int = 8192) -> BitSampler:
    """Sampler returning the majority of ``m`` independent decider draws.

    Deciders are vectorized: ``decider(rng, size)`` returns an int array of
    0, 1 or ``FAILED_BIT``.  One failed sub-draw fails the composite.
    """
    if m < 1 or m % 2 == 0:
        raise ValueError(f"repetition count must be odd and >= 1, got {m}")

    def amplified(rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.int8)
        for start in range(0, size, chunk):
            rows = min(chunk, size - start)
            draws = np.asarray(decider(rng, rows * m)).reshape(rows, m)
            maj = (draws == 1).sum(axis=1) > m // 2
            out[start:start + rows] = np.where((draws == FAILED_BIT).any(axis=1), FAILED_BIT, maj)
        return out

    return amplified


def majority_error(p_wrong: float, m: int) -> float:
    """Probability that the majority of ``m`` draws is wrong when each is wrong w.p. ``p_wrong``."""
    return float(stats.binom.sf(m // 2, m, p_wrong))


def post_select_decider(b_sampler: Callable[[np.random.Generator, int], np.ndarray]) -> BitSampler:
    """Turn a (y_sample, y_valid) sampler into a bit sampler that fails on invalid rows.

    ``b_sampler(rng, size)`` returns an array of shape ``(size, 2)``; a row
    containing ``FAILED_BIT`` is a failed draw of the underlying machine.
    """

    def decider(rng: np.random.Generator, size: int) -> np.ndarray:
        rows = np.asarray(b_sampler(rng, size)).reshape(size, 2)
        failed = (rows == FAILED_BIT).any(axis=1) | (rows[:, 1] == 0)
        return np.where(failed, FAILED_BIT, rows[:, 0]).astype(np.int8)

    return decider


def table_sampler(table: dict[tuple[int, int], float]) -> Callable[[np.random.Generator, int], np.ndarray]:
    """(y_sample, y_valid) sampler drawing rows from an explicit joint table."""
    keys = list(table)
    p = np.array([table[k] for k in keys], dtype=float)
    rows = np.array(keys, dtype=np.int8).reshape(len(keys), 2)

    def sampler(rng: np.random.Generator, size: int) -> np.ndarray:
        return rows[rng.choice(len(keys), size=size, p=p / p.sum())]

    return sampler


def bernoulli_decider(p_one: float, p_fail: float = 0.0) -> BitSampler:
    """Decider that outputs 1 w.p. ``p_one``, FAILED w.p. ``p_fail``, else 0."""

    def decider(rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return np.where(u < p_fail, FAILED_BIT, (u < p_fail + p_one).astype(np.int8)).astype(np.int8)

    return decider
