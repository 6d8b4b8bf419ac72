"""Exact conditional sampler for constrained hidden-variable models.

Plain rejection sampling draws every random input from its prior and keeps
the trial only when each wire lands inside a measurement window.  With
kick widths and tolerances around 1e-3 the acceptance probability drops to
1e-6 .. 1e-8, far too low to brute-force.

This module draws from the same conditional law directly.  The model is
compiled to its affine form (final angles are integer combinations of the
uniform initial draws and the kicks, mod pi).  A *pivot* is a variable
entering one wire with coefficient +-1; it can be drawn conditionally on
that wire landing in its window:

* a uniform pivot puts the wire uniformly inside the windows, with
  probability ``4 * tol / pi`` of doing so under the prior;
* a kick pivot is drawn from the wrapped Lorentz law restricted to the two
  arcs that map into the windows, by exact inverse CDF.

Proposals come from an equal mixture over maximal pivot assignments, and a
final accept/reject step with ratio ``target / proposal`` (bounded by
``R``) makes the accepted draws exactly distributed as accepted trials of
plain rejection.  The number of real trials behind each proposal is
Geometric(``R``), so accepted/rejected counts have the same law as well.

Kicks are handled on the circle: only the value mod pi affects the
dynamics.  Truncation enters through the ratio of the truncated to the
untruncated wrapped density of each pivot kick.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, polygamma

from .hvmodel import HALF_PI, PI, AffineForm, KickParams, MeasurementLayer, axis_distance, wrap

# explicit sums beyond this many periods switch to the polygamma tail formula
_EXPLICIT_TERMS = 64


def centered(x):
    """Map angles onto ``[-pi/2, pi/2)``."""
    return np.mod(np.asarray(x) + HALF_PI, PI) - HALF_PI


# ---------------------------------------------------------------- wrapped Lorentz


def wrapped_pdf(x, width: float):
    """Density of a width-``width`` Lorentz kick reduced mod pi."""
    s = np.sin(x)
    sh = math.sinh(width)
    return math.sinh(2 * width) / (2 * PI * (sh * sh + s * s))


def wrapped_sample(width: float, rng: np.random.Generator, size):
    v = rng.uniform(-0.5, 0.5, size=size)
    return np.arctan(math.tanh(width) * np.tan(PI * v))


def arc_mass(lo, hi, width: float):
    """Wrapped-Lorentz probability of the arc ``[lo, hi]`` (length below pi)."""
    c = 1.0 / math.tanh(width)
    num = c * np.sin(hi - lo)
    den = np.cos(hi) * np.cos(lo) + c * c * np.sin(hi) * np.sin(lo)
    return np.arctan2(num, den) / PI


def arc_sample(lo, hi, width: float, t):
    """Point of the arc ``[lo, hi]`` below which a fraction ``t`` of its mass lies."""
    c = 1.0 / math.tanh(width)
    h_lo = np.arctan2(c * np.sin(lo), np.cos(lo))
    alpha = h_lo + t * PI * arc_mass(lo, hi, width)
    return centered(np.arctan2(np.sin(alpha), c * np.cos(alpha)))


def truncation_ratio(x, params: KickParams):
    """Truncated over untruncated wrapped density at ``x`` (both normalized)."""
    if not params.truncated:
        return np.ones_like(np.asarray(x, dtype=float))
    return params.norm * _kept_fraction(np.asarray(x, dtype=float), params.width, params.cutoff)


def _kept_fraction(x, width, cutoff):
    """Fraction of the wrapped density at ``x`` coming from kicks with ``|kick| <= cutoff``."""
    fw = wrapped_pdf(x, width)
    pref = width / PI
    n_periods = cutoff / PI
    if n_periods <= _EXPLICIT_TERMS:
        n = np.arange(-math.ceil(n_periods) - 1, math.ceil(n_periods) + 2)
        y = x[..., None] + n * PI
        terms = np.where(np.abs(y) <= cutoff, pref / (width**2 + y**2), 0.0)
        return terms.sum(axis=-1) / fw
    # sum over |x + n pi| > cutoff via 1/(y^2+w^2) = 1/y^2 - w^2/y^4 + O(w^4/y^6)
    n_hi = np.floor((cutoff - x) / PI) + 1
    n_lo = np.floor((cutoff + x) / PI) + 1
    a_hi = n_hi + x / PI
    a_lo = n_lo - x / PI
    tail = 0.0
    for a in (a_hi, a_lo):
        tail = tail + polygamma(1, a) / PI**2 - width**2 * polygamma(3, a) / (6 * PI**4)
    return 1.0 - pref * tail / fw


# ---------------------------------------------------------------- pivots


@dataclass(frozen=True)
class Pivot:
    wire: int
    kind: str  # "u" or "k"
    var: int
    sign: int


def _wire_vars(form: AffineForm, w: int) -> set[tuple[str, int]]:
    out = {("u", int(v)) for v in np.nonzero(form.uniform_coef[w])[0]}
    out |= {("k", int(v)) for v in np.nonzero(form.kick_coef[w])[0]}
    return out


def _order(assign: dict[int, tuple[str, int]], wire_vars) -> list[int] | None:
    """Processing order for pivoted wires, or None if the assignment is cyclic."""
    wires = list(assign)
    after: dict[int, set[int]] = {w: set() for w in wires}
    for j in wires:
        for i in wires:
            if i != j and assign[j] in wire_vars[i]:
                after[j].add(i)  # j must run before i
    order: list[int] = []
    indeg = {w: 0 for w in wires}
    for j in wires:
        for i in after[j]:
            indeg[i] += 1
    ready = sorted(w for w in wires if indeg[w] == 0)
    while ready:
        j = ready.pop(0)
        order.append(j)
        for i in sorted(after[j]):
            indeg[i] -= 1
            if indeg[i] == 0:
                ready.append(i)
        ready.sort()
    return order if len(order) == len(wires) else None


def pivot_sets(form: AffineForm, max_sets: int = 64, max_enum: int = 200_000) -> list[tuple[Pivot, ...]]:
    """Maximal pivot assignments, preferring uniform pivots.

    Each returned tuple is already in a valid processing order.
    """
    n = form.offset.size
    wire_vars = [_wire_vars(form, w) for w in range(n)]
    cands: list[list[tuple[str, int] | None]] = []
    for w in range(n):
        c: list[tuple[str, int] | None] = []
        c += [("u", int(v)) for v in np.nonzero(np.abs(form.uniform_coef[w]) == 1)[0]]
        c += [("k", int(v)) for v in np.nonzero(np.abs(form.kick_coef[w]) == 1)[0]]
        cands.append(c + [None])
    total = math.prod(len(c) for c in cands)
    if total > max_enum:
        cands = [c[:1] + [None] if c[0] is not None else c for c in cands]
    best: list[tuple[tuple[int, int], tuple[Pivot, ...]]] = []
    for combo in itertools.product(*cands):
        assign = {w: v for w, v in enumerate(combo) if v is not None}
        if len(set(assign.values())) != len(assign):
            continue
        order = _order(assign, wire_vars)
        if order is None:
            continue
        pivots = []
        for w in order:
            kind, var = assign[w]
            coef = form.uniform_coef if kind == "u" else form.kick_coef
            pivots.append(Pivot(w, kind, var, int(coef[w, var])))
        score = (len(assign), sum(1 for k, _ in assign.values() if k == "u"))
        best.append((score, tuple(pivots)))
    top = max(s for s, _ in best)
    return [p for s, p in best if s == top][:max_sets]


# ---------------------------------------------------------------- sampler


@dataclass
class ProposalBatch:
    outcomes: np.ndarray  # outcome index per proposal
    ratio: np.ndarray  # target/proposal density ratio; 0 where the trial fails


class ConditionalSampler:
    """Draws proposals and target/proposal ratios for one compiled model."""

    def __init__(self, form: AffineForm, measurement: MeasurementLayer):
        if not measurement.constrained or measurement.tolerance <= 0:
            raise ValueError("conditional sampling needs a constrained measurement with tolerance > 0")
        self.form = form
        self.tol = float(measurement.tolerance)
        self.shift = wrap(form.offset - np.asarray(measurement.angles))
        self.n_wires = form.offset.size
        self.n_uniform = form.uniform_coef.shape[1]
        self.n_kicks = form.kick_coef.shape[1]
        self.sets = pivot_sets(form)
        self.uniform_weight = 4 * self.tol / PI
        self.pivot_kicks = sorted({p.var for s in self.sets for p in s if p.kind == "k"})

    # psi_j = shift_j + U @ A_j + K @ B_j ; acceptance is psi near 0 or pi/2
    def _psi(self, u, k):
        return wrap(self.shift + u @ self.form.uniform_coef.T + k @ self.form.kick_coef.T)

    def _window_arcs(self, rest, sign):
        """Arc centres (in the pivot's own coordinate) for windows 0 and pi/2."""
        return centered(sign * (0.0 - rest)), centered(sign * (HALF_PI - rest))

    def _kick_weight(self, rest, sign, params: KickParams):
        a0, a1 = self._window_arcs(rest, sign)
        w = params.width
        m0 = arc_mass(a0 - self.tol, a0 + self.tol, w)
        m1 = arc_mass(a1 - self.tol, a1 + self.tol, w)
        return m0, m1

    def propose(self, rng: np.random.Generator, size: int) -> ProposalBatch:
        comp = rng.integers(len(self.sets), size=size)
        u = rng.uniform(0.0, PI, size=(size, self.n_uniform))
        k = np.empty((size, self.n_kicks))
        for j, params in enumerate(self.form.kick_params):
            # non-pivot kicks come straight from the truncated prior
            k[:, j] = centered(_draw_kick(params, rng, size))
        window = np.full((size, self.n_wires), -1, dtype=np.int8)
        for c, pivots in enumerate(self.sets):
            rows = np.nonzero(comp == c)[0]
            if rows.size == 0:
                continue
            uc, kc, wc = u[rows], k[rows], window[rows]
            for p in pivots:
                if p.kind == "u":
                    uc[:, p.var] = 0.0
                else:
                    kc[:, p.var] = 0.0
            for p in pivots:
                rest = self._psi(uc, kc)[:, p.wire]
                side = rng.integers(2, size=rows.size)
                if p.kind == "u":
                    target = side * HALF_PI + rng.uniform(-self.tol, self.tol, size=rows.size)
                    uc[:, p.var] = wrap(p.sign * (target - rest))
                else:
                    params = self.form.kick_params[p.var]
                    m0, m1 = self._kick_weight(rest, p.sign, params)
                    side = (rng.uniform(size=rows.size) * (m0 + m1) >= m0).astype(np.int8)
                    a0, a1 = self._window_arcs(rest, p.sign)
                    a = np.where(side == 1, a1, a0)
                    kc[:, p.var] = arc_sample(a - self.tol, a + self.tol, params.width,
                                              rng.uniform(size=rows.size))
                wc[:, p.wire] = side
            u[rows], k[rows], window[rows] = uc, kc, wc
        return self._evaluate(u, k, window)

    def _evaluate(self, u, k, window) -> ProposalBatch:
        psi = self._psi(u, k)
        d = axis_distance(psi, 0.0)
        free_zero = d < self.tol
        free_one = np.abs(d - HALF_PI) < self.tol
        # pivoted wires keep the window they were drawn into; rounding at the
        # window edge must not flip them
        bits = np.where(window >= 0, window, free_one.astype(np.int8))
        ok = np.all((window >= 0) | free_zero | free_one, axis=1)

        tau = {v: truncation_ratio(k[:, v], self.form.kick_params[v]) for v in self.pivot_kicks}
        log_inv = np.empty((len(self.sets), psi.shape[0]))
        for c, pivots in enumerate(self.sets):
            lw = np.zeros(psi.shape[0])
            for p in pivots:
                if p.kind == "u":
                    lw += math.log(self.uniform_weight)
                else:
                    rest = psi[:, p.wire] - p.sign * k[:, p.var]
                    m0, m1 = self._kick_weight(rest, p.sign, self.form.kick_params[p.var])
                    with np.errstate(divide="ignore"):
                        lw += np.log(m0 + m1) + np.log(tau[p.var])
            log_inv[c] = -lw
        log_ratio = math.log(len(self.sets)) - logsumexp(log_inv, axis=0)
        ratio = np.where(ok, np.exp(log_ratio), 0.0)
        weights = 1 << np.arange(self.n_wires - 1, -1, -1, dtype=np.int64)
        return ProposalBatch(bits.astype(np.int64) @ weights, ratio)


def _draw_kick(params: KickParams, rng, size):
    a = params.half_range
    return params.width * np.tan(PI * rng.uniform(-a, a, size=size))
