"""Probability distributions over fixed-length bitstrings.

Bitstrings are written most-significant bit first, so character ``k`` of
the string is bit ``k`` and ``int(y, 2)`` is the index into the dense array
form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

EXACT = "exact"
EMPIRICAL = "empirical"


def bitstrings(n_bits: int) -> list[str]:
    return [format(i, f"0{n_bits}b") if n_bits else "" for i in range(2**n_bits)]


def _check_key(y: str, n_bits: int) -> None:
    if len(y) != n_bits or any(ch not in "01" for ch in y):
        raise ValueError(f"{y!r} is not a {n_bits}-bit string")


@dataclass(frozen=True)
class OutcomeDistribution:
    n_bits: int
    probs: Mapping[str, float]
    kind: str = EXACT
    n_samples: int | None = None
    counts: Mapping[str, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n_bits < 0:
            raise ValueError("n_bits must be non-negative")
        for y, p in self.probs.items():
            _check_key(y, self.n_bits)
            if p < 0:
                raise ValueError(f"negative probability {p} for {y}")
        if self.kind == EXACT:
            total = sum(self.probs.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"probabilities sum to {total}, expected 1")
        elif self.kind != EMPIRICAL:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def from_array(cls, probs: np.ndarray, n_bits: int | None = None, *, tol: float = 0.0):
        probs = np.asarray(probs, dtype=float)
        if n_bits is None:
            n_bits = int(round(np.log2(probs.size)))
        if probs.size != 2**n_bits:
            raise ValueError(f"array of size {probs.size} does not match {n_bits} bits")
        keys = bitstrings(n_bits)
        return cls(n_bits, {keys[i]: float(p) for i, p in enumerate(probs) if p > tol})

    @classmethod
    def from_counts(cls, counts: Mapping[str, int] | np.ndarray, n_bits: int | None = None):
        """Empirical frequencies; ``counts`` is a mapping or a dense count array."""
        if isinstance(counts, np.ndarray):
            if n_bits is None:
                n_bits = int(round(np.log2(counts.size)))
            keys = bitstrings(n_bits)
            counts = {keys[i]: int(c) for i, c in enumerate(counts) if c > 0}
        else:
            counts = {y: int(c) for y, c in counts.items() if c > 0}
            if n_bits is None:
                n_bits = len(next(iter(counts)))
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("cannot build an empirical distribution from zero samples")
        counts = dict(sorted(counts.items()))
        probs = {y: c / total for y, c in counts.items()}
        return cls(n_bits, probs, EMPIRICAL, total, counts)

    def __getitem__(self, y: str) -> float:
        _check_key(y, self.n_bits)
        return float(self.probs.get(y, 0.0))

    def to_array(self) -> np.ndarray:
        out = np.zeros(2**self.n_bits)
        for y, p in self.probs.items():
            out[int(y, 2) if y else 0] = p
        return out

    def support(self) -> set[str]:
        return {y for y, p in self.probs.items() if p > 0}

    def marginal_same(self) -> float:
        """Probability that all bits agree (00...0 or 11...1)."""
        return self["0" * self.n_bits] + self["1" * self.n_bits]

    def to_dict(self) -> dict:
        d = {"n_bits": self.n_bits, "probs": dict(sorted(self.probs.items()))}
        d["kind"] = self.kind
        if self.n_samples is not None:
            d["n_samples"] = self.n_samples
        if self.counts is not None:
            d["counts"] = dict(self.counts)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "OutcomeDistribution":
        kind = d.get("kind", EXACT)
        if d.get("counts"):
            return cls.from_counts(d["counts"], int(d["n_bits"]))
        return cls(int(d["n_bits"]), {str(k): float(v) for k, v in d["probs"].items()},
                   kind, d.get("n_samples"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "OutcomeDistribution":
        return cls.from_dict(json.loads(Path(path).read_text()))
