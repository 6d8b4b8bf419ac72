"""Dense statevector simulator for small circuits.

The gate set is deliberately tiny (RY, H, X, CNOT and a Bell-pair
preparation) and every circuit ends in a full computational-basis
measurement.  Qubit 0 is the most significant bit of a basis index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .distribution import EXACT, OutcomeDistribution, bitstrings
from .rng import split_evenly, stream

MAX_QUBITS = 20


@dataclass(frozen=True)
class RY:
    qubit: int
    angle: float


@dataclass(frozen=True)
class H:
    qubit: int


@dataclass(frozen=True)
class X:
    qubit: int


@dataclass(frozen=True)
class CNOT:
    control: int
    target: int


@dataclass(frozen=True)
class BellPrep:
    """H on ``qubit_a`` followed by CNOT(a, b)."""

    qubit_a: int
    qubit_b: int


GateOp = Union[RY, H, X, CNOT, BellPrep]

_SQRT1_2 = 1 / np.sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT1_2
_X = np.array([[0, 1], [1, 0]], dtype=complex)


def _ry(angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _qubits(g: GateOp) -> tuple[int, ...]:
    if isinstance(g, CNOT):
        return (g.control, g.target)
    if isinstance(g, BellPrep):
        return (g.qubit_a, g.qubit_b)
    return (g.qubit,)


@dataclass(frozen=True)
class QuantumCircuit:
    n_qubits: int
    gates: tuple[GateOp, ...] = ()

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            qs = _qubits(g)
            if any(not 0 <= q < self.n_qubits for q in qs):
                raise ValueError(f"{g} addresses a qubit outside 0..{self.n_qubits - 1}")
            if len(qs) == 2 and qs[0] == qs[1]:
                raise ValueError(f"{g} uses the same qubit twice")

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    def then(self, *gates: GateOp) -> "QuantumCircuit":
        return QuantumCircuit(self.n_qubits, self.gates + tuple(gates))

    def to_dict(self, input_bits: str | None = None) -> dict:
        d = {"n_qubits": self.n_qubits, "gates": [gate_to_dict(g) for g in self.gates]}
        if input_bits is not None:
            d["input"] = input_bits
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "QuantumCircuit":
        return cls(int(d["n_qubits"]), tuple(gate_from_dict(g) for g in d.get("gates", [])))


def gate_to_dict(g: GateOp) -> dict:
    if isinstance(g, RY):
        return {"op": "ry", "qubit": g.qubit, "angle": float(g.angle)}
    if isinstance(g, H):
        return {"op": "h", "qubit": g.qubit}
    if isinstance(g, X):
        return {"op": "x", "qubit": g.qubit}
    if isinstance(g, CNOT):
        return {"op": "cnot", "control": g.control, "target": g.target}
    return {"op": "bell", "qubit_a": g.qubit_a, "qubit_b": g.qubit_b}


def gate_from_dict(d: dict) -> GateOp:
    op = d["op"].lower()
    if op == "ry":
        return RY(int(d["qubit"]), float(d["angle"]))
    if op == "h":
        return H(int(d["qubit"]))
    if op == "x":
        return X(int(d["qubit"]))
    if op in ("cnot", "cx"):
        return CNOT(int(d["control"]), int(d["target"]))
    if op in ("bell", "bellprep"):
        return BellPrep(int(d["qubit_a"]), int(d["qubit_b"]))
    raise ValueError(f"unknown gate op {d['op']!r}")


def load_circuit(path: str | Path) -> tuple[QuantumCircuit, str]:
    """Read a JSON circuit file; returns the circuit and its input bitstring."""
    d = json.loads(Path(path).read_text())
    circuit = QuantumCircuit.from_dict(d)
    return circuit, d.get("input", "0" * circuit.n_qubits)


def _apply_1q(psi: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    psi = np.moveaxis(psi, q, 0)
    psi = np.tensordot(u, psi, axes=(1, 0))
    return np.moveaxis(psi, 0, q)


def _apply_cnot(psi: np.ndarray, c: int, t: int) -> np.ndarray:
    psi = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[c] = 1
    sub = psi[tuple(idx)]
    t_axis = t if t < c else t - 1
    psi[tuple(idx)] = np.flip(sub, axis=t_axis)
    return psi


def apply_gate(psi: np.ndarray, g: GateOp) -> np.ndarray:
    """Apply one gate to a state tensor of shape ``(2,) * n``."""
    if isinstance(g, RY):
        return _apply_1q(psi, _ry(g.angle), g.qubit)
    if isinstance(g, H):
        return _apply_1q(psi, _H, g.qubit)
    if isinstance(g, X):
        return _apply_1q(psi, _X, g.qubit)
    if isinstance(g, CNOT):
        return _apply_cnot(psi, g.control, g.target)
    if isinstance(g, BellPrep):
        return _apply_cnot(_apply_1q(psi, _H, g.qubit_a), g.qubit_a, g.qubit_b)
    raise TypeError(f"unsupported gate {g!r}")


def basis_state(n_qubits: int, input_bits: str) -> np.ndarray:
    if len(input_bits) != n_qubits or any(ch not in "01" for ch in input_bits):
        raise ValueError(f"input {input_bits!r} does not match {n_qubits} qubits")
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"at most {MAX_QUBITS} qubits are supported")
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[int(input_bits, 2)] = 1.0
    return psi


def prepare(circuit: QuantumCircuit, input_bits: str) -> np.ndarray:
    """Statevector (length ``2**n``) after running ``circuit`` on ``|input_bits>``."""
    n = circuit.n_qubits
    psi = basis_state(n, input_bits).reshape((2,) * n)
    for g in circuit.gates:
        psi = apply_gate(psi, g)
    return psi.reshape(-1)


def outcome_distribution(circuit: QuantumCircuit, input_bits: str) -> OutcomeDistribution:
    psi = prepare(circuit, input_bits)
    p = np.abs(psi) ** 2
    p /= p.sum()
    keys = bitstrings(circuit.n_qubits)
    # amplitudes that are zero analytically come out around 1e-33
    return OutcomeDistribution(circuit.n_qubits, {keys[i]: float(v) for i, v in enumerate(p) if v > 1e-15}, EXACT)


def sample(circuit: QuantumCircuit, input_bits: str, rng_seed: int, n_samples: int,
           workers: int = 1) -> OutcomeDistribution:
    """Empirical distribution of ``n_samples`` i.i.d. measurement outcomes."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    p = outcome_distribution(circuit, input_bits).to_array()
    counts = np.zeros(p.size, dtype=np.int64)
    for w, n_w in enumerate(split_evenly(n_samples, workers)):
        if n_w:
            counts += stream(rng_seed, w).multinomial(n_w, p)
    return OutcomeDistribution.from_counts(counts, circuit.n_qubits)
