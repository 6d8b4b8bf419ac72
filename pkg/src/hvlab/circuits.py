"""Paired quantum / hidden-variable builds of the three example systems.

Each builder returns the quantum circuit, its input bits and the matching
hidden-variable model.  Analyzer rotations are folded into the state on
both sides: the quantum circuit applies ``RY(-2 theta)`` before a
computational-basis measurement, and the hidden-variable model subtracts
``theta`` from the polarization and measures at angle 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

from .hvmodel import (
    AddConstant,
    AddControlToTarget,
    Fixed,
    GateLayer,
    HVModel,
    InitLayer,
    KickLayer,
    KickParams,
    MeasurementLayer,
    SharedRandom,
)
from .qsim import CNOT, RY, BellPrep, QuantumCircuit, X

Deltas = Union[float, Sequence[float]]


def as_deltas(deltas: Deltas) -> tuple[float, float, float]:
    """``(delta_phi_L, delta_phi_M, delta_alpha)``; a scalar sets all three."""
    if isinstance(deltas, (int, float)):
        deltas = (deltas,) * 3
    out = tuple(float(x) for x in deltas)
    if len(out) != 3:
        raise ValueError(f"need three deltas, got {len(out)}")
    if any(x < 0 for x in out):
        raise ValueError(f"deltas must be non-negative, got {out}")
    return out


@dataclass(frozen=True)
class CircuitPair:
    id: str
    quantum: QuantumCircuit
    input_bits: str
    hv: HVModel
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.hv.n_wires != self.quantum.n_qubits:
            raise ValueError("hidden-variable and quantum sides disagree on the wire count")

    @property
    def deltas(self) -> tuple[float, float, float]:
        return tuple(self.params["deltas"])

    def causal(self) -> HVModel:
        """The same model with the measurement constraint dropped."""
        return self.hv.with_measurement(constrained=False)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "params": dict(self.params),
            "quantum": self.quantum.to_dict(self.input_bits),
            "hv": self.hv.to_dict(),
        }


def _kick(wires, deltas) -> KickLayer:
    width, _, alpha = deltas
    return KickLayer(tuple(wires), KickParams(width, alpha or None))


def _measure(n: int, deltas) -> MeasurementLayer:
    return MeasurementLayer((0.0,) * n, deltas[1], constrained=True)


def _rotations(thetas) -> list[GateLayer]:
    return [GateLayer(AddConstant(w, -t)) for w, t in enumerate(thetas) if t != 0]


def build_malus(x: int = 0, theta2: float = 0.0, deltas: Deltas = 1e-3,
                extra_kick: bool = False) -> CircuitPair:
    """One photon prepared at ``x * pi/2`` and analyzed at ``theta2``."""
    if x not in (0, 1):
        raise ValueError("x must be a bit")
    d = as_deltas(deltas)
    gates = (RY(0, -2 * theta2),)
    quantum = QuantumCircuit(1, gates)
    layers = [InitLayer(((0, Fixed(x * math.pi / 2)),)), _kick([0], d)]
    if extra_kick:
        layers.append(_kick([0], d))
    layers += _rotations([theta2])
    hv = HVModel(1, layers, _measure(1, d))
    params = {"x": x, "theta2": theta2, "deltas": list(d), "extra_kick": extra_kick}
    return CircuitPair("malus", quantum, str(x), hv, params)


def build_epr(theta1: float = 0.0, theta2: float = 0.0, deltas: Deltas = 1e-3,
              kicks: int = 2) -> CircuitPair:
    """A Bell pair analyzed at ``theta1`` and ``theta2``.

    ``kicks`` is the number of wires that get a kick layer (2 by default,
    1 keeps only wire 1's).
    """
    if kicks not in (1, 2):
        raise ValueError("kicks must be 1 or 2")
    d = as_deltas(deltas)
    quantum = QuantumCircuit(2, (BellPrep(0, 1), RY(0, -2 * theta1), RY(1, -2 * theta2)))
    layers = [InitLayer(((0, SharedRandom(0)), (1, SharedRandom(0))))]
    layers.append(_kick([0, 1] if kicks == 2 else [1], d))
    layers += _rotations([theta1, theta2])
    hv = HVModel(2, layers, _measure(2, d))
    params = {"theta1": theta1, "theta2": theta2, "deltas": list(d), "kicks": kicks}
    return CircuitPair("epr", quantum, "00", hv, params)


def build_double_bell_cnot(thetas: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
                           deltas: Deltas = 1e-3) -> CircuitPair:
    """Two Bell pairs (0,1) and (2,3) joined by a CNOT from qubit 1 to qubit 2.

    On the hidden-variable side the CNOT becomes ``phi_2 += phi_1``.  Layer
    order: init, CNOT trick, kicks, rotations, measurement.
    """
    thetas = tuple(float(t) for t in thetas)
    if len(thetas) != 4:
        raise ValueError("need four analyzer angles")
    d = as_deltas(deltas)
    gates = [BellPrep(0, 1), BellPrep(2, 3), CNOT(1, 2)]
    gates += [RY(q, -2 * t) for q, t in enumerate(thetas)]
    quantum = QuantumCircuit(4, gates)
    layers = [
        InitLayer(((0, SharedRandom(0)), (1, SharedRandom(0)), (2, SharedRandom(1)), (3, SharedRandom(1)))),
        GateLayer(AddControlToTarget(1, 2)),
        _kick(range(4), d),
    ]
    layers += _rotations(thetas)
    hv = HVModel(4, layers, _measure(4, d))
    params = {"thetas": list(thetas), "deltas": list(d)}
    return CircuitPair("double_bell_cnot", quantum, "0000", hv, params)


BUILDERS = {
    "malus": build_malus,
    "epr": build_epr,
    "double_bell_cnot": build_double_bell_cnot,
}


def build(circuit_id: str, deltas: Deltas = 1e-3, **params) -> CircuitPair:
    """Build by id.  ``double_bell_cnot`` also accepts ``theta1``..``theta4``."""
    if circuit_id not in BUILDERS:
        raise ValueError(f"unknown circuit {circuit_id!r}; choose from {sorted(BUILDERS)}")
    if circuit_id == "double_bell_cnot" and "thetas" not in params:
        named = [params.pop(f"theta{i}", 0.0) for i in range(1, 5)]
        params["thetas"] = named
    return BUILDERS[circuit_id](deltas=deltas, **params)
