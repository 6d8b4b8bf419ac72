"""Layered hidden-variable circuits over polarization angles.

A model holds one angle per wire.  Angles are polarization axes, so they
live on the circle ``[0, pi)`` and every layer result is wrapped back onto
it.  Layers come in three kinds:

* ``InitLayer``: fixes angles, or draws one uniform angle per shared group
  and copies it to every wire of the group;
* ``GateLayer``: a deterministic map of the angles;
* ``KickLayer``: adds an independent Lorentz-distributed kick to each
  listed wire.

The model ends in a ``MeasurementLayer``.  When ``constrained`` is set, a
wire is read as 0 only if it sits within ``tolerance`` of its analyzer
axis, as 1 only if it sits within ``tolerance`` of the orthogonal axis,
and the whole trial is FAILED otherwise.  The unconstrained readout bins
each wire to the nearer axis.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

PI = math.pi
HALF_PI = PI / 2


class _Failed(enum.Enum):
    FAILED = "FAILED"

    def __repr__(self):
        return "FAILED"


FAILED = _Failed.FAILED
SampleResult = Union[str, _Failed]


def wrap(angles):
    """Map angles onto ``[0, pi)``."""
    r = np.mod(angles, PI)
    return np.where(r >= PI, 0.0, r)


def axis_distance(phi, theta):
    """Distance between two polarization axes, in ``[0, pi/2]``."""
    psi = wrap(np.asarray(phi) - np.asarray(theta))
    return np.minimum(psi, PI - psi)


# ---------------------------------------------------------------- kicks


def normalization_constant(width: float, truncation: float) -> float:
    """Factor that renormalizes a Lorentz density cut off at ``|kick| <= 1/truncation``."""
    if width <= 0 or truncation <= 0:
        raise ValueError("width and truncation must both be positive")
    return 1.0 / ((2 / PI) * math.atan(1.0 / (truncation * width)))


@dataclass(frozen=True)
class KickParams:
    """Kick width and optional symmetric cutoff ``|kick| <= 1/truncation``.

    ``truncation`` of ``None`` or 0 means a plain Lorentz distribution.
    """

    width: float
    truncation: float | None = None

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"kick width must be positive, got {self.width}")
        if self.truncation is not None and self.truncation < 0:
            raise ValueError("truncation must be >= 0")

    @property
    def truncated(self) -> bool:
        return bool(self.truncation)

    @property
    def cutoff(self) -> float:
        return 1.0 / self.truncation if self.truncated else math.inf

    @property
    def norm(self) -> float:
        return normalization_constant(self.width, self.truncation) if self.truncated else 1.0

    @property
    def half_range(self) -> float:
        # inverse-CDF argument lives in (-half_range, half_range)
        return math.atan(self.cutoff / self.width) / PI if self.truncated else 0.5

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        dens = self.norm * self.width / (PI * (self.width**2 + x**2))
        return np.where(np.abs(x) <= self.cutoff, dens, 0.0)

    def to_dict(self) -> dict:
        return {"width": self.width, "truncation": self.truncation}


def sample_kick(params: KickParams, rng: np.random.Generator, size=None):
    """Draw kicks by inverting the (truncated) Lorentz CDF."""
    a = params.half_range
    v = rng.uniform(-a, a, size=size)
    return params.width * np.tan(PI * v)


# ---------------------------------------------------------------- layers


@dataclass(frozen=True)
class Fixed:
    angle: float


@dataclass(frozen=True)
class SharedRandom:
    group_id: int


InitSpec = Union[Fixed, SharedRandom]


class DeterministicGate:
    """Base class for gate layers; subclasses map an ``(n, wires)`` angle array.

    ``linear_action`` returns ``(target, coefficients, offset)`` meaning
    ``angles[:, target] = angles @ coefficients + offset`` for gates that are
    integer-linear in the angles, or ``None`` for anything else.  Only
    gates with a linear action can use the conditional rejection sampler.
    """

    def touched(self) -> tuple[int, ...]:
        return ()

    def apply(self, angles: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def linear_action(self, n_wires: int):
        return None


@dataclass(frozen=True)
class Identity(DeterministicGate):
    def apply(self, angles):
        return angles

    def linear_action(self, n_wires):
        return ()


@dataclass(frozen=True)
class AddConstant(DeterministicGate):
    """Rotate one wire: ``phi[wire] += angle``."""

    wire: int
    angle: float

    def touched(self):
        return (self.wire,)

    def apply(self, angles):
        out = angles.copy()
        out[..., self.wire] = wrap(out[..., self.wire] + self.angle)
        return out

    def linear_action(self, n_wires):
        coef = np.zeros(n_wires, dtype=np.int64)
        coef[self.wire] = 1
        return ((self.wire, coef, self.angle),)


@dataclass(frozen=True)
class AddControlToTarget(DeterministicGate):
    """CNOT stand-in: ``phi[target] += phi[control]``."""

    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("control and target must differ")

    def touched(self):
        return (self.control, self.target)

    def apply(self, angles):
        out = angles.copy()
        out[..., self.target] = wrap(out[..., self.target] + out[..., self.control])
        return out

    def linear_action(self, n_wires):
        coef = np.zeros(n_wires, dtype=np.int64)
        coef[self.target] = 1
        coef[self.control] += 1
        return ((self.target, coef, 0.0),)


@dataclass(frozen=True)
class InitLayer:
    assignments: tuple[tuple[int, InitSpec], ...]

    def __post_init__(self):
        object.__setattr__(self, "assignments", tuple((int(w), s) for w, s in self.assignments))

    def touched(self):
        return tuple(w for w, _ in self.assignments)

    def groups(self) -> list[int]:
        seen: list[int] = []
        for _, spec in self.assignments:
            if isinstance(spec, SharedRandom) and spec.group_id not in seen:
                seen.append(spec.group_id)
        return seen


@dataclass(frozen=True)
class GateLayer:
    gate: DeterministicGate

    def touched(self):
        return self.gate.touched()


@dataclass(frozen=True)
class KickLayer:
    wires: tuple[int, ...]
    params: KickParams

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))

    def touched(self):
        return self.wires


Layer = Union[InitLayer, GateLayer, KickLayer]


@dataclass(frozen=True)
class MeasurementLayer:
    angles: tuple[float, ...]
    tolerance: float = 0.0
    constrained: bool = True

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.constrained and self.tolerance >= PI / 4:
            raise ValueError("tolerance must be < pi/4 so the two windows do not overlap")


@dataclass(frozen=True)
class HVModel:
    n_wires: int
    layers: tuple[Layer, ...]
    measurement: MeasurementLayer

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.n_wires < 1:
            raise ValueError("n_wires must be positive")
        for layer in self.layers:
            if isinstance(layer, MeasurementLayer):
                raise ValueError("the measurement layer goes in `measurement`, not `layers`")
            bad = [w for w in layer.touched() if not 0 <= w < self.n_wires]
            if bad:
                raise ValueError(f"{type(layer).__name__} uses wires {bad} outside 0..{self.n_wires - 1}")
        if len(self.measurement.angles) != self.n_wires:
            raise ValueError("measurement needs one angle per wire")

    @property
    def n_layers(self) -> int:
        """Layer count including the final measurement."""
        return len(self.layers) + 1

    def kick_layers(self) -> list[KickLayer]:
        return [l for l in self.layers if isinstance(l, KickLayer)]

    def with_measurement(self, **changes) -> "HVModel":
        m = self.measurement
        fields = {"angles": m.angles, "tolerance": m.tolerance, "constrained": m.constrained}
        fields.update(changes)
        return HVModel(self.n_wires, self.layers, MeasurementLayer(**fields))

    def to_dict(self) -> dict:
        return model_to_dict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "HVModel":
        return model_from_dict(d)


@dataclass
class HVState:
    angles: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.angles = wrap(np.asarray(self.angles, dtype=float))

    @classmethod
    def zeros(cls, n_wires: int) -> "HVState":
        return cls(np.zeros(n_wires))


# ---------------------------------------------------------------- mechanics


def apply_layer_batch(angles: np.ndarray, layer: Layer, rng: np.random.Generator) -> np.ndarray:
    """Apply ``layer`` to every row of an ``(n_trials, n_wires)`` array."""
    n = angles.shape[0]
    out = angles.copy()
    if isinstance(layer, InitLayer):
        groups = layer.groups()
        draws = rng.uniform(0.0, PI, size=(n, len(groups)))
        for w, spec in layer.assignments:
            if isinstance(spec, Fixed):
                out[:, w] = spec.angle
            else:
                out[:, w] = draws[:, groups.index(spec.group_id)]
    elif isinstance(layer, GateLayer):
        out = layer.gate.apply(out)
    elif isinstance(layer, KickLayer):
        w = list(layer.touched())
        out[:, w] += sample_kick(layer.params, rng, size=(n, len(w)))
    else:
        raise TypeError(f"not a layer: {layer!r}")
    return wrap(out)


def apply_layer(state: HVState, layer: Layer, rng: np.random.Generator) -> HVState:
    angles = np.asarray(state.angles, dtype=float)
    for w in layer.touched():
        if not 0 <= w < angles.size:
            raise IndexError(f"wire {w} out of range for a {angles.size}-wire state")
    return HVState(apply_layer_batch(angles[None, :], layer, rng)[0])


def propagate(model: HVModel, rng: np.random.Generator, n_trials: int) -> np.ndarray:
    """Final angles of ``n_trials`` independent runs, shape ``(n_trials, n_wires)``."""
    angles = np.zeros((n_trials, model.n_wires))
    for layer in model.layers:
        angles = apply_layer_batch(angles, layer, rng)
    return angles


def readout(angles: np.ndarray, m: MeasurementLayer) -> tuple[np.ndarray, np.ndarray]:
    """Bits and an acceptance mask for an ``(n, wires)`` angle array.

    Failed rows are flagged False in the mask; their bits are meaningless.
    """
    d = axis_distance(angles, np.asarray(m.angles))
    if not m.constrained:
        return (d >= PI / 4).astype(np.int8), np.ones(angles.shape[0], dtype=bool)
    tol = m.tolerance
    zero = (d < tol) | (d == 0)
    one = (np.abs(d - HALF_PI) < tol) | (d == HALF_PI)
    return one.astype(np.int8), np.all(zero | one, axis=1)


def measure(state: HVState, m: MeasurementLayer) -> SampleResult:
    bits, ok = readout(np.asarray(state.angles, dtype=float)[None, :], m)
    if not ok[0]:
        return FAILED
    return "".join(str(int(b)) for b in bits[0])


def bits_to_index(bits: np.ndarray) -> np.ndarray:
    """Row-wise bit arrays to integer outcome indices (wire 0 most significant)."""
    n = bits.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return bits.astype(np.int64) @ weights


# ---------------------------------------------------------------- affine form


@dataclass(frozen=True)
class AffineForm:
    """Final angles as an integer-linear function of the random inputs.

    ``phi = U @ uniform_coef.T + K @ kick_coef.T + offset (mod pi)`` where
    ``U`` holds one uniform draw per shared group and ``K`` one draw per
    (kick layer, wire) pair.
    """

    uniform_coef: np.ndarray  # (n_wires, n_uniform)
    kick_coef: np.ndarray  # (n_wires, n_kicks)
    offset: np.ndarray  # (n_wires,)
    kick_params: tuple[KickParams, ...]


def affine_form(model: HVModel) -> AffineForm | None:
    """Compile ``model`` to an ``AffineForm``; ``None`` if some gate is not linear."""
    n = model.n_wires
    rows_u: list[dict[int, int]] = [dict() for _ in range(n)]
    rows_k: list[dict[int, int]] = [dict() for _ in range(n)]
    offset = np.zeros(n)
    n_u = 0
    kick_params: list[KickParams] = []
    for layer in model.layers:
        if isinstance(layer, InitLayer):
            ids = {g: n_u + i for i, g in enumerate(layer.groups())}
            n_u += len(ids)
            for w, spec in layer.assignments:
                rows_k[w] = {}
                if isinstance(spec, Fixed):
                    rows_u[w], offset[w] = {}, spec.angle
                else:
                    rows_u[w], offset[w] = {ids[spec.group_id]: 1}, 0.0
        elif isinstance(layer, KickLayer):
            for w in layer.touched():
                rows_k[w] = dict(rows_k[w])
                rows_k[w][len(kick_params)] = rows_k[w].get(len(kick_params), 0) + 1
                kick_params.append(layer.params)
        else:
            actions = layer.gate.linear_action(n)
            if actions is None:
                return None
            for target, coef, const in actions:
                new_u: dict[int, int] = {}
                new_k: dict[int, int] = {}
                new_off = const
                for src, c in enumerate(coef):
                    if c == 0:
                        continue
                    for v, a in rows_u[src].items():
                        new_u[v] = new_u.get(v, 0) + int(c) * a
                    for v, a in rows_k[src].items():
                        new_k[v] = new_k.get(v, 0) + int(c) * a
                    new_off += int(c) * offset[src]
                rows_u[target] = {v: a for v, a in new_u.items() if a}
                rows_k[target] = {v: a for v, a in new_k.items() if a}
                offset[target] = new_off
    U = np.zeros((n, n_u), dtype=np.int64)
    K = np.zeros((n, len(kick_params)), dtype=np.int64)
    for w in range(n):
        for v, a in rows_u[w].items():
            U[w, v] = a
        for v, a in rows_k[w].items():
            K[w, v] = a
    return AffineForm(U, K, wrap(offset), tuple(kick_params))


# ---------------------------------------------------------------- JSON


def _gate_to_dict(g: DeterministicGate) -> dict:
    if isinstance(g, AddConstant):
        return {"op": "add_constant", "wire": g.wire, "angle": g.angle}
    if isinstance(g, AddControlToTarget):
        return {"op": "add_control_to_target", "control": g.control, "target": g.target}
    if isinstance(g, Identity):
        return {"op": "identity"}
    raise TypeError(f"gate {g!r} has no JSON form")


def _gate_from_dict(d: dict) -> DeterministicGate:
    op = d["op"]
    if op == "add_constant":
        return AddConstant(int(d["wire"]), float(d["angle"]))
    if op == "add_control_to_target":
        return AddControlToTarget(int(d["control"]), int(d["target"]))
    if op == "identity":
        return Identity()
    raise ValueError(f"unknown gate op {op!r}")


def model_to_dict(model: HVModel) -> dict:
    layers = []
    for layer in model.layers:
        if isinstance(layer, InitLayer):
            items = []
            for w, spec in layer.assignments:
                if isinstance(spec, Fixed):
                    items.append({"wire": w, "fixed": spec.angle})
                else:
                    items.append({"wire": w, "group": spec.group_id})
            layers.append({"kind": "init", "assignments": items})
        elif isinstance(layer, GateLayer):
            layers.append({"kind": "gate", **_gate_to_dict(layer.gate)})
        else:
            layers.append({"kind": "kick", "wires": list(layer.touched()), **layer.params.to_dict()})
    m = model.measurement
    return {
        "n_wires": model.n_wires,
        "layers": layers,
        "measurement": {"angles": list(m.angles), "tolerance": m.tolerance, "constrained": m.constrained},
    }


def model_from_dict(d: dict) -> HVModel:
    layers: list[Layer] = []
    for item in d["layers"]:
        kind = item["kind"]
        if kind == "init":
            assignments = []
            for a in item["assignments"]:
                spec = Fixed(float(a["fixed"])) if "fixed" in a else SharedRandom(int(a["group"]))
                assignments.append((int(a["wire"]), spec))
            layers.append(InitLayer(tuple(assignments)))
        elif kind == "gate":
            layers.append(GateLayer(_gate_from_dict(item)))
        elif kind == "kick":
            layers.append(KickLayer(item["wires"], KickParams(float(item["width"]), item.get("truncation"))))
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    m = d["measurement"]
    meas = MeasurementLayer(tuple(m["angles"]), float(m.get("tolerance", 0.0)), bool(m.get("constrained", True)))
    return HVModel(int(d["n_wires"]), tuple(layers), meas)


def load_model(path: str | Path) -> HVModel:
    return model_from_dict(json.loads(Path(path).read_text()))
