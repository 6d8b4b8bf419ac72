import json
import math

import numpy as np
import pytest

from hvlab import circuits
from hvlab.hvmodel import AddControlToTarget, GateLayer, KickLayer, model_from_dict
from hvlab.metrics import additive_error, additive_error_radius
from hvlab.qsim import QuantumCircuit, outcome_distribution
from hvlab.samplers import run_rejection

PI = math.pi
BIG_BUDGET = 10**15


def exact(pair):
    return outcome_distribution(pair.quantum, pair.input_bits)


def test_pairs_are_consistent():
    for pair in (circuits.build_malus(1, 0.3), circuits.build_epr(0.1, 0.2), circuits.build_double_bell_cnot((0, 0.1, 0.2, 0.3))):
        assert pair.hv.n_wires == pair.quantum.n_qubits
        assert pair.hv.measurement.constrained
        assert all(a == 0.0 for a in pair.hv.measurement.angles)
        assert not pair.causal().measurement.constrained


def test_deltas_parsing():
    assert circuits.as_deltas(0.1) == (0.1, 0.1, 0.1)
    assert circuits.as_deltas([1, 2, 3]) == (1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        circuits.as_deltas([1, 2])
    with pytest.raises(ValueError):
        circuits.as_deltas(-1)
    with pytest.raises(ValueError):
        circuits.build("teleport")


def test_malus_trivial_settings():
    for x in (0, 1):
        pair = circuits.build_malus(x, 0.0, 1e-3)
        assert exact(pair).probs == pytest.approx({str(x): 1.0})
        rep = run_rejection(pair.hv, 1, 20_000)
        assert rep.distribution[str(x)] > 0.999


def test_malus_limit_is_malus_law():
    assert exact(circuits.build_malus(0, PI / 3)).probs == pytest.approx({"0": 0.25, "1": 0.75})


def test_epr_limits():
    assert exact(circuits.build_epr(0.7, 0.7)).marginal_same() == pytest.approx(1.0)
    assert exact(circuits.build_epr(0, PI / 4)).marginal_same() == pytest.approx(0.5)
    assert exact(circuits.build_epr(0, PI / 8)).marginal_same() == pytest.approx(math.cos(PI / 8) ** 2)
    assert circuits.build_epr(0, PI / 8).hv.kick_layers()[0].wires == (0, 1)
    assert circuits.build_epr(0, PI / 8, kicks=1).hv.kick_layers()[0].wires == (1,)


def test_double_bell_quantum_support():
    d = exact(circuits.build_double_bell_cnot())
    assert d.support() == {"0000", "0011", "1101", "1110"}
    for y in d.support():
        # first pair agrees; qubit 2 is qubit 1 xor qubit 3
        assert y[0] == y[1] and int(y[2]) == int(y[1]) ^ int(y[3])


def test_double_bell_layer_order():
    layers = circuits.build_double_bell_cnot((0, 0, 0, 0.2)).hv.layers
    kinds = [type(l).__name__ for l in layers]
    assert kinds[:3] == ["InitLayer", "GateLayer", "KickLayer"]
    assert isinstance(layers[1].gate, AddControlToTarget)
    assert (layers[1].gate.control, layers[1].gate.target) == (1, 2)


def test_double_bell_hv_matches_at_zero_angles():
    pair = circuits.build_double_bell_cnot((0, 0, 0, 0), 0.01)
    rep = run_rejection(pair.hv, 2, 20_000)
    assert additive_error(rep.distribution, exact(pair)) < 0.05


@pytest.mark.parametrize("theta", np.linspace(0, PI / 2, 5))
def test_malus_pairing_on_angle_grid(theta):
    pair = circuits.build_malus(0, float(theta), 1e-3)
    rep = run_rejection(pair.hv, 3, 100_000)
    assert additive_error(rep.distribution, exact(pair)) < 0.05


@pytest.mark.parametrize("theta", np.linspace(0, PI / 2, 5))
def test_epr_pairing_on_angle_grid(theta):
    pair = circuits.build_epr(0.0, float(theta), 1e-3)
    rep = run_rejection(pair.hv, 4, 100_000, BIG_BUDGET)
    assert rep.accepted == 100_000
    assert additive_error(rep.distribution, exact(pair)) < 0.05


def test_second_kick_layer_is_irrelevant():
    for make in (lambda extra: circuits.build_malus(0, PI / 3, 1e-3, extra_kick=extra),
                 lambda extra: circuits.build_epr(0.0, PI / 8, 1e-3, kicks=1 if extra else 2)):
        a, b = make(False), make(True)
        ra = run_rejection(a.hv, 5, 100_000, BIG_BUDGET)
        rb = run_rejection(b.hv, 6, 100_000, BIG_BUDGET)
        ea, eb = additive_error(ra.distribution, exact(a)), additive_error(rb.distribution, exact(b))
        ci = additive_error_radius(ra.distribution, exact(a)) + additive_error_radius(rb.distribution, exact(b))
        assert abs(ea - eb) < 3 * ci


def test_pair_json_round_trip():
    pair = circuits.build_double_bell_cnot((0.1, 0.2, 0.3, 0.4), (0.01, 0.02, 0.03))
    d = json.loads(json.dumps(pair.to_dict()))
    assert model_from_dict(d["hv"]) == pair.hv
    assert QuantumCircuit.from_dict(d["quantum"]) == pair.quantum
    assert d["params"]["deltas"] == [0.01, 0.02, 0.03]
