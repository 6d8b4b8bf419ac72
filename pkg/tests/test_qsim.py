import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hvlab.qsim import CNOT, RY, BellPrep, H, QuantumCircuit, X, load_circuit, outcome_distribution, prepare, sample


def test_ry_matches_malus():
    for theta in np.linspace(0, math.pi, 9):
        d = outcome_distribution(QuantumCircuit(1, (RY(0, -2 * theta),)), "0")
        assert d["0"] == pytest.approx(math.cos(theta) ** 2, abs=1e-12)


def test_bell_pair_is_perfectly_correlated():
    d = outcome_distribution(QuantumCircuit(2, (BellPrep(0, 1),)), "00")
    assert d.probs == pytest.approx({"00": 0.5, "11": 0.5})


def test_epr_same_probability():
    # analyzer rotations by theta1, theta2 on a Bell pair: P(same) = cos^2(theta1 - theta2)
    for t1, t2 in [(0, math.pi / 8), (0, math.pi / 4), (0.3, 1.1)]:
        c = QuantumCircuit(2, (BellPrep(0, 1), RY(0, -2 * t1), RY(1, -2 * t2)))
        assert outcome_distribution(c, "00").marginal_same() == pytest.approx(math.cos(t1 - t2) ** 2)


def test_qubit_zero_is_most_significant():
    assert outcome_distribution(QuantumCircuit(3, (X(0),)), "000").probs == {"100": 1.0}
    assert outcome_distribution(QuantumCircuit(3, (X(2),)), "000").probs == {"001": 1.0}


def test_cnot_truth_table():
    c = QuantumCircuit(2, (CNOT(0, 1),))
    for inp, out in [("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")]:
        assert outcome_distribution(c, inp).probs == {out: 1.0}
    c = QuantumCircuit(3, (CNOT(2, 0),))
    assert outcome_distribution(c, "001").probs == {"101": 1.0}


def test_double_bell_with_cnot_support():
    c = QuantumCircuit(4, (BellPrep(0, 1), BellPrep(2, 3), CNOT(1, 2)))
    d = outcome_distribution(c, "0000")
    assert d.probs == pytest.approx({"0000": 0.25, "0011": 0.25, "1101": 0.25, "1110": 0.25})


def test_h_twice_is_identity():
    psi = prepare(QuantumCircuit(1, (H(0), H(0))), "1")
    assert np.allclose(psi, [0, 1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.floats(-4, 4)), max_size=6), st.integers(0, 2), st.integers(0, 2))
def test_norm_preserved(rys, c, t):
    gates = [RY(q, a) for q, a in rys] + [H(0)]
    if c != t:
        gates.append(CNOT(c, t))
    psi = prepare(QuantumCircuit(3, gates), "010")
    assert np.linalg.norm(psi) == pytest.approx(1.0)


def test_validation():
    with pytest.raises(ValueError):
        QuantumCircuit(0)
    with pytest.raises(ValueError):
        QuantumCircuit(21)
    with pytest.raises(ValueError):
        QuantumCircuit(2, (CNOT(1, 1),))
    with pytest.raises(ValueError):
        QuantumCircuit(2, (RY(2, 0.1),))
    with pytest.raises(ValueError):
        outcome_distribution(QuantumCircuit(2), "0")


def test_sample_is_seeded_and_close():
    c = QuantumCircuit(1, (RY(0, -2 * math.pi / 3),))
    a = sample(c, "0", 5, 100_000)
    assert a == sample(c, "0", 5, 100_000)
    assert a["0"] == pytest.approx(0.25, abs=0.005)
    assert a.n_samples == 100_000


def test_json_round_trip(tmp_path):
    c = QuantumCircuit(4, (BellPrep(0, 1), CNOT(1, 2), RY(3, 0.25), H(2), X(0)))
    path = tmp_path / "c.json"
    import json

    path.write_text(json.dumps(c.to_dict("0101")))
    back, bits = load_circuit(path)
    assert back == c and bits == "0101"
