import numpy as np
import pytest

from hvlab.distribution import OutcomeDistribution, bitstrings


def test_bitstrings_order():
    assert bitstrings(2) == ["00", "01", "10", "11"]


def test_exact_must_normalize():
    with pytest.raises(ValueError):
        OutcomeDistribution(1, {"0": 0.5})
    with pytest.raises(ValueError):
        OutcomeDistribution(1, {"0": 1.5, "1": -0.5})
    with pytest.raises(ValueError):
        OutcomeDistribution(2, {"0": 1.0})


def test_from_counts_array_and_mapping_agree():
    a = OutcomeDistribution.from_counts(np.array([3, 0, 1, 0]))
    b = OutcomeDistribution.from_counts({"00": 3, "10": 1})
    assert a == b
    assert a["00"] == 0.75 and a["01"] == 0.0 and a.n_samples == 4
    assert sum(a.probs.values()) == 1.0


def test_zero_counts_rejected():
    with pytest.raises(ValueError):
        OutcomeDistribution.from_counts(np.zeros(4, dtype=int))


def test_save_load(tmp_path):
    d = OutcomeDistribution.from_counts({"01": 7, "11": 3})
    d.save(tmp_path / "d.json")
    assert OutcomeDistribution.load(tmp_path / "d.json") == d
    e = OutcomeDistribution(2, {"00": 0.5, "11": 0.5})
    e.save(tmp_path / "e.json")
    assert OutcomeDistribution.load(tmp_path / "e.json") == e


def test_array_round_trip():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(OutcomeDistribution.from_array(p).to_array(), p)
