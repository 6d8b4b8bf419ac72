"""Hidden-variable polarization models checked against a small quantum simulator."""

from .distribution import OutcomeDistribution
from .hvmodel import FAILED, HVModel
from .qsim import QuantumCircuit

__all__ = ["FAILED", "HVModel", "OutcomeDistribution", "QuantumCircuit"]
__version__ = "0.1.0"
