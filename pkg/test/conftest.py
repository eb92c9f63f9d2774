from functools import reduce

import numpy as np
import pytest

from circuit import Circuit, GateInstance, GateKind, Hamiltonian, StateVector, build_hea
from fsdist import ReferenceBatch
from train import Dataset, VQEObjective


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def dense_gate(gate, num_qubits):
    """Full-register matrix of a gate built by Kronecker products and a basis permutation."""
    rest = [q for q in range(num_qubits) if q not in gate.qubits]
    order = list(gate.qubits) + rest
    full = np.kron(gate.unitary(), np.eye(2 ** len(rest)))
    full = full.reshape((2,) * (2 * num_qubits))
    inverse = np.argsort(order)
    axes = list(inverse) + [num_qubits + i for i in inverse]
    return full.transpose(axes).reshape(2**num_qubits, 2**num_qubits)


def dense_circuit(circuit):
    """U of the whole circuit by multiplying dense gate matrices."""
    dim = 2**circuit.num_qubits
    return reduce(lambda acc, g: dense_gate(g, circuit.num_qubits) @ acc, circuit.gates, np.eye(dim, dtype=complex))


@pytest.fixture
def dense():
    return dense_circuit


def random_state(num_qubits, rng):
    amps = rng.standard_normal(2**num_qubits) + 1j * rng.standard_normal(2**num_qubits)
    return StateVector(amps / np.linalg.norm(amps))


@pytest.fixture
def state_factory(rng):
    return lambda n: random_state(n, rng)


@pytest.fixture
def plus_state():
    return StateVector(np.array([1.0, 1.0]) / np.sqrt(2))


@pytest.fixture
def refs_3q(rng):
    amps = rng.standard_normal((4, 8)) + 1j * rng.standard_normal((4, 8))
    return ReferenceBatch(amps / np.linalg.norm(amps, axis=1, keepdims=True), 3)


@pytest.fixture
def hea_3q():
    return build_hea(3, 2, seed=7)


@pytest.fixture
def ry_circuit():
    def make(theta):
        return Circuit(1, (GateInstance(0, GateKind.RY, (0,), theta),))

    return make


@pytest.fixture
def z_objective_1q():
    return VQEObjective(Hamiltonian.single(1, "Z", 0))


@pytest.fixture
def toy_dataset():
    features = np.array([[1.0, 0.1, 0.0, 0.0], [0.9, 0.0, 0.2, 0.0], [0.0, 0.1, 0.0, 1.0], [0.1, 0.0, 0.1, 0.9]])
    return Dataset(features, np.array([0, 0, 1, 1]), "toy")
