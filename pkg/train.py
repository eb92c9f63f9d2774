"""
Loss functions, gradients, and optimization for classification and VQE tasks.
"""
from collections import namedtuple
from dataclasses import dataclass
from enum import Enum
import logging
from pathlib import Path

import numpy as np
from tqdm import tqdm

from circuit import (
    Hamiltonian,
    ROTATION_AXES,
    apply_hamiltonian_batch,
    apply_local,
    embed_batch,
    expectation_batch,
    run_batch,
)
from constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_LEARNING_RATE,
    DEFAULT_OPTIMIZER,
    DEFAULT_STEPS,
    FD_STEP,
    OPTIMIZER_NOT_FOUND_MSG,
    PARAM_SHIFT,
)
from errors import DimensionError, DivergenceError
from optimizers import *  # noqa: F401,F403 -- registers the optimizers
from qmath import pauli_matrix
from store import OPTIMIZER_REGISTRY
from utils import make_rng, write_csv

logger = logging.getLogger(__name__)

TraceRow = namedtuple("TraceRow", ["step", "loss", "metric"])


class GradMethod(str, Enum):
    PARAM_SHIFT = "param-shift"
    FINITE_DIFF = "finite-diff"
    ADJOINT = "adjoint"


@dataclass
class Dataset:
    """
    Binary-labelled feature vectors.

    Parameters
    ----------
    features : numpy.ndarray of shape (samples, features)
    labels : numpy.ndarray of shape (samples,)
        Values in {0, 1}.
    name : str
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if self.features.shape[0] != self.labels.shape[0]:
            raise DimensionError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("Labels must be 0 or 1")

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, index):
        return Dataset(self.features[index], self.labels[index], self.name)

    def embed(self, num_qubits):
        return embed_batch(self.features, num_qubits)

    @classmethod
    def from_csv(cls, path, name=None):
        """Rows of ``feature_1, ..., feature_F, label``; ``#`` lines are comments."""
        table = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
        return cls(table[:, :-1], table[:, -1].astype(int), name or Path(path).stem)

    def to_csv(self, path):
        table = np.column_stack([self.features, self.labels])
        fmt = ["%.10g"] * self.features.shape[1] + ["%d"]
        np.savetxt(path, table, delimiter=",", fmt=fmt)


class Objective:
    """
    Loss built from per-sample expectation values of one observable.

    Parameters
    ----------
    states : numpy.ndarray of shape (batch, 2**n)
        Initial states.
    observable : Hamiltonian
    """

    metric_name = "metric"

    def __init__(self, states, observable):
        self.states = np.atleast_2d(states)
        self.observable = observable
        if self.states.shape[1] != 2**observable.num_qubits:
            raise DimensionError("Initial states and observable act on different registers")

    @property
    def num_qubits(self):
        return self.observable.num_qubits

    def __len__(self):
        return self.states.shape[0]

    def values(self, circuit):
        """Per-sample <psi_s|U^dag O U|psi_s>."""
        if circuit.num_qubits != self.num_qubits:
            raise DimensionError(
                f"Circuit has {circuit.num_qubits} qubits, objective has {self.num_qubits}"
            )
        return expectation_batch(run_batch(circuit, self.states), self.observable)

    def reduce(self, values):
        raise NotImplementedError

    def reduce_grad(self, values):
        """dL/dvalues."""
        raise NotImplementedError

    def measure(self, values):
        raise NotImplementedError

    def __call__(self, circuit):
        return self.reduce(self.values(circuit))

    def evaluate(self, circuit):
        """(loss, metric) from one forward pass."""
        values = self.values(circuit)
        return self.reduce(values), self.measure(values)

    def metric(self, circuit):
        return self.measure(self.values(circuit))

    def minibatch(self, size, rng):
        return self

    def reference_states(self, size, rng):
        raise NotImplementedError


class ClassificationObjective(Objective):
    """
    Mean squared error between <Z_0> and the label mapped to +1 (label 0) / -1 (label 1).

    Predicted label is 1 iff <Z_0> < 0.
    """

    metric_name = "accuracy"

    def __init__(self, dataset, num_qubits, states=None):
        if states is None:
            states = dataset.embed(num_qubits)
        super().__init__(states, Hamiltonian.single(num_qubits, "Z", 0))
        self.dataset = dataset
        self.targets = 1.0 - 2.0 * dataset.labels

    def reduce(self, values):
        return float(np.mean((values - self.targets) ** 2))

    def reduce_grad(self, values):
        return 2.0 * (values - self.targets) / len(values)

    def measure(self, values):
        return float(np.mean((values < 0) == (self.dataset.labels == 1)))

    def subset(self, index):
        return ClassificationObjective(self.dataset.subset(index), self.num_qubits, self.states[index])

    def minibatch(self, size, rng):
        if size is None or size >= len(self):
            return self
        return self.subset(np.sort(rng.choice(len(self), size=size, replace=False)))

    def reference_states(self, size, rng):
        return self.minibatch(size, rng).states


class VQEObjective(Objective):
    """Energy of U|0...0> under a Hamiltonian."""

    metric_name = "energy"

    def __init__(self, hamiltonian):
        zero = np.zeros((1, 2**hamiltonian.num_qubits), dtype=complex)
        zero[0, 0] = 1.0
        super().__init__(zero, hamiltonian)

    def reduce(self, values):
        return float(np.mean(values))

    def reduce_grad(self, values):
        return np.full(len(values), 1.0 / len(values))

    def measure(self, values):
        return self.reduce(values)

    def reference_states(self, size, rng):
        # no training data: Haar-random states stand in for the data manifold
        dim = 2**self.num_qubits
        amps = rng.standard_normal((size, dim)) + 1j * rng.standard_normal((size, dim))
        return amps / np.linalg.norm(amps, axis=1, keepdims=True)


def loss_classify(circuit, dataset):
    """(mean squared error, accuracy) of the <Z_0> readout."""
    return ClassificationObjective(dataset, circuit.num_qubits).evaluate(circuit)


def loss_vqe(circuit, H):
    return VQEObjective(H)(circuit)


def _shifted(circuit, gate, delta):
    return circuit.replace_gates({gate.id: gate.replace(theta=gate.theta + delta)})


def _shift_derivatives(circuit, objective, gates):
    weights = objective.reduce_grad(objective.values(circuit))
    out = {}
    for gate in gates:
        plus = objective.values(_shifted(circuit, gate, PARAM_SHIFT))
        minus = objective.values(_shifted(circuit, gate, -PARAM_SHIFT))
        out[gate.id] = float(np.dot(weights, (plus - minus) / 2.0))
    return out


def _adjoint_derivatives(circuit, objective, wanted):
    n = circuit.num_qubits
    phi = run_batch(circuit, objective.states)
    values = expectation_batch(phi, objective.observable)
    weights = objective.reduce_grad(values)
    lam = apply_hamiltonian_batch(phi, objective.observable) * weights[:, np.newaxis]
    out = {}
    for gate in reversed(circuit.gates):
        if gate.id in wanted:
            mu = -0.5j * apply_local(phi, pauli_matrix(gate.axis), gate.qubits, n)
            out[gate.id] = float(2.0 * np.sum(np.einsum("bi,bi->b", lam.conj(), mu).real))
        inverse = gate.unitary().conj().T
        phi = apply_local(phi, inverse, gate.qubits, n)
        lam = apply_local(lam, inverse, gate.qubits, n)
    return out


def _fd_derivatives(circuit, objective, gates):
    out = {}
    for gate in gates:
        out[gate.id] = (
            objective(_shifted(circuit, gate, FD_STEP)) - objective(_shifted(circuit, gate, -FD_STEP))
        ) / (2 * FD_STEP)
    return out


def rotation_derivatives(circuit, objective, method, gate_ids=None):
    """
    dL/dtheta for individual rotation gates, each treated as an independent parameter.

    Parameters
    ----------
    gate_ids : iterable of int, optional
        Restrict to these gates; defaults to every rotation.

    Returns
    -------
    dict
        gate id -> derivative.
    """
    method = GradMethod(method)
    gates = [g for g in circuit.gates if g.kind in ROTATION_AXES]
    if gate_ids is not None:
        wanted = set(gate_ids)
        gates = [g for g in gates if g.id in wanted]
    if not gates:
        return {}
    if method == GradMethod.ADJOINT:
        return _adjoint_derivatives(circuit, objective, {g.id for g in gates})
    if method == GradMethod.PARAM_SHIFT:
        return _shift_derivatives(circuit, objective, gates)
    return _fd_derivatives(circuit, objective, gates)


def _fd_parameter(circuit, objective, values, index):
    step = np.zeros_like(values)
    step[index] = FD_STEP
    plus = objective(circuit.with_parameter_values(values + step))
    minus = objective(circuit.with_parameter_values(values - step))
    return (plus - minus) / (2 * FD_STEP)


def grad(circuit, objective, method=GradMethod.PARAM_SHIFT):
    """
    Gradient over ``circuit.parameters()``.

    PARAM_SHIFT and ADJOINT differentiate every rotation gate separately and sum the
    derivatives over tie groups; FINITE_DIFF perturbs each trainable parameter as a
    whole. GENERIC coefficients always use central finite differences.
    """
    method = GradMethod(method)
    params = circuit.parameters()
    values = circuit.parameter_values()
    out = np.zeros(len(params))
    if method == GradMethod.FINITE_DIFF:
        for k in range(len(params)):
            out[k] = _fd_parameter(circuit, objective, values, k)
        return out
    derivs = rotation_derivatives(circuit, objective, method)
    for k, p in enumerate(params):
        if p.pattern is None:
            out[k] = sum(derivs[gid] for gid in p.gate_ids)
        else:
            out[k] = _fd_parameter(circuit, objective, values, k)
    return out


@dataclass
class TrainConfig:
    steps: int = DEFAULT_STEPS
    learning_rate: float = DEFAULT_LEARNING_RATE
    optimizer: str = DEFAULT_OPTIMIZER
    batch_size: int = DEFAULT_BATCH_SIZE
    seed: int = 0
    grad_method: GradMethod = GradMethod.ADJOINT
    progress: bool = False

    def __post_init__(self):
        self.grad_method = GradMethod(self.grad_method)
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


def make_optimizer(name, learning_rate):
    if name not in OPTIMIZER_REGISTRY:
        raise ValueError(f"Optimizer '{name}' is not registered. {OPTIMIZER_NOT_FOUND_MSG}")
    return OPTIMIZER_REGISTRY[name](learning_rate)


def finetune(circuit, objective, config):
    """
    Run ``config.steps`` optimizer steps on mini-batches.

    Returns
    -------
    (Circuit, list of TraceRow)
        The trained circuit and the per-step loss/metric on the full objective;
        row 0 is the starting point.

    Raises
    ------
    DivergenceError
        If the loss becomes NaN or infinite.
    """
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    rng = make_rng(config.seed)
    params = circuit.parameter_values()
    loss, metric = objective.evaluate(circuit)
    trace = [TraceRow(0, loss, metric)]
    if config.steps == 0 or params.size == 0:
        return circuit, trace
    logger.info(
        f"Training {params.size} parameters for {config.steps} steps with {optimizer} "
        f"(lr={config.learning_rate}, {config.grad_method.value})"
    )
    current = circuit
    for step in tqdm(range(1, config.steps + 1), disable=not config.progress):
        batch = objective.minibatch(config.batch_size, rng)
        g = grad(current, batch, config.grad_method)
        if not np.all(np.isfinite(g)):
            raise DivergenceError(step, trace[-1].loss)
        params = optimizer.step(params, g)
        current = circuit.with_parameter_values(params)
        loss, metric = objective.evaluate(current)
        if not np.isfinite(loss):
            raise DivergenceError(step, trace[-1].loss)
        trace.append(TraceRow(step, loss, metric))
    logger.info(f"Training finished: loss {trace[0].loss:.6f} -> {trace[-1].loss:.6f}, "
                f"{objective.metric_name} {trace[0].metric:.4f} -> {trace[-1].metric:.4f}")
    return current, trace


def write_trace(path, trace, metric_name="metric"):
    rows = [{"step": r.step, "loss": r.loss, metric_name: r.metric} for r in trace]
    write_csv(path, ["step", "loss", metric_name], rows)
