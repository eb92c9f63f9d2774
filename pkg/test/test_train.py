import numpy as np
import pytest

import train
from circuit import Circuit, GateInstance, GateKind, build_hea
from datasets import exact_ground_energy, gen_tfim
from errors import DimensionError, DivergenceError
from qmath import Generator, PauliString
from train import (
    ClassificationObjective,
    Dataset,
    GradMethod,
    TrainConfig,
    VQEObjective,
    finetune,
    grad,
    loss_classify,
    loss_vqe,
    make_optimizer,
    rotation_derivatives,
    write_trace,
)


@pytest.mark.parametrize("method", list(GradMethod))
def test_grad_of_ry_on_z(ry_circuit, z_objective_1q, method):
    theta = 0.7
    g = grad(ry_circuit(theta), z_objective_1q, method)
    assert g == pytest.approx([-np.sin(theta)], abs=1e-7)


def test_gradient_methods_agree_vqe(hea_3q):
    objective = VQEObjective(gen_tfim(3))
    shift = grad(hea_3q, objective, GradMethod.PARAM_SHIFT)
    adjoint = grad(hea_3q, objective, GradMethod.ADJOINT)
    fd = grad(hea_3q, objective, GradMethod.FINITE_DIFF)
    scale = np.linalg.norm(shift)
    assert np.linalg.norm(adjoint - shift) / scale <= 1e-10
    assert np.linalg.norm(fd - shift) / scale <= 1e-6


def test_gradient_methods_agree_classification(toy_dataset):
    circuit = build_hea(2, 2, seed=3)
    objective = ClassificationObjective(toy_dataset, 2)
    shift = grad(circuit, objective, GradMethod.PARAM_SHIFT)
    adjoint = grad(circuit, objective, GradMethod.ADJOINT)
    fd = grad(circuit, objective, GradMethod.FINITE_DIFF)
    assert adjoint == pytest.approx(shift, abs=1e-10)
    assert fd == pytest.approx(shift, abs=1e-7)


def test_tied_gradient_is_member_sum():
    gates = (
        GateInstance(0, GateKind.RY, (0,), 0.4, tie=0),
        GateInstance(1, GateKind.CNOT, (0, 1)),
        GateInstance(2, GateKind.RY, (1,), 0.4, tie=0),
        GateInstance(3, GateKind.RX, (0,), -0.9),
    )
    circuit = Circuit(2, gates)
    objective = VQEObjective(gen_tfim(2))
    members = rotation_derivatives(circuit, objective, GradMethod.ADJOINT)
    g = grad(circuit, objective, GradMethod.ADJOINT)
    assert g.shape == (2,)
    assert g[0] == pytest.approx(members[0] + members[2])
    assert g == pytest.approx(grad(circuit, objective, GradMethod.FINITE_DIFF), abs=1e-7)


def test_generic_gate_gradient_matches_finite_diff():
    gen = Generator.from_paulis((0, 1), [PauliString("XY", 0.3), PauliString("ZX", -0.2)])
    gates = (
        GateInstance(0, GateKind.RY, (1,), 0.5),
        GateInstance(1, GateKind.GENERIC, (0, 1), generator_override=gen),
    )
    circuit = Circuit(2, gates)
    objective = VQEObjective(gen_tfim(2))
    adjoint = grad(circuit, objective, GradMethod.ADJOINT)
    assert adjoint.shape == (3,)
    assert adjoint == pytest.approx(grad(circuit, objective, GradMethod.FINITE_DIFF), abs=1e-7)


def test_rotation_derivatives_subset(hea_3q):
    derivs = rotation_derivatives(hea_3q, VQEObjective(gen_tfim(3)), GradMethod.PARAM_SHIFT, [0, 4])
    assert sorted(derivs) == [0, 4]


def test_loss_classify_on_toy_set(toy_dataset):
    loss, accuracy = loss_classify(Circuit(2), toy_dataset)
    assert accuracy == 1.0
    assert 0.0 < loss < 0.01


def test_flipped_readout_misclassifies(toy_dataset):
    circuit = Circuit(2, (GateInstance(0, GateKind.RX, (0,), np.pi),))
    _, accuracy = loss_classify(circuit, toy_dataset)
    assert accuracy == 0.0


def test_vqe_loss_above_ground_energy():
    H = gen_tfim(4)
    e0 = exact_ground_energy(H)
    for seed in range(5):
        assert loss_vqe(build_hea(4, 2, seed=seed), H) >= e0 - 1e-9


def test_objective_dimension_mismatch(z_objective_1q, hea_3q):
    with pytest.raises(DimensionError):
        z_objective_1q(hea_3q)


def test_classification_minibatch(toy_dataset, rng):
    objective = ClassificationObjective(toy_dataset, 2)
    batch = objective.minibatch(2, rng)
    assert len(batch) == 2
    assert objective.minibatch(10, rng) is objective
    assert objective.reference_states(3, rng).shape == (3, 4)


def test_vqe_reference_states_are_normalized(z_objective_1q, rng):
    states = z_objective_1q.reference_states(5, rng)
    assert np.allclose(np.linalg.norm(states, axis=1), 1.0)


def test_finetune_zero_steps_is_identity(ry_circuit, z_objective_1q):
    circuit = ry_circuit(0.3)
    trained, trace = finetune(circuit, z_objective_1q, TrainConfig(steps=0))
    assert trained is circuit
    assert len(trace) == 1
    assert trace[0].loss == pytest.approx(np.cos(0.3))


@pytest.mark.parametrize("optimizer", ["gd", "momentum", "adam"])
def test_finetune_lowers_energy(ry_circuit, z_objective_1q, optimizer):
    config = TrainConfig(steps=40, learning_rate=0.1, optimizer=optimizer)
    _, trace = finetune(ry_circuit(0.3), z_objective_1q, config)
    assert len(trace) == 41
    assert trace[-1].loss < trace[0].loss


def test_finetune_divergence(ry_circuit, z_objective_1q, monkeypatch):
    monkeypatch.setattr(train, "grad", lambda *args, **kwargs: np.array([np.nan]))
    with pytest.raises(DivergenceError) as info:
        finetune(ry_circuit(0.3), z_objective_1q, TrainConfig(steps=5))
    assert info.value.step == 1
    assert info.value.last_finite_loss == pytest.approx(np.cos(0.3))


def test_make_optimizer_unknown():
    with pytest.raises(ValueError, match="register_optimizer"):
        make_optimizer("lbfgs", 0.1)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(steps=-1)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    assert TrainConfig(grad_method="finite-diff").grad_method == GradMethod.FINITE_DIFF


def test_dataset_csv(tmp_path, toy_dataset):
    path = tmp_path / "toy.csv"
    toy_dataset.to_csv(path)
    loaded = Dataset.from_csv(path)
    assert loaded.name == "toy"
    assert np.array_equal(loaded.labels, toy_dataset.labels)
    assert np.allclose(loaded.features, toy_dataset.features)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 2)), [0, 2])
    with pytest.raises(DimensionError):
        Dataset(np.ones((3, 2)), [0, 1])


def test_write_trace(tmp_path, ry_circuit, z_objective_1q):
    _, trace = finetune(ry_circuit(0.3), z_objective_1q, TrainConfig(steps=2))
    path = tmp_path / "trace.csv"
    write_trace(path, trace, "energy")
    lines = path.read_text().splitlines()
    assert lines[0] == "step,loss,energy"
    assert len(lines) == 4
