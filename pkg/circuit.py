"""
Circuit intermediate representation, hardware-efficient ansatz builder,
statevector simulation and observable expectation values.

Qubit 0 is the most significant bit of a basis-state index. Simulation kernels
work on ``(batch, 2**n)`` amplitude arrays; a single state is the batch-1 case.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
import json
import logging
from pathlib import Path

import numpy as np
import scipy.sparse

from constants import (
    IMAG_RESIDUE_TOL,
    MAX_QUBITS,
    MIN_HEA_QUBITS,
    NORM_TOL,
)
from errors import DimensionError, NormalizationError, NotParameterizedError
from qmath import Generator, PauliString, mat_exp, pauli_matrix

logger = logging.getLogger(__name__)


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    CNOT = "CNOT"
    GENERIC = "GENERIC"


ROTATION_AXES = {GateKind.RX: "X", GateKind.RY: "Y", GateKind.RZ: "Z"}

CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def rotation_matrix(axis, theta):
    """R_P(theta) = exp(-i theta P / 2) in closed form."""
    return np.cos(theta / 2) * np.eye(2, dtype=complex) - 1j * np.sin(theta / 2) * pauli_matrix(axis)


@dataclass(frozen=True, eq=False)
class GateInstance:
    """
    One circuit gate.

    Parameters
    ----------
    id : int
        Position-independent identifier, dense over the circuit.
    kind : GateKind
    qubits : tuple of int
        Register indices; the first is the control for CNOT.
    theta : float or None
        Rotation angle in radians, rotations only.
    layer : int
        Ansatz layer index.
    generator_override : Generator or None
        Generator of a GENERIC gate; the gate applies exp(generator).
    tie : int or None
        Gates sharing a tie key share one trainable parameter.
    """

    id: int
    kind: GateKind
    qubits: tuple
    theta: float = None
    layer: int = 0
    generator_override: Generator = field(default=None, repr=False)
    tie: int = None

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if len(set(self.qubits)) != len(self.qubits):
            raise DimensionError(f"Gate {self.id} acts on repeated qubits {self.qubits}")
        if min(self.qubits, default=0) < 0:
            raise DimensionError(f"Gate {self.id} has a negative qubit index")
        if self.layer < 0:
            raise ValueError(f"Gate {self.id} has negative layer {self.layer}")
        if self.kind in ROTATION_AXES:
            if len(self.qubits) != 1:
                raise DimensionError(f"{self.kind.value} gate {self.id} must act on one qubit")
            if self.theta is None:
                raise ValueError(f"{self.kind.value} gate {self.id} needs a theta")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.kind == GateKind.CNOT:
            if len(self.qubits) != 2:
                raise DimensionError(f"CNOT gate {self.id} must act on two qubits")
            if self.theta is not None:
                raise ValueError(f"CNOT gate {self.id} carries no parameter")
        else:
            gen = self.generator_override
            if gen is None:
                raise ValueError(f"GENERIC gate {self.id} needs a generator")
            if gen.num_qubits != len(self.qubits) or len(self.qubits) not in (1, 2):
                raise DimensionError(
                    f"GENERIC gate {self.id} on {self.qubits} has a {gen.num_qubits}-qubit generator"
                )
            if gen.support != self.qubits:
                object.__setattr__(self, "generator_override", gen.on_support(self.qubits))

    @property
    def is_parameterized(self):
        return self.kind != GateKind.CNOT

    @property
    def axis(self):
        """Pauli letter of a rotation gate."""
        return ROTATION_AXES.get(self.kind)

    @cached_property
    def _unitary(self):
        if self.kind in ROTATION_AXES:
            mat = rotation_matrix(self.axis, self.theta)
        elif self.kind == GateKind.CNOT:
            mat = CNOT_MATRIX
        else:
            mat = mat_exp(self.generator_override.matrix)
        mat.setflags(write=False)
        return mat

    def unitary(self):
        """Local 2x2 or 4x4 unitary on ``qubits``."""
        return self._unitary

    def require_parameterized(self):
        if not self.is_parameterized:
            raise NotParameterizedError(f"Gate {self.id} ({self.kind.value}) carries no parameter")

    def replace(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        out = {"id": self.id, "kind": self.kind.value, "qubits": list(self.qubits)}
        if self.theta is not None:
            out["theta"] = self.theta
        out["layer"] = self.layer
        if self.generator_override is not None:
            out["generator"] = {
                "paulis": [
                    {"string": p.letters, "coeff": p.coeff}
                    for p in self.generator_override.pauli_coeffs
                ]
            }
        if self.tie is not None:
            out["tie"] = self.tie
        return out

    @classmethod
    def from_dict(cls, data):
        generator = None
        if "generator" in data:
            paulis = [PauliString(p["string"], p["coeff"]) for p in data["generator"]["paulis"]]
            generator = Generator.from_paulis(tuple(data["qubits"]), paulis)
        return cls(
            id=int(data["id"]),
            kind=data["kind"],
            qubits=tuple(data["qubits"]),
            theta=data.get("theta"),
            layer=int(data.get("layer", 0)),
            generator_override=generator,
            tie=data.get("tie"),
        )


@dataclass(frozen=True)
class Parameter:
    """
    One trainable scalar of a circuit.

    ``pattern`` is None for a rotation angle and the Pauli pattern of a
    coefficient for GENERIC gates.
    """

    gate_ids: tuple
    pattern: str = None


def renumbered(gates):
    """
    Assign dense ids 0..N-1 in list order and remap tie keys onto surviving members.

    A tie group left with a single member becomes an ordinary gate.
    """
    gates = list(gates)
    old_to_new = {g.id: i for i, g in enumerate(gates)}
    groups = {}
    for g in gates:
        if g.tie is not None:
            groups.setdefault(g.tie, []).append(old_to_new[g.id])
    out = []
    for g in gates:
        tie = None
        if g.tie is not None and len(groups[g.tie]) > 1:
            tie = min(groups[g.tie])
        out.append(g.replace(id=old_to_new[g.id], tie=tie))
    return out


@dataclass(frozen=True, eq=False)
class Circuit:
    """
    Ordered list of gates on a register.

    Parameters
    ----------
    num_qubits : int
    gates : tuple of GateInstance
        Applied left to right; ids are dense 0..N-1.
    num_layers : int
    """

    num_qubits: int
    gates: tuple = ()
    num_layers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if not 1 <= self.num_qubits <= MAX_QUBITS:
            raise DimensionError(f"Register size must be in [1, {MAX_QUBITS}], got {self.num_qubits}")
        ids = sorted(g.id for g in self.gates)
        if ids != list(range(len(self.gates))):
            raise ValueError("Gate ids must be unique and dense 0..N-1")
        for g in self.gates:
            if g.layer >= self.num_layers:
                raise ValueError(f"Gate {g.id} layer {g.layer} >= num_layers {self.num_layers}")
            if max(g.qubits) >= self.num_qubits:
                raise DimensionError(f"Gate {g.id} acts on {g.qubits}, register has {self.num_qubits} qubits")

    @cached_property
    def _by_id(self):
        return {g.id: g for g in self.gates}

    def gate(self, gate_id):
        return self._by_id[gate_id]

    def parameterized_gates(self):
        return [g for g in self.gates if g.is_parameterized]

    def tie_groups(self):
        """Mapping tie key -> member gate ids, in gate order."""
        groups = {}
        for g in self.gates:
            if g.tie is not None:
                groups.setdefault(g.tie, []).append(g.id)
        return groups

    @cached_property
    def _parameters(self):
        params = []
        seen_ties = set()
        groups = self.tie_groups()
        for g in self.gates:
            if not g.is_parameterized:
                continue
            if g.tie is not None:
                if g.tie in seen_ties:
                    continue
                seen_ties.add(g.tie)
                ids = tuple(groups[g.tie])
            else:
                ids = (g.id,)
            if g.kind == GateKind.GENERIC:
                params.extend(Parameter(ids, p) for p in g.generator_override.signature)
            else:
                params.append(Parameter(ids))
        return tuple(params)

    def parameters(self):
        return list(self._parameters)

    def parameter_count(self):
        return len(self._parameters)

    def parameter_values(self):
        values = []
        for p in self._parameters:
            g = self.gate(p.gate_ids[0])
            if p.pattern is None:
                values.append(g.theta)
            else:
                values.append(g.generator_override.coeff_map[p.pattern])
        return np.array(values, dtype=float)

    def with_parameter_values(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (self.parameter_count(),):
            raise DimensionError(
                f"Expected {self.parameter_count()} parameter values, got shape {values.shape}"
            )
        thetas = {}
        coeffs = {}
        for p, v in zip(self._parameters, values):
            for gid in p.gate_ids:
                if p.pattern is None:
                    thetas[gid] = float(v)
                else:
                    coeffs.setdefault(gid, {})[p.pattern] = float(v)
        gates = []
        for g in self.gates:
            if g.id in thetas:
                g = g.replace(theta=thetas[g.id])
            elif g.id in coeffs:
                merged = {**g.generator_override.coeff_map, **coeffs[g.id]}
                g = g.replace(generator_override=Generator.from_coeff_map(g.qubits, merged))
            gates.append(g)
        return self.with_gates(gates, renumber=False)

    def replace_gates(self, mapping):
        """Swap gates by id; ``mapping`` is id -> GateInstance."""
        return self.with_gates([mapping.get(g.id, g) for g in self.gates], renumber=False)

    def with_gates(self, gates, renumber=True):
        gates = renumbered(gates) if renumber else list(gates)
        return Circuit(self.num_qubits, tuple(gates), self.num_layers)

    def dagger(self):
        """Inverse circuit: gates reversed, each inverted."""
        gates = []
        for g in reversed(self.gates):
            layer = self.num_layers - 1 - g.layer
            if g.kind in ROTATION_AXES:
                gates.append(g.replace(theta=-g.theta, layer=layer))
            elif g.kind == GateKind.GENERIC:
                inverse = Generator.combine(g.qubits, [(-1.0, g.generator_override)])
                gates.append(g.replace(generator_override=inverse, layer=layer))
            else:
                gates.append(g.replace(layer=layer))
        return self.with_gates(gates)

    def to_dict(self):
        return {
            "num_qubits": self.num_qubits,
            "num_layers": self.num_layers,
            "gates": [g.to_dict() for g in self.gates],
        }

    @classmethod
    def from_dict(cls, data):
        gates = [GateInstance.from_dict(g) for g in data["gates"]]
        return cls(int(data["num_qubits"]), tuple(gates), int(data.get("num_layers", 1)))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


class StateVector:
    """
    Unit-norm vector of 2**num_qubits complex amplitudes.

    Parameters
    ----------
    amplitudes : array_like
    check : bool
        Validate the norm (within 1e-8).
    """

    def __init__(self, amplitudes, check=True):
        amps = np.array(amplitudes, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.size))) if amps.size else -1
        if n < 0 or 2**n != amps.size:
            raise DimensionError(f"State length {amps.size} is not a power of two")
        if n > MAX_QUBITS:
            raise DimensionError(f"State on {n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        if check and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise NormalizationError(f"State norm {np.linalg.norm(amps):.12f} is not 1")
        amps.setflags(write=False)
        self.amplitudes = amps
        self.num_qubits = n

    @classmethod
    def zero(cls, num_qubits):
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits, index):
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other):
        """<self|other>."""
        if other.num_qubits != self.num_qubits:
            raise DimensionError(f"Inner product of {self.num_qubits}- and {other.num_qubits}-qubit states")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def batch(self):
        """Amplitudes as a (1, 2**n) array for the batch kernels."""
        return self.amplitudes[np.newaxis, :]

    def __repr__(self):
        return f"StateVector(num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class Hamiltonian:
    """
    Real linear combination of Pauli strings.

    Text format: one term per line, ``coefficient PAULI_STRING``; ``#`` starts a comment.
    """

    num_qubits: int
    terms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.num_qubits != self.num_qubits:
                raise DimensionError(
                    f"Term {t.letters} has {t.num_qubits} letters, Hamiltonian has {self.num_qubits} qubits"
                )

    @classmethod
    def single(cls, num_qubits, letter, qubit, coeff=1.0):
        letters = ["I"] * num_qubits
        letters[qubit] = letter
        return cls(num_qubits, (PauliString("".join(letters), coeff),))

    @classmethod
    def from_text(cls, text):
        terms = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"Line {lineno}: expected 'coefficient PAULI_STRING', got {raw!r}")
            terms.append(PauliString(parts[1].upper(), float(parts[0])))
        if not terms:
            raise ValueError("Hamiltonian has no terms")
        return cls(terms[0].num_qubits, tuple(terms))

    def to_text(self):
        return "".join(f"{t.coeff:.17g} {t.letters}\n" for t in self.terms)

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())

    def save(self, path):
        Path(path).write_text(self.to_text())

    def to_sparse(self):
        dim = 2**self.num_qubits
        out = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
        for t in self.terms:
            mat = scipy.sparse.identity(1, dtype=complex, format="csr")
            for letter in t.letters:
                mat = scipy.sparse.kron(mat, scipy.sparse.csr_matrix(pauli_matrix(letter)), format="csr")
            out = out + t.coeff * mat
        return out

    def to_dense(self):
        return self.to_sparse().toarray()


def _check_qubits(qubits, num_qubits):
    if max(qubits) >= num_qubits:
        raise DimensionError(f"Qubits {tuple(qubits)} out of range for a {num_qubits}-qubit register")


def apply_local(amps, matrix, qubits, num_qubits):
    """
    Apply a 2^k x 2^k operator to ``qubits`` of every state in a batch.

    Parameters
    ----------
    amps : numpy.ndarray of shape (batch, 2**num_qubits)
    matrix : numpy.ndarray of shape (2**k, 2**k)
    qubits : sequence of int
        Target qubits, in the operator's index order.
    num_qubits : int
    """
    k = len(qubits)
    batch = amps.shape[0]
    psi = amps.reshape((batch,) + (2,) * num_qubits)
    op = np.asarray(matrix).reshape((2,) * (2 * k))
    axes = [1 + q for q in qubits]
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(batch, -1)


def apply_gate_batch(amps, gate, num_qubits):
    _check_qubits(gate.qubits, num_qubits)
    return apply_local(amps, gate.unitary(), gate.qubits, num_qubits)


def apply_gate(state, gate):
    """Apply one gate to a state and return the new state."""
    out = apply_gate_batch(state.batch(), gate, state.num_qubits)
    return StateVector(out[0], check=False)


def run_batch(circuit, amps):
    if amps.shape[1] != 2**circuit.num_qubits:
        raise DimensionError(
            f"States of length {amps.shape[1]} do not match a {circuit.num_qubits}-qubit circuit"
        )
    for gate in circuit.gates:
        amps = apply_gate_batch(amps, gate, circuit.num_qubits)
    return amps


def run(circuit, initial):
    """Apply all gates left to right."""
    if initial.num_qubits != circuit.num_qubits:
        raise DimensionError(
            f"Initial state has {initial.num_qubits} qubits, circuit has {circuit.num_qubits}"
        )
    return StateVector(run_batch(circuit, initial.batch())[0])


def apply_pauli_batch(amps, letters):
    num_qubits = len(letters)
    for q, letter in enumerate(letters):
        if letter != "I":
            amps = apply_local(amps, pauli_matrix(letter), (q,), num_qubits)
    return amps


def apply_hamiltonian_batch(amps, H):
    out = np.zeros_like(amps)
    for t in H.terms:
        out += t.coeff * apply_pauli_batch(amps, t.letters)
    return out


def expectation_batch(amps, H):
    """Real <psi|H|psi> for every state of a batch."""
    if amps.shape[1] != 2**H.num_qubits:
        raise DimensionError(
            f"States of length {amps.shape[1]} do not match a {H.num_qubits}-qubit Hamiltonian"
        )
    values = np.einsum("bi,bi->b", amps.conj(), apply_hamiltonian_batch(amps, H))
    scale = max(1.0, sum(abs(t.coeff) for t in H.terms))
    residue = np.max(np.abs(values.imag), initial=0.0)
    assert residue <= IMAG_RESIDUE_TOL * scale, f"Expectation has imaginary residue {residue:.3e}"
    return values.real


def expectation(state, H):
    if state.num_qubits != H.num_qubits:
        raise DimensionError(f"State has {state.num_qubits} qubits, Hamiltonian has {H.num_qubits}")
    return float(expectation_batch(state.batch(), H)[0])


def embed_batch(features, num_qubits):
    """Amplitude-embed every row of ``features`` (zero-padded, L2-normalized)."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    dim = 2**num_qubits
    if features.shape[1] > dim:
        raise DimensionError(f"{features.shape[1]} features do not fit {num_qubits} qubits")
    norms = np.linalg.norm(features, axis=1)
    if np.any(norms == 0):
        raise NormalizationError("Cannot amplitude-embed an all-zero vector")
    amps = np.zeros((features.shape[0], dim), dtype=complex)
    amps[:, : features.shape[1]] = features / norms[:, np.newaxis]
    return amps


def amplitude_embed(data, num_qubits):
    return StateVector(embed_batch(data, num_qubits)[0])


def build_hea(num_qubits, num_layers, seed):
    """
    Hardware-efficient ansatz.

    Each layer applies RX, RY, RZ to every qubit, then a CNOT ladder on (q, q+1).
    Angles are uniform in [-pi, pi) from ``seed``.
    """
    if num_qubits < MIN_HEA_QUBITS:
        raise DimensionError(f"The ansatz needs at least {MIN_HEA_QUBITS} qubits")
    if num_layers < 1:
        raise ValueError("The ansatz needs at least one layer")
    rng = np.random.default_rng(seed)
    gates = []
    for layer in range(num_layers):
        for q in range(num_qubits):
            for kind in (GateKind.RX, GateKind.RY, GateKind.RZ):
                gates.append(GateInstance(len(gates), kind, (q,), rng.uniform(-np.pi, np.pi), layer))
        for q in range(num_qubits - 1):
            gates.append(GateInstance(len(gates), GateKind.CNOT, (q, q + 1), None, layer))
    logger.debug(f"Built a {num_qubits}-qubit, {num_layers}-layer ansatz with {len(gates)} gates")
    return Circuit(num_qubits, tuple(gates), num_layers)
