"""
Dual-space identifier of a parameterized gate: Lie-algebra coordinates,
subgroup label and geometric features.
"""
from collections import namedtuple
from dataclasses import dataclass
from enum import Enum
import logging

import numpy as np

from circuit import GateKind, ROTATION_AXES, apply_gate_batch, apply_local
from constants import BRANCH_TOL
from errors import BranchAmbiguityError
from fsdist import ReferenceBatch, fs_rows
from qmath import Generator, PauliString

logger = logging.getLogger(__name__)

__all__ = [
    "FeatureVector",
    "Generator",
    "GateIdentifier",
    "Locality",
    "LocalityPolicy",
    "SubgroupLabel",
    "extract_generator",
    "features_table",
    "geo_features",
    "identifier",
    "subgroup_label",
]


class Locality(str, Enum):
    SAME_QUBIT = "same-qubit"
    SAME_LAYER = "same-layer"
    GLOBAL = "global"
    QUBIT_BLOCK = "qubit-block"


@dataclass(frozen=True)
class LocalityPolicy:
    """
    Which gates may share a subgroup label.

    Parameters
    ----------
    kind : Locality
    block : int
        Qubits per block for QUBIT_BLOCK.
    """

    kind: Locality = Locality.SAME_LAYER
    block: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", Locality(self.kind))
        if self.block < 1:
            raise ValueError("Qubit block size must be at least 1")

    def key(self, gate):
        if self.kind == Locality.SAME_QUBIT:
            return (gate.qubits[0], gate.layer)
        if self.kind == Locality.SAME_LAYER:
            return gate.layer
        if self.kind == Locality.QUBIT_BLOCK:
            return (gate.layer, gate.qubits[0] // self.block)
        return 0

    def __str__(self):
        if self.kind == Locality.QUBIT_BLOCK:
            return f"{self.kind.value}:{self.block}"
        return self.kind.value

    @classmethod
    def parse(cls, text):
        """``same-layer``, ``same-qubit``, ``global`` or ``qubit-block:B``."""
        name, _, block = text.partition(":")
        return cls(Locality(name), int(block) if block else 1)


@dataclass(frozen=True)
class SubgroupLabel:
    axis_signature: tuple
    locality_key: object
    kind_tag: str

    def __str__(self):
        return f"{self.kind_tag}[{'+'.join(self.axis_signature) or '0'}]@{self.locality_key}"


@dataclass(frozen=True)
class FeatureVector:
    displacement: float
    qfi: float
    support_mask: int
    coeff_norm: float


GateIdentifier = namedtuple("GateIdentifier", ["pauli_coeffs", "label", "features"])


def extract_generator(gate, branch_tol=BRANCH_TOL):
    """
    Principal generator X with exp(X) equal to the gate.

    Rotations use the closed form -i (theta/2) P with theta/2 wrapped into [-pi, pi)
    (R_P has period 4 pi); GENERIC gates return their stored generator.

    Raises
    ------
    NotParameterizedError
        For CNOT.
    BranchAmbiguityError
        If a rotation's eigenphases +-theta/2 reach the branch cut.
    """
    gate.require_parameterized()
    if gate.kind == GateKind.GENERIC:
        return gate.generator_override
    half = (gate.theta / 2 + np.pi) % (2 * np.pi) - np.pi
    if abs(half) > np.pi - branch_tol:
        raise BranchAmbiguityError(half, branch_tol)
    return Generator.from_paulis(gate.qubits, [PauliString(ROTATION_AXES[gate.kind], half)])


def subgroup_label(gate, policy):
    gate.require_parameterized()
    if gate.kind == GateKind.GENERIC:
        signature = gate.generator_override.signature
    else:
        signature = (ROTATION_AXES[gate.kind],)
    return SubgroupLabel(signature, policy.key(gate), gate.kind.value)


def _as_refs(reference_states):
    if isinstance(reference_states, ReferenceBatch):
        return reference_states
    return ReferenceBatch.from_states(list(reference_states))


def geo_features(gate, reference_states):
    """
    Geometric features averaged over the reference states.

    displacement = mean arccos|<psi|O|psi>|; qfi = mean 4 Var_psi(H) with H = i X.
    """
    refs = _as_refs(reference_states)
    gen = extract_generator(gate)
    amps = refs.amps
    moved = apply_gate_batch(amps, gate, refs.num_qubits)
    displacement = float(np.mean(fs_rows(amps, moved)))
    h_psi = apply_local(amps, gen.hermitian(), gen.support, refs.num_qubits)
    first = np.einsum("bi,bi->b", amps.conj(), h_psi).real
    second = np.einsum("bi,bi->b", h_psi.conj(), h_psi).real
    qfi = float(np.mean(4.0 * (second - first**2)))
    mask = sum(1 << q for q in gate.qubits)
    return FeatureVector(displacement, qfi, mask, gen.coeff_norm)


def identifier(gate, reference_states, policy):
    refs = _as_refs(reference_states)
    gen = extract_generator(gate)
    return GateIdentifier(gen.pauli_coeffs, subgroup_label(gate, policy), geo_features(gate, refs))


FEATURE_COLUMNS = ["id", "kind", "layer", "qubits", "axis_signature", "displacement", "qfi", "coeff_norm"]


def features_table(circuit, reference_states, policy):
    """One row per parameterized gate, in gate order."""
    refs = _as_refs(reference_states)
    rows = []
    for gate in circuit.parameterized_gates():
        ident = identifier(gate, refs, policy)
        rows.append(
            {
                "id": gate.id,
                "kind": gate.kind.value,
                "layer": gate.layer,
                "qubits": " ".join(str(q) for q in gate.qubits),
                "axis_signature": "+".join(ident.label.axis_signature),
                "displacement": ident.features.displacement,
                "qfi": ident.features.qfi,
                "coeff_norm": ident.features.coeff_norm,
            }
        )
    logger.info(f"Extracted features for {len(rows)} parameterized gates")
    return rows
