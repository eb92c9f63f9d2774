"""
Fubini-Study distances between states and between gates, exact and
geometry-accelerated, with the commutator diagnostics that control the
accelerated approximation.
"""
from collections import namedtuple
import logging

import numpy as np

from circuit import GateInstance, GateKind, apply_gate_batch, apply_local
from constants import DEFAULT_REDUCTION, MAX_LOCAL_QUBITS, NORM_TOL
from errors import DimensionError, NormalizationError, SupportError
from qmath import commutator, mat_exp, op_norm
from store import REDUCTION_REGISTRY, register_reduction

logger = logging.getLogger(__name__)

BchDiagnostics = namedtuple("BchDiagnostics", ["delta_x", "eta"])


def fs_rows(a, b):
    """
    Row-wise Fubini-Study distance arccos(|<a_r|b_r>|) between two batches of unit vectors.

    Above an overlap of 1/2 the distance is evaluated through the phase-aligned chord,
    2 arcsin(|a - e^{i g} b| / 2), which is the same quantity but keeps full precision
    near zero distance.
    """
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    overlaps = np.einsum("bi,bi->b", a.conj(), b)
    mags = np.abs(overlaps)
    out = np.arccos(np.clip(mags, 0.0, 1.0))
    near = mags >= 0.5
    if np.any(near):
        phases = np.conj(overlaps[near]) / mags[near]
        chords = np.linalg.norm(a[near] - b[near] * phases[:, np.newaxis], axis=1)
        out[near] = 2.0 * np.arcsin(np.clip(chords / 2.0, 0.0, 1.0))
    return out


def fs_state(phi, psi):
    """Fubini-Study distance between two pure states, in [0, pi/2]."""
    if phi.num_qubits != psi.num_qubits:
        raise DimensionError(f"Distance between {phi.num_qubits}- and {psi.num_qubits}-qubit states")
    for s in (phi, psi):
        if abs(s.norm() - 1.0) > NORM_TOL:
            raise NormalizationError(f"State norm {s.norm():.12f} is not 1")
    return float(fs_rows(phi.batch(), psi.batch())[0])


def max_exact_distance(gi, gj, amps, num_qubits):
    """max over the batch of d_FS(O_i psi, O_j psi), by full statevector simulation."""
    a = apply_gate_batch(amps, gi, num_qubits)
    b = apply_gate_batch(amps, gj, num_qubits)
    return float(np.max(fs_rows(a, b)))


def fs_gates_exact(gi, gj, psi0):
    return max_exact_distance(gi, gj, psi0.batch(), psi0.num_qubits)


def embed_operator(matrix, support, target):
    """Pad a local operator on ``support`` with identities onto the ``target`` qubits."""
    positions = [target.index(q) for q in support]
    dim = 2 ** len(target)
    columns = apply_local(np.eye(dim, dtype=complex), matrix, positions, len(target))
    return columns.T


class PairEmbedding(namedtuple("PairEmbedding", ["a", "b", "support", "shared"])):
    """
    Two generators brought into one local algebra.

    ``shared`` pairs act on the same register qubits ``support``; otherwise the
    matrices are compared with qubit indices erased.
    """


def embed_pair(xi, xj):
    if xi.support == xj.support:
        return PairEmbedding(xi.matrix, xj.matrix, xi.support, True)
    if xi.num_qubits == xj.num_qubits:
        return PairEmbedding(xi.matrix, xj.matrix, None, False)
    union = tuple(sorted(set(xi.support) | set(xj.support)))
    if len(union) > MAX_LOCAL_QUBITS:
        raise SupportError(
            f"Cannot embed supports {xi.support} and {xj.support}: union exceeds {MAX_LOCAL_QUBITS} qubits"
        )
    return PairEmbedding(
        embed_operator(xi.matrix, xi.support, list(union)),
        embed_operator(xj.matrix, xj.support, list(union)),
        union,
        True,
    )


class ReferenceBatch:
    """
    Mini-batch of reference states with cached single-support reductions.

    Parameters
    ----------
    amps : numpy.ndarray of shape (batch, 2**num_qubits)
    num_qubits : int
    """

    def __init__(self, amps, num_qubits):
        self.amps = np.atleast_2d(amps)
        self.num_qubits = num_qubits
        self._densities = {}
        self._dominant = {}

    @classmethod
    def from_states(cls, states):
        if not states:
            raise ValueError("At least one reference state is required")
        return cls(np.stack([s.amplitudes for s in states]), states[0].num_qubits)

    def __len__(self):
        return self.amps.shape[0]

    def density(self, support):
        """Reduced density matrices on ``support``, shape (batch, d, d)."""
        support = tuple(support)
        if support not in self._densities:
            k = len(support)
            batch = self.amps.shape[0]
            psi = self.amps.reshape((batch,) + (2,) * self.num_qubits)
            psi = np.moveaxis(psi, [1 + q for q in support], list(range(1, k + 1)))
            m = psi.reshape(batch, 2**k, -1)
            self._densities[support] = np.einsum("bir,bjr->bij", m, m.conj())
        return self._densities[support]

    def dominant(self, support):
        """Dominant eigenvector of each reduced density matrix, shape (batch, d)."""
        support = tuple(support)
        if support not in self._dominant:
            _, vecs = np.linalg.eigh(self.density(support))
            self._dominant[support] = vecs[:, :, -1]
        return self._dominant[support]


@register_reduction("dominant")
def dominant_reference_distance(refs, support, op):
    """Purify each marginal by its dominant eigenvector and measure the local displacement."""
    vecs = refs.dominant(support)
    return float(np.max(fs_rows(vecs, vecs @ op.T)))


@register_reduction("mixed")
def mixed_reference_distance(refs, support, op):
    """Use |Tr(rho U)| of the unpurified marginal in place of the overlap."""
    overlaps = np.abs(np.einsum("bij,ji->b", refs.density(support), op))
    return float(np.max(np.arccos(np.clip(overlaps, 0.0, 1.0))))


def max_fast_distance(xi, xj, refs, reduction=DEFAULT_REDUCTION):
    """
    Accelerated max-over-batch distance using the first-order BCH term exp(X_j - X_i).

    Generators on the same qubits are evaluated on the full reference states; generators
    on different qubits are compared in the qubit-erased local algebra against each
    gate's reduced reference, keeping the larger distance.
    """
    pair = embed_pair(xi, xj)
    op = mat_exp(pair.b - pair.a)
    if pair.shared:
        moved = apply_local(refs.amps, op, pair.support, refs.num_qubits)
        return float(np.max(fs_rows(refs.amps, moved)))
    if reduction not in REDUCTION_REGISTRY:
        raise ValueError(f"Unknown reduction strategy {reduction!r}; known: {sorted(REDUCTION_REGISTRY)}")
    strategy = REDUCTION_REGISTRY[reduction]
    return max(strategy(refs, xi.support, op), strategy(refs, xj.support, op))


def fs_gates_fast(xi, xj, psi0, reduction=DEFAULT_REDUCTION):
    return max_fast_distance(xi, xj, ReferenceBatch(psi0.batch(), psi0.num_qubits), reduction)


def bch_diagnostics(xi, xj):
    """(||X_j - X_i||, ||[X_i, X_j]||) in the spectral norm."""
    pair = embed_pair(xi, xj)
    return BchDiagnostics(op_norm(pair.b - pair.a), op_norm(commutator(pair.a, pair.b)))


def distance_error(xi, xj, psi0):
    """
    |fs_gates_fast - fs_gates_exact| for two generators on shared qubits, each
    applied as a GENERIC gate.
    """
    if not embed_pair(xi, xj).shared:
        raise SupportError("Distance error is defined for generators on shared qubits")
    gi = GateInstance(0, GateKind.GENERIC, xi.support, generator_override=xi)
    gj = GateInstance(1, GateKind.GENERIC, xj.support, generator_override=xj)
    return abs(fs_gates_fast(xi, xj, psi0) - fs_gates_exact(gi, gj, psi0))
