"""
Dense complex linear algebra and Lie-algebra numerics on small Hilbert spaces.

Gate-local operators are at most 4 qubits (16x16). Every function here is a
pure function of its inputs.
"""
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from itertools import product
import logging

import numpy as np
import scipy.linalg

from constants import (
    ANTI_HERMITIAN_TOL,
    BRANCH_TOL,
    COEFF_CUTOFF,
    HERMITIAN_TOL,
    MAX_LOCAL_QUBITS,
    PAULI_LETTERS,
    UNITARY_INPUT_TOL,
    UNITARY_TOL,
)
from errors import (
    BranchAmbiguityError,
    DimensionError,
    HermiticityError,
    UnitarityError,
)

logger = logging.getLogger(__name__)

_SINGLE_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """
    Tensor product label over {I, X, Y, Z}, one letter per qubit, with a real coefficient.

    Parameters
    ----------
    letters : str
        e.g. ``"XZ"``; the first letter acts on the first qubit of the register.
    coeff : float
        Real coefficient.
    """

    letters: str
    coeff: float = 1.0

    def __post_init__(self):
        if not self.letters or any(c not in PAULI_LETTERS for c in self.letters):
            raise ValueError(f"Invalid Pauli string {self.letters!r}")
        object.__setattr__(self, "coeff", float(self.coeff))

    @property
    def num_qubits(self):
        return len(self.letters)

    @property
    def is_identity(self):
        return set(self.letters) == {"I"}

    def matrix(self):
        return self.coeff * pauli_matrix(self.letters)

    def __str__(self):
        return f"{self.coeff:+.12g} {self.letters}"


@lru_cache(maxsize=None)
def _pauli_matrix_cached(letters):
    mat = reduce(np.kron, (_SINGLE_PAULI[c] for c in letters))
    mat.setflags(write=False)
    return mat


def pauli_matrix(letters):
    """Dense matrix of a coefficient-free Pauli string (read-only, cached)."""
    return _pauli_matrix_cached(letters)


def pauli_strings(num_qubits, include_identity=True):
    for letters in product(PAULI_LETTERS, repeat=num_qubits):
        letters = "".join(letters)
        if include_identity or set(letters) != {"I"}:
            yield letters


def _as_square(A, name="matrix"):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def _num_qubits_of(dim):
    k = int(round(np.log2(dim))) if dim > 0 else -1
    if k < 0 or 2**k != dim:
        raise DimensionError(f"Dimension {dim} is not a power of two")
    return k


def is_unitary(U, tol=UNITARY_TOL):
    U = _as_square(U)
    return np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol


def assert_unitary(U, tol=UNITARY_TOL):
    U = _as_square(U)
    deviation = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if deviation > tol:
        raise UnitarityError(f"Matrix is not unitary: max|U^dag U - I| = {deviation:.3e} > {tol:g}")


def is_anti_hermitian(A, tol=ANTI_HERMITIAN_TOL):
    A = _as_square(A)
    return np.max(np.abs(A + A.conj().T), initial=0.0) <= tol


def mat_exp(A):
    """Matrix exponential e^A of a square matrix."""
    return scipy.linalg.expm(_as_square(A))


def su_normalize(U):
    """Rescale U by det(U)^(-1/dim), principal root, so that det = 1."""
    U = _as_square(U)
    phase = np.angle(np.linalg.det(U)) / U.shape[0]
    return U * np.exp(-1j * phase)


def principal_log(U, branch_tol=BRANCH_TOL):
    """
    Principal logarithm of a unitary, after projecting it onto the special unitary group.

    The input is rescaled by ``su_normalize`` (its global phase is discarded), then
    diagonalized by a complex Schur decomposition, which is diagonal for normal
    matrices. Eigenphases are taken in (-pi, pi].

    Parameters
    ----------
    U : array_like
        Unitary matrix (within 1e-8).
    branch_tol : float
        Eigenphases with |phase| > pi - branch_tol are rejected.

    Returns
    -------
    numpy.ndarray
        Anti-Hermitian X with exp(X) equal to the normalized input. Its trace is
        an integer multiple of 2 pi i and need not vanish for dim > 2; removing
        it changes exp(X) by a center element of the special unitary group.

    Raises
    ------
    UnitarityError
        If U is not unitary.
    BranchAmbiguityError
        If an eigenphase sits on the branch cut.
    """
    U = _as_square(U)
    assert_unitary(U, UNITARY_INPUT_TOL)
    V = su_normalize(U)
    T, Z = scipy.linalg.schur(V, output="complex")
    phases = np.angle(np.diag(T))
    worst = phases[np.argmax(np.abs(phases))]
    if abs(worst) > np.pi - branch_tol:
        raise BranchAmbiguityError(worst, branch_tol)
    X = (Z * (1j * phases)) @ Z.conj().T
    return 0.5 * (X - X.conj().T)


def generator_phases(X):
    """Eigenphases of exp(X) read off an anti-Hermitian X (ascending)."""
    return np.sort(-np.linalg.eigvalsh(1j * _as_square(X)))


def op_norm(A):
    """Spectral norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"op_norm expects a matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, ord=2))


def commutator(A, B):
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    if A.shape != B.shape:
        raise DimensionError(f"Commutator of mismatched shapes {A.shape} and {B.shape}")
    return A @ B - B @ A


def pauli_decompose(H):
    """
    Expand a Hermitian matrix over the Pauli basis.

    Coefficients are c_P = Tr(P H) / 2^k; those below 1e-12 in magnitude are
    omitted. The identity string is kept when present.

    Returns
    -------
    list of PauliString
        In lexicographic I < X < Y < Z order.
    """
    H = _as_square(H, "H")
    k = _num_qubits_of(H.shape[0])
    if k > MAX_LOCAL_QUBITS:
        raise DimensionError(f"pauli_decompose supports at most {MAX_LOCAL_QUBITS} qubits, got {k}")
    residue = np.max(np.abs(H - H.conj().T), initial=0.0)
    if residue > HERMITIAN_TOL:
        raise HermiticityError(f"Matrix is not Hermitian: max|H - H^dag| = {residue:.3e}")
    dim = H.shape[0]
    terms = []
    for letters in pauli_strings(k):
        # Tr(P H) without forming the product
        coeff = np.sum(pauli_matrix(letters) * H.T).real / dim
        if abs(coeff) >= COEFF_CUTOFF:
            terms.append(PauliString(letters, coeff))
    return terms


def pauli_compose(paulis, num_qubits):
    """Sum of coeff * P over the given Pauli strings."""
    out = np.zeros((2**num_qubits, 2**num_qubits), dtype=complex)
    for p in paulis:
        if p.num_qubits != num_qubits:
            raise DimensionError(f"Pauli string {p.letters} does not act on {num_qubits} qubits")
        out += p.matrix()
    return out


def random_su(dim, rng):
    """Haar-random element of SU(dim)."""
    G = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return su_normalize(Q)


def random_anti_hermitian(dim, rng, scale=1.0, traceless=True):
    """Random anti-Hermitian matrix with spectral norm ``scale``."""
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    H = 0.5 * (G + G.conj().T)
    if traceless:
        H -= np.trace(H) / dim * np.eye(dim)
    norm = op_norm(H)
    if norm > 0:
        H *= scale / norm
    return -1j * H


@dataclass(frozen=True, eq=False)
class Generator:
    """
    Anti-Hermitian Lie-algebra element on a gate's local Hilbert space.

    ``matrix == -i * sum(c_P * P)`` over the identity-free Pauli strings in
    ``pauli_coeffs``; the local matrix is indexed in ``support`` order.

    Parameters
    ----------
    support : tuple of int
        Register qubits the generator acts on.
    matrix : numpy.ndarray
        Dense anti-Hermitian matrix of size 2^len(support).
    pauli_coeffs : tuple of PauliString
        Real coefficients over the local Pauli basis.
    """

    support: tuple
    matrix: np.ndarray = field(repr=False)
    pauli_coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(q) for q in self.support))
        mat = _as_square(self.matrix, "generator")
        if mat.shape[0] != 2 ** len(self.support):
            raise DimensionError(
                f"Generator on {len(self.support)} qubits needs a {2 ** len(self.support)}-dim matrix, "
                f"got {mat.shape}"
            )
        scale = max(1.0, float(np.max(np.abs(mat), initial=0.0)))
        if not is_anti_hermitian(mat, ANTI_HERMITIAN_TOL * scale):
            raise HermiticityError("Generator matrix is not anti-Hermitian")
        mat = mat.copy()
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "pauli_coeffs", tuple(self.pauli_coeffs))

    @classmethod
    def from_paulis(cls, support, paulis):
        paulis = tuple(p for p in paulis if not p.is_identity and abs(p.coeff) >= COEFF_CUTOFF)
        matrix = -1j * pauli_compose(paulis, len(support))
        return cls(support, matrix, paulis)

    @classmethod
    def from_coeff_map(cls, support, coeffs):
        return cls.from_paulis(support, [PauliString(k, v) for k, v in sorted(coeffs.items())])

    @classmethod
    def from_matrix(cls, support, matrix):
        """Build a generator from its matrix; any identity (global phase) component is dropped."""
        matrix = _as_square(matrix)
        terms = pauli_decompose(1j * matrix)
        if any(t.is_identity for t in terms):
            logger.debug("Dropping the global-phase component of a generator matrix")
        return cls.from_paulis(support, terms)

    @classmethod
    def zero(cls, support):
        dim = 2 ** len(support)
        return cls(support, np.zeros((dim, dim), dtype=complex), ())

    @property
    def num_qubits(self):
        return len(self.support)

    @property
    def coeff_map(self):
        return {p.letters: p.coeff for p in self.pauli_coeffs}

    @property
    def signature(self):
        """Pauli letter-patterns with nonzero coefficients, sorted."""
        return tuple(sorted(p.letters for p in self.pauli_coeffs if abs(p.coeff) > COEFF_CUTOFF))

    @property
    def coeff_norm(self):
        return float(np.sqrt(sum(p.coeff**2 for p in self.pauli_coeffs)))

    def coeff_vector(self, patterns):
        coeffs = self.coeff_map
        return np.array([coeffs.get(p, 0.0) for p in patterns])

    def hermitian(self):
        """H = i X, the Hermitian operator with exp(X) = exp(-i H)."""
        return 1j * self.matrix

    def unitary(self):
        return mat_exp(self.matrix)

    def on_support(self, support):
        """Same local operator relabelled onto other register qubits."""
        return Generator(support, self.matrix, self.pauli_coeffs)

    @staticmethod
    def combine(support, weighted):
        """
        Linear combination sum(w * X) of generators in the qubit-erased local algebra.

        Parameters
        ----------
        support : tuple of int
            Support of the result.
        weighted : iterable of (float, Generator)
        """
        total = {}
        for weight, gen in weighted:
            for p in gen.pauli_coeffs:
                total[p.letters] = total.get(p.letters, 0.0) + weight * p.coeff
        return Generator.from_coeff_map(support, total)
