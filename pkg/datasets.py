"""
Task generators: Bars-and-Stripes images, transverse-field Ising Hamiltonians,
synthetic two-cluster data and CSV feature files.
"""
from itertools import product
import logging

import numpy as np
import scipy.sparse.linalg

from circuit import Hamiltonian
from constants import MAX_DENSE_QUBITS
from errors import DimensionError
from qmath import PauliString
from train import Dataset
from utils import make_rng

logger = logging.getLogger(__name__)

# below this size the full spectrum is cheaper than Lanczos
SPARSE_EIGEN_QUBITS = 8


def gen_bars_and_stripes(size=4, seed=0):
    """
    All non-constant ``size`` x ``size`` bar and stripe images.

    A bar image has every row equal (label 0); a stripe image has every column
    equal (label 1). The two constant images are both at once and are left out, which
    leaves 2 (2^size - 2) patterns. ``seed`` shuffles the sample order.
    """
    if size < 2 or size * size > 2**MAX_DENSE_QUBITS:
        raise DimensionError(f"Unsupported image size {size}")
    features = []
    labels = []
    for label, transpose in ((0, False), (1, True)):
        for mask in product((0.0, 1.0), repeat=size):
            if len(set(mask)) == 1:
                continue
            image = np.tile(mask, (size, 1))
            features.append((image.T if transpose else image).reshape(-1))
            labels.append(label)
    order = make_rng(seed).permutation(len(labels))
    logger.debug(f"Generated {len(labels)} bars-and-stripes patterns of size {size}")
    return Dataset(np.array(features)[order], np.array(labels)[order], f"bas{size}")


def gen_synthetic(num_samples=64, num_features=16, seed=0):
    """
    Two separable clusters of positive feature vectors.

    Label 0 puts its weight on the first half of the features, label 1 on the second half.
    """
    if num_features < 2:
        raise ValueError("Need at least two features")
    rng = make_rng(seed)
    half = num_features // 2
    labels = np.arange(num_samples) % 2
    features = np.abs(rng.normal(0.0, 0.1, size=(num_samples, num_features)))
    features[labels == 0, :half] += 1.0
    features[labels == 1, half:] += 1.0
    order = rng.permutation(num_samples)
    return Dataset(features[order], labels[order], "synthetic")


def load_csv_dataset(path):
    """Pre-flattened feature rows with a trailing 0/1 label column."""
    dataset = Dataset.from_csv(path)
    logger.info(f"Loaded {len(dataset)} samples with {dataset.features.shape[1]} features from {path}")
    return dataset


def gen_tfim(num_qubits, coupling=1.0, field=1.0):
    """H = -J sum Z_q Z_{q+1} - h sum X_q on an open chain."""
    if not 1 <= num_qubits <= MAX_DENSE_QUBITS:
        raise DimensionError(f"TFIM size must be in [1, {MAX_DENSE_QUBITS}], got {num_qubits}")
    terms = []
    for q in range(num_qubits - 1):
        letters = ["I"] * num_qubits
        letters[q] = letters[q + 1] = "Z"
        terms.append(PauliString("".join(letters), -coupling))
    for q in range(num_qubits):
        letters = ["I"] * num_qubits
        letters[q] = "X"
        terms.append(PauliString("".join(letters), -field))
    terms = [t for t in terms if t.coeff != 0.0]
    if not terms:
        terms = [PauliString("I" * num_qubits, 0.0)]
    return Hamiltonian(num_qubits, tuple(terms))


def exact_ground_energy(H):
    """Smallest eigenvalue of the Hamiltonian matrix."""
    if H.num_qubits > MAX_DENSE_QUBITS:
        raise DimensionError(
            f"Exact diagonalization supports at most {MAX_DENSE_QUBITS} qubits, got {H.num_qubits}"
        )
    if H.num_qubits < SPARSE_EIGEN_QUBITS:
        return float(np.linalg.eigvalsh(H.to_dense())[0])
    value = scipy.sparse.linalg.eigsh(H.to_sparse(), k=1, which="SA", return_eigenvectors=False)
    return float(value[0])
