import numpy as np
import pytest

from circuit import Hamiltonian
from datasets import exact_ground_energy, gen_bars_and_stripes, gen_synthetic, gen_tfim, load_csv_dataset
from errors import DimensionError
from qmath import PauliString


def test_bars_and_stripes_counts():
    data = gen_bars_and_stripes(4, seed=0)
    assert len(data) == 28
    assert data.features.shape == (28, 16)
    assert np.sum(data.labels == 0) == np.sum(data.labels == 1) == 14
    assert len({tuple(row) for row in data.features}) == 28


def test_bars_have_equal_rows():
    data = gen_bars_and_stripes(3, seed=1)
    for image, label in zip(data.features.reshape(-1, 3, 3), data.labels):
        if label == 0:
            assert (image == image[0]).all()
        else:
            assert (image.T == image[:, 0]).all()
        assert 0 < image.sum() < 9


def test_bars_and_stripes_seed_shuffles():
    a = gen_bars_and_stripes(4, seed=0)
    b = gen_bars_and_stripes(4, seed=1)
    assert not np.array_equal(a.labels, b.labels) or not np.array_equal(a.features, b.features)
    assert np.array_equal(gen_bars_and_stripes(4, seed=0).features, a.features)


def test_bars_and_stripes_size_limit():
    with pytest.raises(DimensionError):
        gen_bars_and_stripes(1)


def test_synthetic_clusters():
    data = gen_synthetic(20, 8, seed=2)
    first = data.features[:, :4].sum(axis=1)
    second = data.features[:, 4:].sum(axis=1)
    assert np.all((first > second) == (data.labels == 0))


def test_csv_dataset(tmp_path):
    path = tmp_path / "digits.csv"
    path.write_text("# two samples\n0.1,0.2,0\n0.3,0.4,1\n")
    data = load_csv_dataset(path)
    assert data.features.shape == (2, 2)
    assert list(data.labels) == [0, 1]
    assert data.name == "digits"


def test_tfim_terms():
    H = gen_tfim(3, coupling=2.0, field=0.5)
    assert [t.letters for t in H.terms] == ["ZZI", "IZZ", "XII", "IXI", "IIX"]
    assert [t.coeff for t in H.terms] == [-2.0, -2.0, -0.5, -0.5, -0.5]


@pytest.mark.parametrize(
    "num_qubits, coupling, field, energy",
    [(2, 1.0, 0.0, -1.0), (4, 0.0, 1.0, -4.0), (5, 1.0, 0.0, -4.0), (1, 1.0, 1.0, -1.0)],
)
def test_tfim_limits(num_qubits, coupling, field, energy):
    assert exact_ground_energy(gen_tfim(num_qubits, coupling, field)) == pytest.approx(energy)


def test_tfim_two_sites():
    # -ZZ - X1 - X2 has ground energy -sqrt(5)
    assert exact_ground_energy(gen_tfim(2)) == pytest.approx(-np.sqrt(5))


def test_sparse_and_dense_agree():
    H = gen_tfim(8, coupling=0.7, field=1.3)
    dense = np.linalg.eigvalsh(H.to_dense())[0]
    assert exact_ground_energy(H) == pytest.approx(dense, abs=1e-8)


def test_exact_ground_energy_limit():
    with pytest.raises(DimensionError):
        exact_ground_energy(Hamiltonian(13, (PauliString("Z" * 13),)))


def test_tfim_size_limit():
    with pytest.raises(DimensionError):
        gen_tfim(13)
