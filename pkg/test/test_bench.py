import logging

import numpy as np
import pytest

from bench import (
    BenchResult,
    LemmaSample,
    _fit_envelope,
    bench_compression_sweep,
    bench_scaling,
    calibrate_lemma_constant,
    calibrate_merge_constants,
    commuting_lemma_gap,
    compression_counts,
    lemma_samples,
    lemma_slope,
    merge_samples,
    ratio_policy,
    write_results_csv,
    write_scaling_csv,
)
from circuit import build_hea
from constants import DEFAULT_LEMMA_C, LEMMA_MIN_SLOPE, SAFETY_FACTOR
from datasets import gen_tfim
from dualrep import Locality, LocalityPolicy
from pruner import delta_max
from train import TrainConfig, VQEObjective


def test_fit_envelope_single_feature():
    c = _fit_envelope([[1.0], [2.0], [3.0]], [0.5, 1.0, 1.6])
    assert c == pytest.approx([SAFETY_FACTOR * 1.6 / 3.0])


def test_fit_envelope_covers_every_sample(rng):
    features = rng.uniform(0.0, 1.0, size=(40, 2))
    errors = features @ np.array([0.3, 1.2]) * rng.uniform(0.2, 1.0, size=40)
    c = _fit_envelope(features, errors)
    assert np.all(c >= 0)
    assert np.all(errors <= features @ c / SAFETY_FACTOR + 1e-12)


def test_ratio_policy():
    assert ratio_policy(1, 6) == LocalityPolicy(Locality.SAME_QUBIT)
    assert ratio_policy(3, 6) == LocalityPolicy(Locality.QUBIT_BLOCK, 3)
    assert ratio_policy(4, 6) is None


@pytest.mark.parametrize(
    "policy, expected",
    [(LocalityPolicy(Locality.SAME_LAYER), (24, 6)), (LocalityPolicy(Locality.QUBIT_BLOCK, 2), (24, 12))],
)
def test_compression_counts(policy, expected):
    assert compression_counts(4, 2, policy) == expected


def test_bench_result_arithmetic():
    r = BenchResult("bas4", 288, 36, 0.9, 0.6, 0.85, reference_ft=0.95)
    assert r.compression == 8.0
    assert r.percent_left == pytest.approx(12.5)
    assert r.deviation_direct == pytest.approx(-0.3)
    assert r.deviation_ft == pytest.approx(-0.1)
    assert BenchResult("vqe", 4, 2, -1.0, -0.5).deviation_ft is None
    assert BenchResult("vqe", 4, 2, -1.0, -0.5, -0.9).deviation_ft == pytest.approx(0.1)


def test_results_csv(tmp_path):
    path = tmp_path / "results.csv"
    write_results_csv(path, [BenchResult("vqe", 12, 6, -4.0, -3.5, label="2x")])
    header, row = path.read_text().splitlines()
    assert header.split(",")[:4] == ["task", "label", "params_before", "params_after"]
    fields = dict(zip(header.split(","), row.split(",")))
    assert fields["compression"] == "2"
    assert fields["metric_ft"] == ""


def test_compression_sweep(caplog):
    objective = VQEObjective(gen_tfim(4))
    circuit = build_hea(4, 1, seed=2)
    with caplog.at_level(logging.WARNING, logger="bench"):
        results = bench_compression_sweep(circuit, objective, [1, 2, 3], TrainConfig(steps=3))
    assert [r.label for r in results] == ["1x", "2x"]
    assert "Skipping ratio 3x" in caplog.text
    first, second = results
    assert first.params_after == first.params_before == 12
    assert first.deviation_direct == pytest.approx(0.0, abs=1e-12)
    assert first.deviation_ft == pytest.approx(0.0, abs=1e-12)
    assert second.params_after == 6


def test_scaling_rows(tmp_path):
    rows, slope = bench_scaling([1, 2], num_qubits=3, repeats=1)
    assert [r.num_gates for r in rows] == [9, 18]
    assert np.isfinite(slope)
    path = tmp_path / "scaling.csv"
    write_scaling_csv(path, rows, slope)
    lines = path.read_text().splitlines()
    assert lines[0] == "num_gates,num_layers,seconds,threads"
    assert lines[-1].startswith("# loglog_slope,")


def test_commuting_pairs_have_exact_fast_distance(rng):
    assert commuting_lemma_gap(20, rng) <= 1e-9


def test_lemma_calibration(rng):
    samples = lemma_samples(20, rng)
    assert all(1e-6 <= s.eta * s.delta_x <= 1e-1 for s in samples)
    assert all(0.1 - 1e-12 <= s.delta_x <= 0.2 + 1e-12 for s in samples)
    c = calibrate_lemma_constant(samples)
    assert all(s.error <= c * s.eta * s.delta_x / SAFETY_FACTOR + 1e-15 for s in samples)


def test_lemma_error_linear_in_eta_delta(rng):
    samples = lemma_samples(300, rng)
    assert lemma_slope(samples) >= LEMMA_MIN_SLOPE
    assert max(s.error / (s.eta * s.delta_x) for s in samples) <= DEFAULT_LEMMA_C


def test_lemma_slope_of_exact_power_law():
    samples = [LemmaSample(x, 1.0, 3.0 * x) for x in np.logspace(-6, -1, 12)]
    assert lemma_slope(samples) == pytest.approx(1.0)


def test_merge_samples_respect_frozen_bound(rng):
    samples = merge_samples(15, rng)
    assert all(s.deviation <= delta_max(s.size, s.epsilon, s.eta) for s in samples)
    c1, c2 = calibrate_merge_constants(samples)
    assert c1 >= 0 and c2 >= 0


def test_commuting_merge_is_nearly_exact(rng):
    samples = merge_samples(5, rng, eps_range=(1e-10, 1e-9), commuting=True)
    assert max(s.deviation for s in samples) <= 1e-8
    assert all(s.eta == pytest.approx(0.0, abs=1e-20) for s in samples)
