"""
Benchmark harness: classification pipeline (train, prune, fine-tune),
compression sweeps, prune-phase scaling and calibration of the error-bound
constants.
"""
from collections import namedtuple
from dataclasses import dataclass, field, replace
import logging
from time import perf_counter

import numpy as np
from scipy.optimize import nnls
from scipy.stats import theilslopes
from tqdm import tqdm

from circuit import StateVector, build_hea
from constants import SAFETY_FACTOR
from datasets import gen_tfim
from dualrep import Locality, LocalityPolicy
from fsdist import ReferenceBatch, bch_diagnostics, distance_error, fs_rows
from pruner import MergeMode, PruneConfig, component_eta, merge_weights, merged_generator, prune
from qmath import Generator, random_anti_hermitian, random_su
from train import ClassificationObjective, GradMethod, VQEObjective, finetune
from utils import all_logging_disabled, worker_count, write_csv

logger = logging.getLogger(__name__)

# any epsilon >= pi/2 joins every candidate pair
MERGE_ALL_EPSILON = np.pi

PRUNE_PHASES = ("partition", "graph", "components", "merge")

ScalingRow = namedtuple("ScalingRow", ["num_gates", "num_layers", "seconds", "threads"])
LemmaSample = namedtuple("LemmaSample", ["eta", "delta_x", "error"])
MergeSample = namedtuple("MergeSample", ["size", "epsilon", "eta", "deviation"])


@dataclass
class BenchResult:
    """
    One benchmark row.

    Metrics are accuracies for classification and energies for VQE; ``metric_ft``
    is None when no fine-tuning was run.
    """

    task: str
    params_before: int
    params_after: int
    metric_before: float
    metric_no_ft: float
    metric_ft: float = None
    label: str = ""
    wall_times: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    reference_ft: float = None

    @property
    def compression(self):
        return self.params_before / self.params_after

    @property
    def percent_left(self):
        return 100.0 * self.params_after / self.params_before

    @property
    def deviation_direct(self):
        return self.metric_no_ft - self.metric_before

    @property
    def deviation_ft(self):
        """Fine-tuned metric against the unpruned circuit fine-tuned with the same budget."""
        if self.metric_ft is None:
            return None
        base = self.metric_before if self.reference_ft is None else self.reference_ft
        return self.metric_ft - base


RESULT_COLUMNS = [
    "task",
    "label",
    "params_before",
    "params_after",
    "percent_left",
    "compression",
    "metric_before",
    "metric_no_ft",
    "metric_ft",
    "deviation_direct",
    "deviation_ft",
    "seed",
    "threads",
]


def write_results_csv(path, results):
    write_csv(path, RESULT_COLUMNS, [{c: getattr(r, c) for c in RESULT_COLUMNS} for r in results], ".10g")


def write_scaling_csv(path, rows, slope):
    with open(path, "w", newline="") as fh:
        write_csv(fh, list(ScalingRow._fields), [row._asdict() for row in rows], ".6f")
        fh.write(f"# loglog_slope,{slope:.4f}\n")


def bench_classify(dataset, num_qubits, num_layers, prune_config, train_config, finetune_config, seed=0):
    """
    Train an ansatz, prune it once, then fine-tune the pruned circuit.

    Returns
    -------
    (BenchResult, dict)
        The result row and the training traces keyed ``train`` / ``finetune``.
    """
    times = {}
    circuit = build_hea(num_qubits, num_layers, seed)
    objective = ClassificationObjective(dataset, num_qubits)
    start = perf_counter()
    trained, train_trace = finetune(circuit, objective, train_config)
    times["train"] = perf_counter() - start
    _, acc_before = objective.evaluate(trained)

    pruned, report = prune(trained, objective, prune_config)
    times.update({f"prune_{k}": v for k, v in report.timing.items()})
    _, acc_no_ft = objective.evaluate(pruned)

    start = perf_counter()
    tuned, ft_trace = finetune(pruned, objective, finetune_config)
    times["finetune"] = perf_counter() - start
    _, acc_ft = objective.evaluate(tuned)
    result = BenchResult(
        task=dataset.name,
        params_before=report.params_before,
        params_after=report.params_after,
        metric_before=acc_before,
        metric_no_ft=acc_no_ft,
        metric_ft=acc_ft,
        label=f"{num_qubits}q{num_layers}L",
        wall_times=times,
        seed=seed,
        threads=worker_count(prune_config.threads),
    )
    logger.info(
        f"{result.task}: {result.params_before} -> {result.params_after} params "
        f"({result.percent_left:.1f}% / {result.compression:.1f}x), accuracy "
        f"{acc_before:.3f} -> {acc_no_ft:.3f} -> {acc_ft:.3f}"
    )
    return result, {"train": train_trace, "finetune": ft_trace}


def compression_counts(num_qubits, num_layers, policy, seed=0, batch_size=4):
    """
    Parameter counts before and after merging every subgroup of an HEA.

    The counts depend on the grouping alone; a small TFIM objective only
    supplies sensitivities.
    """
    circuit = build_hea(num_qubits, num_layers, seed)
    config = PruneConfig(
        epsilon=MERGE_ALL_EPSILON,
        locality_policy=policy,
        merge_mode=MergeMode.TIE,
        batch_size=batch_size,
        sensitivity_method=GradMethod.ADJOINT,
        seed=seed,
    )
    _, report = prune(circuit, VQEObjective(gen_tfim(num_qubits)), config)
    return report.params_before, report.params_after


def ratio_policy(ratio, num_qubits):
    """Grouping that merges ``ratio`` qubits per layer and axis; None if unachievable."""
    if ratio == 1:
        return LocalityPolicy(Locality.SAME_QUBIT)
    if ratio < 1 or num_qubits % ratio:
        return None
    return LocalityPolicy(Locality.QUBIT_BLOCK, ratio)


def bench_compression_sweep(circuit, objective, ratios, finetune_config, seed=0, task="vqe"):
    """
    Prune one trained circuit at several compression ratios.

    For each ratio the circuit is merged over blocks of ``ratio`` qubits, the
    metric is recorded directly and after fine-tuning. The unpruned circuit is
    fine-tuned with the same budget to give the post-fine-tuning baseline.
    """
    metric_before = objective.metric(circuit)
    tuned_base, _ = finetune(circuit, objective, finetune_config)
    reference_ft = objective.metric(tuned_base)
    results = []
    for ratio in tqdm(ratios, disable=not finetune_config.progress):
        policy = ratio_policy(ratio, circuit.num_qubits)
        if policy is None:
            logger.warning(f"Skipping ratio {ratio}x: it does not divide {circuit.num_qubits} qubits")
            continue
        config = PruneConfig(
            epsilon=MERGE_ALL_EPSILON,
            locality_policy=policy,
            merge_mode=MergeMode.TIE,
            sensitivity_method=GradMethod.ADJOINT,
            seed=seed,
        )
        with all_logging_disabled():
            pruned, report = prune(circuit, objective, config)
            tuned, _ = finetune(pruned, objective, replace(finetune_config, progress=False))
        result = BenchResult(
            task=task,
            params_before=report.params_before,
            params_after=report.params_after,
            metric_before=metric_before,
            metric_no_ft=objective.metric(pruned),
            metric_ft=objective.metric(tuned),
            label=f"{ratio}x",
            wall_times=dict(report.timing),
            seed=seed,
            threads=worker_count(config.threads),
            reference_ft=reference_ft,
        )
        logger.info(
            f"{result.label}: {result.params_after} params, direct deviation "
            f"{result.deviation_direct:.3e}, fine-tuned deviation {result.deviation_ft:.3e}"
        )
        results.append(result)
    return results


def bench_scaling(layer_counts, num_qubits=8, max_neighbors=5, repeats=3, threads=None, seed=0):
    """
    Wall time of the prune phases (partition, graph, components, merge) against
    the number of parameterized gates.

    Sensitivities are computed with the adjoint sweep and excluded from the time,
    as is training.

    Returns
    -------
    (list of ScalingRow, float)
        Rows and the log-log slope of time against gate count.
    """
    rows = []
    hamiltonian = gen_tfim(num_qubits)
    for layers in tqdm(layer_counts):
        circuit = build_hea(num_qubits, layers, seed)
        config = PruneConfig(
            max_neighbors=max_neighbors,
            sensitivity_method=GradMethod.ADJOINT,
            seed=seed,
            threads=threads,
        )
        best = np.inf
        with all_logging_disabled():
            for _ in range(repeats):
                _, report = prune(circuit, VQEObjective(hamiltonian), config)
                best = min(best, sum(report.timing.get(p, 0.0) for p in PRUNE_PHASES))
        rows.append(ScalingRow(circuit.parameter_count(), layers, best, worker_count(threads)))
        logger.info(f"N={rows[-1].num_gates}: {best:.4f} s")
    slope = float(np.polyfit(np.log([r.num_gates for r in rows]), np.log([r.seconds for r in rows]), 1)[0])
    logger.info(f"Log-log slope of prune time: {slope:.3f}")
    return rows, slope


def _random_state(num_qubits, rng):
    return StateVector(random_su(2**num_qubits, rng)[:, 0])


def _scaled_generator(support, norm, rng):
    return Generator.from_matrix(support, random_anti_hermitian(2 ** len(support), rng, norm))


def lemma_samples(count, rng, low=1e-6, high=1e-1, num_qubits=1, core_norms=(2e-5, 0.25), step_norms=(0.1, 0.2)):
    """
    Non-commuting pairs X_j = X_i + D and the distance error of the accelerated evaluation.

    ||X_i|| is log-uniform over ``core_norms`` and ||D|| uniform over ``step_norms``;
    pairs are kept when eta * delta_x lies in [low, high].
    """
    support = tuple(range(num_qubits))
    out = []
    while len(out) < count:
        xi = _scaled_generator(support, np.exp(rng.uniform(*np.log(core_norms))), rng)
        step = _scaled_generator(support, rng.uniform(*step_norms), rng)
        xj = Generator.from_matrix(support, xi.matrix + step.matrix)
        diag = bch_diagnostics(xi, xj)
        if not low <= diag.eta * diag.delta_x <= high:
            continue
        error = distance_error(xi, xj, _random_state(num_qubits, rng))
        out.append(LemmaSample(diag.eta, diag.delta_x, error))
    return out


def lemma_slope(samples):
    """Theil-Sen slope of log(error) against log(eta * delta_x)."""
    x = np.log([s.eta * s.delta_x for s in samples])
    y = np.log([max(s.error, np.finfo(float).tiny) for s in samples])
    return float(theilslopes(y, x)[0])


def commuting_lemma_gap(count, rng, num_qubits=1):
    """max |fast - exact| distance over commuting generator pairs."""
    dim = 2**num_qubits
    support = tuple(range(num_qubits))
    worst = 0.0
    for _ in range(count):
        h = 1j * random_anti_hermitian(dim, rng, 1.0)
        a, b = rng.uniform(-1.0, 1.0, size=2)
        xi = Generator.from_matrix(support, -1j * a * h)
        xj = Generator.from_matrix(support, -1j * (b * h + 0.3 * b * (h @ h - np.trace(h @ h) / dim * np.eye(dim))))
        worst = max(worst, distance_error(xi, xj, _random_state(num_qubits, rng)))
    return worst


def _fit_envelope(features, errors):
    """
    Constants c >= 0 with errors <= features @ c on every sample, times the safety factor.

    Non-negative least squares fixes the shape of c; it is then scaled so the
    bound touches the worst sample.
    """
    features = np.asarray(features, dtype=float)
    errors = np.asarray(errors, dtype=float)
    coef, _ = nnls(features, errors)
    if not np.any(coef > 0):
        coef = np.ones(features.shape[1])
    bound = features @ coef
    mask = bound > 0
    scale = np.max(errors[mask] / bound[mask]) if np.any(mask) else 1.0
    return SAFETY_FACTOR * scale * coef


def calibrate_lemma_constant(samples):
    feature = np.array([[s.eta * s.delta_x] for s in samples])
    return float(_fit_envelope(feature, [s.error for s in samples])[0])


def merge_samples(count, rng, eps_range=(1e-3, 0.3), sizes=(2, 8), commuting=False, num_qubits=2, batch=8):
    """
    Contiguous near-identity components on one support: measured distance between
    the original product and the merged gate, with epsilon and eta.
    """
    dim = 2**num_qubits
    support = tuple(range(num_qubits))
    amps = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    refs = ReferenceBatch(amps / np.linalg.norm(amps, axis=1, keepdims=True), num_qubits)
    out = []
    for _ in range(count):
        k = int(rng.integers(sizes[0], sizes[1] + 1))
        eps = float(np.exp(rng.uniform(np.log(eps_range[0]), np.log(eps_range[1]))))
        if commuting:
            base = random_anti_hermitian(dim, rng, 1.0)
            mats = [base * (eps / 2) * rng.uniform(-1.0, 1.0) for _ in range(k)]
        else:
            mats = [random_anti_hermitian(dim, rng, (eps / 2) * rng.uniform(0.1, 1.0)) for _ in range(k)]
        gens = [Generator.from_matrix(support, m) for m in mats]
        members = list(range(k))
        sens = dict(zip(members, rng.uniform(0.0, 1.0, size=k)))
        core, weights = merge_weights(members, sens)
        x_new = merged_generator(gens[core], [(w, gens[m]) for m, w in zip(members, weights) if m != core])
        before = refs.amps
        for g in gens:
            before = before @ g.unitary().T
        after = refs.amps @ x_new.unitary().T
        deviation = float(np.max(fs_rows(before, after)))
        out.append(MergeSample(k, eps, component_eta(gens), deviation))
    return out


def calibrate_merge_constants(samples):
    """(C1, C2) enveloping deviation <= C1 |C| epsilon + C2 |C|^2 eta, safety factor applied."""
    features = np.array([[s.size * s.epsilon, s.size**2 * s.eta] for s in samples])
    c1, c2 = _fit_envelope(features, [s.deviation for s in samples])
    return float(c1), float(c2)
