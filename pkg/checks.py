"""
Verification suites run by ``cli verify``, one registered check per property.

Each check takes ``(quick, seed)`` and returns a CheckResult; ``quick`` shrinks
sample counts and problem sizes.
"""
from collections import deque, namedtuple
import logging
from time import perf_counter

import numpy as np

from bench import (
    MERGE_ALL_EPSILON,
    bench_classify,
    bench_compression_sweep,
    bench_scaling,
    calibrate_lemma_constant,
    calibrate_merge_constants,
    commuting_lemma_gap,
    compression_counts,
    lemma_samples,
    lemma_slope,
    merge_samples,
)
from circuit import Hamiltonian, build_hea
from constants import DEFAULT_C1, DEFAULT_C2, DEFAULT_LEMMA_C, LEMMA_MIN_SLOPE
from datasets import exact_ground_energy, gen_bars_and_stripes, gen_tfim
from dualrep import Locality, LocalityPolicy, subgroup_label
from errors import AcceptanceError
from fsdist import ReferenceBatch, max_exact_distance
from pruner import MergeMode, PruneConfig, build_graph, components, delta_max, partition, prune
from qmath import PauliString, mat_exp, op_norm, principal_log, random_su
from store import CHECK_REGISTRY, register_check
from train import GradMethod, TrainConfig, VQEObjective, finetune, grad
from utils import all_logging_disabled, make_rng

logger = logging.getLogger(__name__)

CheckResult = namedtuple("CheckResult", ["name", "passed", "detail", "seconds"])


def _haar_batch(batch, num_qubits, rng):
    dim = 2**num_qubits
    amps = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    return ReferenceBatch(amps / np.linalg.norm(amps, axis=1, keepdims=True), num_qubits)


@register_check("exp-log")
def check_exp_log(quick, seed):
    """exp(principal_log(U)) reproduces random SU(2) and SU(4) elements."""
    rng = make_rng(seed)
    count = 100 if quick else 1000
    worst = 0.0
    start = perf_counter()
    for dim in (2, 4):
        done = 0
        while done < count:
            U = random_su(dim, rng)
            if np.max(np.abs(np.angle(np.linalg.eigvals(U)))) > np.pi - 1e-3:
                continue
            worst = max(worst, op_norm(mat_exp(principal_log(U)) - U))
            done += 1
    elapsed = perf_counter() - start
    return worst <= 1e-10 and elapsed < 10.0, f"max error {worst:.2e} over {2 * count} unitaries in {elapsed:.2f} s"


@register_check("lemma")
def check_lemma(quick, seed):
    """Accelerated distance error: exact for commuting pairs, linear in eta delta_x otherwise."""
    rng = make_rng(seed)
    count = 300 if quick else 500
    gap = commuting_lemma_gap(50 if quick else 200, rng)
    calibrated = calibrate_lemma_constant(lemma_samples(count, rng))
    samples = lemma_samples(count, rng)
    ratio = max(s.error / (s.eta * s.delta_x) for s in samples)
    slope = lemma_slope(samples)
    passed = gap <= 1e-9 and ratio <= calibrated and slope >= LEMMA_MIN_SLOPE
    return passed, (
        f"commuting gap {gap:.2e}; worst error/(eta*delta) {ratio:.3f} "
        f"(calibrated C={calibrated:.3f}, frozen {DEFAULT_LEMMA_C}); log-log slope {slope:.3f}"
    )


@register_check("subgroups")
def check_subgroups(quick, seed):
    """Every redundancy-graph edge joins gates with equal subgroup labels."""
    rng = make_rng(seed)
    circuits = [build_hea(3, 3, seed), build_hea(4, 2, seed + 1)]
    # merged GENERIC gates alongside rotations
    with all_logging_disabled():
        mixed, _ = prune(
            build_hea(3, 2, seed + 2),
            VQEObjective(gen_tfim(3)),
            PruneConfig(epsilon=MERGE_ALL_EPSILON, merge_mode=MergeMode.REPLACE, sensitivity_method=GradMethod.ADJOINT),
        )
    circuits.append(mixed)
    policies = [LocalityPolicy(k) for k in Locality if k != Locality.QUBIT_BLOCK] + [LocalityPolicy(Locality.QUBIT_BLOCK, 2)]
    edges = 0
    for circuit in circuits:
        refs = _haar_batch(4, circuit.num_qubits, rng)
        for policy in policies:
            config = PruneConfig(epsilon=MERGE_ALL_EPSILON, locality_policy=policy, max_neighbors=32)
            for subgroup in partition(circuit, policy):
                graph = build_graph(subgroup, circuit, refs, config)
                for i, j in graph.edges:
                    if subgroup_label(circuit.gate(i), policy) != subgroup_label(circuit.gate(j), policy):
                        raise AcceptanceError(f"Edge ({i}, {j}) crosses subgroups under {policy}")
                    edges += 1
    return True, f"{edges} edges checked over {len(circuits)} circuits and {len(policies)} policies"


def _clustered_circuit(rng, max_params=24):
    num_qubits = int(rng.integers(2, 5))
    layers = int(rng.integers(1, max(1, max_params // (3 * num_qubits)) + 1))
    circuit = build_hea(num_qubits, layers, int(rng.integers(2**31)))
    centers = rng.uniform(-np.pi, np.pi, size=3)
    count = circuit.parameter_count()
    values = centers[rng.integers(0, 3, size=count)] + rng.normal(0.0, 0.1, size=count)
    return circuit.with_parameter_values(values)


def _closure(nodes, linked):
    """Connected components of the relation ``linked`` by breadth-first search."""
    unseen = set(nodes)
    out = []
    for start in sorted(nodes):
        if start not in unseen:
            continue
        unseen.discard(start)
        queue = deque([start])
        group = [start]
        while queue:
            a = queue.popleft()
            for b in sorted(unseen):
                if linked(a, b):
                    unseen.discard(b)
                    queue.append(b)
                    group.append(b)
        out.append(sorted(group))
    return out


@register_check("components")
def check_components(quick, seed):
    """Exhaustive-neighbor components equal the transitive closure of exact pairwise redundancy."""
    rng = make_rng(seed)
    trials = 10 if quick else 50
    policy = LocalityPolicy(Locality.GLOBAL)
    mismatches = 0
    for _ in range(trials):
        circuit = _clustered_circuit(rng)
        refs = _haar_batch(4, circuit.num_qubits, rng)
        for epsilon in (0.01, 0.1, 0.5):
            config = PruneConfig(epsilon=epsilon, locality_policy=policy, use_fast_distance=False, max_neighbors=24)
            for subgroup in partition(circuit, policy):
                found = components(build_graph(subgroup, circuit, refs, config))
                distances = {}

                def linked(a, b):
                    key = (min(a, b), max(a, b))
                    if key not in distances:
                        distances[key] = max_exact_distance(
                            circuit.gate(key[0]), circuit.gate(key[1]), refs.amps, refs.num_qubits
                        )
                    return distances[key] <= epsilon

                if found != _closure(subgroup.nodes, linked):
                    mismatches += 1
    return mismatches == 0, f"{mismatches} mismatching partitions over {trials} circuits x 3 thresholds"


@register_check("merge-bound")
def check_merge_bound(quick, seed):
    """Merged generators stay within C1 |C| eps + C2 |C|^2 eta of the original product."""
    rng = make_rng(seed)
    samples = merge_samples(30 if quick else 100, rng)
    violations = [
        s for s in samples if s.deviation > delta_max(s.size, s.epsilon, s.eta, DEFAULT_C1, DEFAULT_C2)
    ]
    commuting = merge_samples(20 if quick else 50, rng, eps_range=(1e-10, 1e-9), commuting=True)
    tiny = max(s.deviation for s in commuting)
    c1, c2 = calibrate_merge_constants(merge_samples(30 if quick else 100, rng))

    # interleaved HEA layers: measured only
    with all_logging_disabled():
        _, report = prune(
            build_hea(4, 2, seed),
            VQEObjective(gen_tfim(4)),
            PruneConfig(epsilon=0.5, sensitivity_method=GradMethod.ADJOINT, seed=seed),
        )
    merged = report.merged_components
    over = sum(c.deviation > c.delta_max for c in merged)
    detail = (
        f"{len(violations)} violations in {len(samples)} components; commuting deviation {tiny:.1e}; "
        f"calibrated C1={c1:.3f} C2={c2:.3f}; interleaved layers: {over}/{len(merged)} above bound"
    )
    return not violations and tiny <= 1e-8, detail


@register_check("layer-counts")
def check_layer_counts(quick, seed):
    """Per-layer merging of 8- and 10-qubit 12-layer ansatze: 288 -> 36 and 360 -> 36."""
    expected = {8: (288, 36), 10: (360, 36)}
    found = {}
    with all_logging_disabled():
        for num_qubits in expected:
            found[num_qubits] = compression_counts(num_qubits, 12, LocalityPolicy(Locality.SAME_LAYER), seed)
    parts = [f"{n}q: {b} -> {a} ({100 * a / b:.1f}% / {b / a:.1f}x)" for n, (b, a) in found.items()]
    return found == expected, "; ".join(parts)


@register_check("bas")
def check_bas(quick, seed):
    """Bars-and-stripes: train, prune, fine-tune; accuracy drops then recovers."""
    num_qubits, layers = (4, 6) if quick else (8, 12)
    seeds = [seed] if quick else [seed, seed + 1, seed + 2]
    train_steps, ft_steps = (150, 200) if quick else (300, 200)
    rows = []
    for s in seeds:
        with all_logging_disabled():
            result, _ = bench_classify(
                gen_bars_and_stripes(4, s),
                num_qubits,
                layers,
                PruneConfig(epsilon=MERGE_ALL_EPSILON, sensitivity_method=GradMethod.ADJOINT, seed=s),
                TrainConfig(steps=train_steps, seed=s),
                TrainConfig(steps=ft_steps, seed=s + 1000),
                seed=s,
            )
        rows.append((result.metric_before, result.metric_no_ft, result.metric_ft))
    before, no_ft, ft = np.mean(rows, axis=0)
    passed = before >= 0.70 and no_ft < before and ft >= before - 0.10
    return passed, f"mean accuracy {before:.3f} -> {no_ft:.3f} -> {ft:.3f} over {len(seeds)} seeds"


@register_check("vqe-sweep")
def check_vqe_sweep(quick, seed):
    """TFIM compression sweep: lossless at 1x, aggressive ratios not recoverable."""
    num_qubits, layers, steps, ft_steps = (4, 2, 150, 40) if quick else (6, 4, 400, 100)
    ratios = [r for r in (1, 2, 3, 4, 6) if num_qubits % r == 0]
    objective = VQEObjective(gen_tfim(num_qubits))
    with all_logging_disabled():
        trained, _ = finetune(build_hea(num_qubits, layers, seed), objective, TrainConfig(steps=steps, seed=seed))
        results = bench_compression_sweep(trained, objective, ratios, TrainConfig(steps=ft_steps, seed=seed), seed)
    by_label = {r.label: r for r in results}
    first, mild, worst = by_label["1x"], by_label["2x"], results[-1]
    passed = (
        abs(first.deviation_direct) <= 1e-3
        and abs(first.deviation_ft) <= 1e-4
        and worst.deviation_ft > mild.deviation_ft
    )
    rows = ", ".join(f"{r.label}: {r.deviation_direct:+.4f}/{r.deviation_ft:+.4f}" for r in results)
    return passed, f"dE direct/ft {rows}"


@register_check("scaling")
def check_scaling(quick, seed):
    """Prune-phase time grows linearly in the gate count at bounded degree."""
    layers, num_qubits = ((2, 4, 8), 6) if quick else ((4, 8, 16, 32), 8)
    start = perf_counter()
    rows, slope = bench_scaling(layers, num_qubits=num_qubits, seed=seed)
    elapsed = perf_counter() - start
    sizes = ", ".join(f"N={r.num_gates}: {r.seconds:.3f}s" for r in rows)
    return slope <= 1.2 and elapsed < 60.0, f"slope {slope:.3f} ({sizes}); total {elapsed:.1f} s"


def _random_hamiltonian(num_qubits, rng, terms=4):
    letters = rng.choice(list("IXYZ"), size=(terms, num_qubits))
    return Hamiltonian(
        num_qubits,
        tuple(PauliString("".join(row) if set(row) != {"I"} else "Z" * num_qubits, rng.normal()) for row in letters),
    )


@register_check("gradients")
def check_gradients(quick, seed):
    """Parameter-shift, adjoint and finite differences agree; energies respect the variational bound."""
    rng = make_rng(seed)
    trials = 10 if quick else 100
    worst = 0.0
    floor_gap = np.inf
    for _ in range(trials):
        num_qubits = int(rng.integers(2, 4))
        circuit = build_hea(num_qubits, int(rng.integers(1, 3)), int(rng.integers(2**31)))
        hamiltonian = _random_hamiltonian(num_qubits, rng)
        objective = VQEObjective(hamiltonian)
        shift = grad(circuit, objective, GradMethod.PARAM_SHIFT)
        scale = max(1.0, np.linalg.norm(shift))
        for other in (GradMethod.FINITE_DIFF, GradMethod.ADJOINT):
            worst = max(worst, np.linalg.norm(shift - grad(circuit, objective, other)) / scale)
        floor_gap = min(floor_gap, objective(circuit) - exact_ground_energy(hamiltonian))
    passed = worst <= 1e-6 and floor_gap >= -1e-9
    return passed, f"max relative gradient mismatch {worst:.2e}; min E - E0 = {floor_gap:.2e}"


def run_checks(names=None, quick=False, seed=0):
    """
    Run registered checks in registration order.

    Raises
    ------
    ValueError
        For an unknown check name.
    """
    names = list(CHECK_REGISTRY) if not names else list(names)
    unknown = [n for n in names if n not in CHECK_REGISTRY]
    if unknown:
        raise ValueError(f"Unknown checks {unknown}; available: {list(CHECK_REGISTRY)}")
    results = []
    for name in names:
        start = perf_counter()
        try:
            passed, detail = CHECK_REGISTRY[name](quick, seed)
        except AcceptanceError as e:
            passed, detail = False, str(e)
        results.append(CheckResult(name, bool(passed), detail, perf_counter() - start))
        logger.info(f"{name}: {'PASS' if passed else 'FAIL'} ({detail})")
    return results
