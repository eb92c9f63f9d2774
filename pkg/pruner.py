"""
One-shot structured pruning: partition gates into Lie subgroups, build a
redundancy graph per subgroup, cluster its connected components and merge
each cluster in the Lie algebra around its most loss-sensitive gate.
"""
from collections import namedtuple
from dataclasses import asdict, dataclass, field
from enum import Enum
import itertools
import json
import logging
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from circuit import GateKind, ROTATION_AXES, apply_gate_batch
from constants import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_C1,
    DEFAULT_C2,
    DEFAULT_EPSILON,
    DEFAULT_ETA_CAP,
    DEFAULT_MAX_NEIGHBORS,
    DEFAULT_REDUCTION,
    FD_STEP,
    ZERO_SENSITIVITY,
)
from dualrep import LocalityPolicy, extract_generator, subgroup_label
from errors import AcceptanceError
from fsdist import ReferenceBatch, bch_diagnostics, fs_rows, max_exact_distance, max_fast_distance
from qmath import Generator
from train import GradMethod, rotation_derivatives
from utils import make_rng, parallel_map, phase_timer, write_csv

logger = logging.getLogger(__name__)

Subgroup = namedtuple("Subgroup", ["label", "nodes"])
PairRecord = namedtuple("PairRecord", ["subgroup", "i", "j", "distance", "method", "eta"])


class MergeMode(str, Enum):
    REPLACE = "replace"
    TIE = "tie"


@dataclass
class PruneConfig:
    epsilon: float = DEFAULT_EPSILON
    eta_cap: float = DEFAULT_ETA_CAP
    batch_size: int = DEFAULT_BATCH_SIZE
    locality_policy: LocalityPolicy = field(default_factory=LocalityPolicy)
    merge_mode: MergeMode = MergeMode.TIE
    use_fast_distance: bool = True
    max_neighbors: int = DEFAULT_MAX_NEIGHBORS
    seed: int = 0
    reduction: str = DEFAULT_REDUCTION
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2
    sensitivity_method: GradMethod = GradMethod.PARAM_SHIFT
    emit_distances: bool = False
    threads: int = None

    def __post_init__(self):
        if isinstance(self.locality_policy, str):
            self.locality_policy = LocalityPolicy.parse(self.locality_policy)
        self.merge_mode = MergeMode(self.merge_mode)
        self.sensitivity_method = GradMethod(self.sensitivity_method)
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.eta_cap < 0:
            raise ValueError(f"eta_cap must be >= 0, got {self.eta_cap}")
        if self.max_neighbors < 1:
            raise ValueError("max_neighbors must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")

    def to_dict(self):
        out = asdict(self)
        out["locality_policy"] = str(self.locality_policy)
        out["merge_mode"] = self.merge_mode.value
        out["sensitivity_method"] = self.sensitivity_method.value
        return out


class UnionFind:
    """
    Disjoint sets with union by rank and path compression.

    Parameters
    ----------
    items : iterable of hashable
    """

    def __init__(self, items):
        self._leader = {s: s for s in items}
        self._rank = {s: 0 for s in self._leader}
        self.num_sets = len(self._leader)

    def find(self, s):
        path = [s]
        parent = self._leader[s]
        while parent != self._leader[parent]:
            path.append(parent)
            parent = self._leader[parent]
        for a in path:
            self._leader[a] = parent
        return parent

    def union(self, a, b):
        s1, s2 = self.find(a), self.find(b)
        if s1 == s2:
            return
        if self._rank[s2] > self._rank[s1]:
            s1, s2 = s2, s1
        if self._rank[s1] == self._rank[s2]:
            self._rank[s1] += 1
        self._leader[s2] = s1
        self.num_sets -= 1

    def groups(self):
        """Sets as sorted lists, ordered by smallest member."""
        out = {}
        for s in self._leader:
            out.setdefault(self.find(s), []).append(s)
        return sorted((sorted(members) for members in out.values()), key=lambda m: m[0])


@dataclass
class RedundancyGraph:
    """
    Undirected graph of epsilon-redundant gates inside one subgroup.

    ``nodes`` are node ids (the smallest gate id of a tie group); ``edges`` maps
    ``(i, j)`` with ``i < j`` to the estimated distance.
    """

    label: object
    nodes: tuple
    edges: dict = field(default_factory=dict)

    def add_edge(self, i, j, weight):
        self.edges[(min(i, j), max(i, j))] = float(weight)

    def has_edge(self, i, j):
        return (min(i, j), max(i, j)) in self.edges

    def neighbors(self, i):
        return sorted(b if a == i else a for a, b in self.edges if i in (a, b))

    @property
    def max_degree_observed(self):
        degree = dict.fromkeys(self.nodes, 0)
        for a, b in self.edges:
            degree[a] += 1
            degree[b] += 1
        return max(degree.values(), default=0)

    def summary(self):
        return {
            "subgroup": str(self.label),
            "nodes": len(self.nodes),
            "edges": len(self.edges),
            "max_degree": self.max_degree_observed,
        }


@dataclass
class ComponentReport:
    core: int
    members: list
    alphas: list
    gate_ids: list
    eta: float
    delta_max: float
    deviation: float
    contiguous: bool


@dataclass
class PruneReport:
    """
    Outcome of one pruning pass.

    ``alphas`` of a component are the sensitivity-normalized weights of all its
    members (they sum to 1); the core enters the merged generator with weight 1
    and every other member with its alpha.
    """

    components: list
    params_before: int
    params_after: int
    timing: dict
    graphs: list
    config: dict
    pairs: list = field(default_factory=list)

    @property
    def compression(self):
        return self.params_before / self.params_after if self.params_after else float("inf")

    @property
    def delta_max_per_component(self):
        return [c.delta_max for c in self.components]

    @property
    def merged_components(self):
        return [c for c in self.components if len(c.members) > 1]

    def to_dict(self):
        return {
            "params_before": self.params_before,
            "params_after": self.params_after,
            "compression": self.compression,
            "components": [asdict(c) for c in self.components],
            "timing": dict(self.timing),
            "graphs": list(self.graphs),
            "config": dict(self.config),
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def write_distances(self, path):
        write_csv(path, list(PairRecord._fields), [p._asdict() for p in self.pairs])


def circuit_nodes(circuit):
    """Node id -> member gate ids; a tie group is one node keyed by its smallest id."""
    nodes = {}
    for gate_ids in circuit.tie_groups().values():
        nodes[min(gate_ids)] = tuple(sorted(gate_ids))
    for g in circuit.parameterized_gates():
        if g.tie is None:
            nodes[g.id] = (g.id,)
    return dict(sorted(nodes.items()))


def partition(circuit, policy):
    """
    Split the parameterized gates into subgroups by SubgroupLabel.

    Returns
    -------
    list of Subgroup
        In order of each subgroup's smallest node id; CNOTs are excluded.
    """
    groups = {}
    for node in circuit_nodes(circuit):
        label = subgroup_label(circuit.gate(node), policy)
        groups.setdefault(label, []).append(node)
    subgroups = [Subgroup(label, tuple(nodes)) for label, nodes in groups.items()]
    return sorted(subgroups, key=lambda s: s.nodes[0])


def _candidate_pairs(generators, nodes, max_neighbors):
    patterns = sorted({p for n in nodes for p in generators[n].signature}) or ["I"]
    points = np.array([generators[n].coeff_vector(patterns) for n in nodes])
    k = min(max_neighbors + 1, len(nodes))
    _, index = cKDTree(points).query(points, k=k)
    index = np.asarray(index).reshape(len(nodes), -1)
    pairs = set()
    for a, row in enumerate(index):
        for b in row:
            if b != a:
                pairs.add((nodes[min(a, b)], nodes[max(a, b)]))
    return sorted(pairs)


def build_graph(subgroup, circuit, refs, config, records=None):
    """
    Redundancy graph of one subgroup.

    Each node is compared with its ``max_neighbors`` nearest nodes in Pauli
    coefficient space; an edge is added when the max-over-batch distance between
    the two gates' outputs is at most epsilon.

    Raises
    ------
    AcceptanceError
        If an edge would join gates with different subgroup labels.
    """
    nodes = subgroup.nodes
    graph = RedundancyGraph(subgroup.label, nodes)
    if len(nodes) < 2:
        return graph
    gates = {n: circuit.gate(n) for n in nodes}
    generators = {n: extract_generator(gates[n]) for n in nodes}
    for i, j in _candidate_pairs(generators, nodes, config.max_neighbors):
        xi, xj = generators[i], generators[j]
        eta = bch_diagnostics(xi, xj).eta
        if config.use_fast_distance and eta <= config.eta_cap:
            distance = max_fast_distance(xi, xj, refs, config.reduction)
            method = "fast"
        else:
            distance = max_exact_distance(gates[i], gates[j], refs.amps, refs.num_qubits)
            method = "exact"
        logger.debug(f"{subgroup.label}: d({i}, {j}) = {distance:.6g} ({method}, eta={eta:.3g})")
        if records is not None:
            records.append(PairRecord(str(subgroup.label), i, j, distance, method, eta))
        if distance <= config.epsilon:
            label_i = subgroup_label(gates[i], config.locality_policy)
            label_j = subgroup_label(gates[j], config.locality_policy)
            if label_i != label_j:
                raise AcceptanceError(f"Edge ({i}, {j}) joins subgroups {label_i} and {label_j}")
            graph.add_edge(i, j, distance)
    return graph


def components(graph):
    """Connected components, each sorted, ordered by smallest member id."""
    uf = UnionFind(graph.nodes)
    for i, j in graph.edges:
        uf.union(i, j)
    return uf.groups()


def _generic_sensitivity(circuit, gate_ids, objective):
    gate = circuit.gate(gate_ids[0])
    coeffs = gate.generator_override.coeff_map
    squares = 0.0
    for pattern, value in coeffs.items():
        losses = []
        for delta in (FD_STEP, -FD_STEP):
            gen = Generator.from_coeff_map(gate.qubits, {**coeffs, pattern: value + delta})
            mapping = {
                gid: circuit.gate(gid).replace(generator_override=gen.on_support(circuit.gate(gid).qubits))
                for gid in gate_ids
            }
            losses.append(objective(circuit.replace_gates(mapping)))
        squares += ((losses[0] - losses[1]) / (2 * FD_STEP)) ** 2
    return float(np.sqrt(squares))


def sensitivities(circuit, objective, nodes, method=GradMethod.PARAM_SHIFT):
    """
    Lie sensitivity of every node: the norm of the loss gradient with respect to
    the node's generator coordinates.

    For rotations the single coordinate is theta/2, so the sensitivity is
    2 |dL/dtheta| (summed over a tie group); GENERIC nodes use central finite
    differences over their Pauli coefficients.

    Parameters
    ----------
    nodes : dict
        Node id -> member gate ids.
    """
    rotation_ids = [gid for ids in nodes.values() for gid in ids if circuit.gate(gid).kind in ROTATION_AXES]
    derivs = rotation_derivatives(circuit, objective, method, rotation_ids)
    out = {}
    for node, ids in nodes.items():
        if circuit.gate(node).kind == GateKind.GENERIC:
            out[node] = _generic_sensitivity(circuit, ids, objective)
        else:
            out[node] = 2.0 * abs(sum(derivs[gid] for gid in ids))
        logger.debug(f"Sensitivity of node {node}: {out[node]:.6g}")
    return out


def sensitivity(gate, circuit, objective, method=GradMethod.PARAM_SHIFT):
    return sensitivities(circuit, objective, {gate.id: (gate.id,)}, method)[gate.id]


def merge_weights(members, sens):
    """
    Core node and the sensitivity-normalized weights of all members.

    The core has the largest sensitivity (ties to the smallest id); weights fall
    back to uniform when every sensitivity is at most 1e-12. A singleton is its
    own core and needs no sensitivity.
    """
    if not members:
        raise ValueError("Cannot merge an empty component")
    if len(members) == 1:
        return members[0], np.ones(1)
    values = np.array([sens[m] for m in members], dtype=float)
    core = members[int(np.argmax(values))]
    total = values.sum()
    if np.all(values <= ZERO_SENSITIVITY):
        weights = np.full(len(members), 1.0 / len(members))
    else:
        weights = values / total
    return core, weights


def merged_generator(core_generator, weighted_others):
    """X_new = X_core + sum(alpha_m X_m) in the core's local algebra."""
    return Generator.combine(core_generator.support, [(1.0, core_generator)] + list(weighted_others))


def delta_max(component, epsilon, eta, c1=DEFAULT_C1, c2=DEFAULT_C2):
    """Merge-error bound C1 |C| epsilon + C2 |C|^2 eta."""
    k = component if isinstance(component, int) else len(component)
    return c1 * k * epsilon + c2 * k * k * eta


def component_eta(generators):
    """Largest pairwise commutator norm within a component."""
    return max((bch_diagnostics(a, b).eta for a, b in itertools.combinations(generators, 2)), default=0.0)


def _is_contiguous(circuit, gate_ids):
    members = set(gate_ids)
    qubits = {q for gid in gate_ids for q in circuit.gate(gid).qubits}
    positions = {g.id: k for k, g in enumerate(circuit.gates)}
    first = min(positions[g] for g in gate_ids)
    last = max(positions[g] for g in gate_ids)
    for g in circuit.gates[first : last + 1]:
        if g.id not in members and qubits.intersection(g.qubits):
            return False
    return True


def merge(circuit, component, nodes, sens, mode):
    """
    Merge one component.

    Returns
    -------
    (dict, set, int, numpy.ndarray)
        Replacement gates by id, ids of gates to delete, the core node and the
        member weights.
    """
    core, weights = merge_weights(component, sens)
    if len(component) == 1:
        return {}, set(), core, weights
    generators = {m: extract_generator(circuit.gate(m)) for m in component}
    others = [(w, generators[m]) for m, w in zip(component, weights) if m != core]
    x_new = merged_generator(generators[core], others)
    tie = min(gid for m in component for gid in nodes[m])
    replacements = {}
    deleted = set()
    if mode == MergeMode.REPLACE:
        for gid in nodes[core]:
            g = circuit.gate(gid)
            replacements[gid] = g.replace(
                kind=GateKind.GENERIC,
                theta=None,
                generator_override=x_new.on_support(g.qubits),
                tie=tie if len(nodes[core]) > 1 else None,
            )
        deleted = {gid for m in component if m != core for gid in nodes[m]}
    else:
        for m in component:
            for gid in nodes[m]:
                g = circuit.gate(gid)
                if g.kind in ROTATION_AXES:
                    theta = 2.0 * x_new.coeff_map.get(g.axis, 0.0)
                    replacements[gid] = g.replace(theta=theta, tie=tie)
                else:
                    replacements[gid] = g.replace(generator_override=x_new.on_support(g.qubits), tie=tie)
    return replacements, deleted, core, weights


def component_deviation(circuit, gate_ids, replacements, refs):
    """
    max over the batch of d_FS between the component's original gates and their
    merged counterparts, each applied in circuit order on their own.
    """
    ordered = [g for g in circuit.gates if g.id in set(gate_ids)]
    before = refs.amps
    after = refs.amps
    for g in ordered:
        before = apply_gate_batch(before, g, refs.num_qubits)
        if g.id in replacements:
            after = apply_gate_batch(after, replacements[g.id], refs.num_qubits)
    return float(np.max(fs_rows(before, after)))


def prune(circuit, objective, config):
    """
    One-shot pruning pass.

    Parameters
    ----------
    circuit : Circuit
    objective : train.Objective
        Supplies the sensitivity loss and the reference states.
    config : PruneConfig

    Returns
    -------
    (Circuit, PruneReport)
    """
    timing = {}
    rng = make_rng(config.seed)
    batch = objective.minibatch(config.batch_size, rng)
    refs = ReferenceBatch(batch.reference_states(config.batch_size, rng), circuit.num_qubits)
    params_before = circuit.parameter_count()

    with phase_timer(timing, "partition"):
        nodes = circuit_nodes(circuit)
        subgroups = partition(circuit, config.locality_policy)
    logger.info(
        f"Partitioned {len(nodes)} parameterized nodes into {len(subgroups)} subgroups "
        f"({config.locality_policy})"
    )

    pair_lists = [[] if config.emit_distances else None for _ in subgroups]
    with phase_timer(timing, "graph"):
        graphs = parallel_map(
            lambda k: build_graph(subgroups[k], circuit, refs, config, pair_lists[k]),
            range(len(subgroups)),
            config.threads,
        )
    logger.info(f"Redundancy graphs: {sum(len(g.edges) for g in graphs)} edges at epsilon={config.epsilon}")

    with phase_timer(timing, "components"):
        comps = [c for g in graphs for c in components(g)]
    comps.sort(key=lambda c: c[0])

    with phase_timer(timing, "sensitivity"):
        needed = {m: nodes[m] for c in comps if len(c) > 1 for m in c}
        sens = sensitivities(circuit, batch, needed, config.sensitivity_method) if needed else {}

    reports = []
    replacements = {}
    deleted = set()
    with phase_timer(timing, "merge"):
        for comp in comps:
            gate_ids = sorted(gid for m in comp for gid in nodes[m])
            new, gone, core, weights = merge(circuit, comp, nodes, sens, config.merge_mode)
            replacements.update(new)
            deleted |= gone
            if len(comp) > 1:
                eta = component_eta([extract_generator(circuit.gate(m)) for m in comp])
                deviation = component_deviation(circuit, gate_ids, new, refs)
                contiguous = _is_contiguous(circuit, gate_ids)
            else:
                eta, deviation, contiguous = 0.0, 0.0, True
            reports.append(
                ComponentReport(
                    core=core,
                    members=list(comp),
                    alphas=[float(w) for w in weights],
                    gate_ids=gate_ids,
                    eta=eta,
                    delta_max=delta_max(comp, config.epsilon, eta, config.c1, config.c2),
                    deviation=deviation,
                    contiguous=contiguous,
                )
            )
        gates = [replacements.get(g.id, g) for g in circuit.gates if g.id not in deleted]
        pruned = circuit.with_gates(gates, renumber=True)

    split = [r for r in reports if len(r.members) > 1 and not r.contiguous]
    if split:
        logger.warning(f"{len(split)} merged components are interleaved with other gates on their qubits")
    report = PruneReport(
        components=reports,
        params_before=params_before,
        params_after=pruned.parameter_count(),
        timing=timing,
        graphs=[g.summary() for g in graphs],
        config=config.to_dict(),
        pairs=[p for pairs in pair_lists if pairs for p in pairs],
    )
    logger.info(
        f"Pruned {report.params_before} -> {report.params_after} parameters "
        f"({report.compression:.2f}x) in {len(comps)} components"
    )
    return pruned, report
